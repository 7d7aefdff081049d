#ifndef BAUMBOTT_ERRORS_HPP
#define BAUMBOTT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace baumbott {

/// Stable error identifiers. The CLI surfaces these names verbatim in
/// report error logs, so they are part of the external contract.
enum class errc {
    zero_polynomial,
    no_convergence,
    identically_zero_resultant,
    singular_jacobian,
    non_isolated_singularities,
    degenerate_singularity,
    dicritical_at_infinity,
    too_few_finite_singularities,
    collinear_singularities,
    label_tracking_failure,
    trajectory_escape,
    step_limit_exceeded,
    near_singular_transversal,
    extrapolation_unstable,
    line_not_invariant,
    degree_overflow,
    parse_error,
    dimension_mismatch,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::zero_polynomial:              return "ZeroPolynomial";
        case errc::no_convergence:               return "NoConvergence";
        case errc::identically_zero_resultant:   return "IdenticallyZeroResultant";
        case errc::singular_jacobian:            return "SingularJacobian";
        case errc::non_isolated_singularities:   return "NonIsolatedSingularities";
        case errc::degenerate_singularity:       return "DegenerateSingularity";
        case errc::dicritical_at_infinity:       return "DicriticalAtInfinity";
        case errc::too_few_finite_singularities: return "TooFewFiniteSingularities";
        case errc::collinear_singularities:      return "CollinearSingularities";
        case errc::label_tracking_failure:       return "LabelTrackingFailure";
        case errc::trajectory_escape:            return "TrajectoryEscape";
        case errc::step_limit_exceeded:          return "StepLimitExceeded";
        case errc::near_singular_transversal:    return "NearSingularTransversal";
        case errc::extrapolation_unstable:       return "ExtrapolationUnstable";
        case errc::line_not_invariant:           return "LineNotInvariant";
        case errc::degree_overflow:              return "DegreeOverflow";
        case errc::parse_error:                  return "ParseError";
        case errc::dimension_mismatch:           return "DimensionMismatch";
    }
    return "UnknownError";
}

/// Input-rejection errors map to CLI exit code 2, everything else to 1.
inline bool errc_is_input_rejection(errc c) {
    switch (c) {
        case errc::zero_polynomial:
        case errc::identically_zero_resultant:
        case errc::non_isolated_singularities:
        case errc::degenerate_singularity:
        case errc::dicritical_at_infinity:
        case errc::too_few_finite_singularities:
        case errc::collinear_singularities:
        case errc::line_not_invariant:
        case errc::degree_overflow:
        case errc::parse_error:
        case errc::dimension_mismatch:
            return true;
        default:
            return false;
    }
}

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }
    const char* code_name() const noexcept { return errc_name(code_); }

  private:
    errc code_;
};

}  // namespace baumbott

#endif  // BAUMBOTT_ERRORS_HPP
