#ifndef BAUMBOTT_MODULI_HPP
#define BAUMBOTT_MODULI_HPP

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "baumbott/foliation.hpp"
#include "baumbott/numkernel.hpp"
#include "baumbott/rng.hpp"

namespace baumbott {

/// Relative movement allowed when re-identifying a singular point across a
/// perturbed field; beyond this, label tracking is declared lost.
inline constexpr double kTrackTrustRadius = 0.05;

// ---------------------------------------------------------------------------
// RegularRep
// ---------------------------------------------------------------------------

/// Quadratic field written in the basis of quadratics vanishing at the three
/// anchor points (0,0), (2,0), (0,2):
///   P = p0 x(x+y-2) + p1 y(x+y-2) + p2 xy,   Q likewise with q.
/// `pin` is the index (0..5, p before q) of the coefficient normalized to 1;
/// -1 marks an unnormalized working vector.
struct RegularRep {
    std::array<cplx, 3> p{}, q{};
    int pin = -1;

    cplx coeff(int k) const { return k < 3 ? p[k] : q[k - 3]; }
    cplx& coeff(int k) { return k < 3 ? p[k] : q[k - 3]; }

    std::array<cplx, 6> flat() const { return {p[0], p[1], p[2], q[0], q[1], q[2]}; }
};

/// Scale so the first coefficient of (numerically) largest magnitude equals
/// exactly 1; magnitudes within a relative 1e-9 count as tied so roundoff
/// cannot flip the pin between symmetric coefficients.
inline RegularRep normalized(RegularRep r) {
    double maxmag = 0;
    for (int k = 0; k < 6; ++k) maxmag = std::max(maxmag, std::abs(r.coeff(k)));
    if (maxmag == 0) throw error(errc::zero_polynomial, "cannot normalize the zero representative");
    int pin = 0;
    for (int k = 0; k < 6; ++k)
        if (std::abs(r.coeff(k)) >= maxmag * (1.0 - 1e-9)) {
            pin = k;
            break;
        }
    const cplx pivot = r.coeff(pin);
    for (int k = 0; k < 6; ++k) r.coeff(k) /= pivot;
    r.coeff(pin) = cplx(1);
    r.pin = pin;
    return r;
}

/// Realize the representative as a vector field. The anchors are singular by
/// construction (every basis quadratic vanishes there).
inline VectorField from_regular(const RegularRep& rep) {
    auto build = [](const std::array<cplx, 3>& c) {
        BiPoly T(2);
        T.set_coeff(2, 0, c[0]);
        T.set_coeff(0, 2, c[1]);
        T.set_coeff(1, 1, c[0] + c[1] + c[2]);
        T.set_coeff(1, 0, -2.0 * c[0]);
        T.set_coeff(0, 1, -2.0 * c[1]);
        return T;
    };
    return VectorField(build(rep.p), build(rep.q));
}

namespace detail {

/// Inverse of from_regular's basis expansion, assuming the field already
/// vanishes at the anchors.
inline RegularRep read_rep_coeffs(const VectorField& v) {
    RegularRep r;
    r.p[0] = v.P().coeff(2, 0);
    r.p[1] = v.P().coeff(0, 2);
    r.p[2] = v.P().coeff(1, 1) - r.p[0] - r.p[1];
    r.q[0] = v.Q().coeff(2, 0);
    r.q[1] = v.Q().coeff(0, 2);
    r.q[2] = v.Q().coeff(1, 1) - r.q[0] - r.q[1];
    return r;
}

inline bool near_value(double a, double b) {
    return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

/// Affine map sending an ordered point triple to (0,0), (0,2), (2,0).
inline AffineMap map_triple_to_anchors(const std::array<std::pair<cplx, cplx>, 3>& src) {
    const cplx m00 = src[1].first - src[0].first, m01 = src[2].first - src[0].first;
    const cplx m10 = src[1].second - src[0].second, m11 = src[2].second - src[0].second;
    const cplx det = m00 * m11 - m01 * m10;
    const double scale = std::max({std::abs(m00), std::abs(m01), std::abs(m10), std::abs(m11)});
    if (std::abs(det) <= 1e-10 * scale * scale)
        throw error(errc::collinear_singularities, "triple spans no triangle");
    AffineMap T;  // A = N M^{-1} with N = [(0,2)^T (2,0)^T]
    T.A(0, 0) = (-cplx(2) * m10) / det;
    T.A(0, 1) = (cplx(2) * m00) / det;
    T.A(1, 0) = (cplx(2) * m11) / det;
    T.A(1, 1) = (-cplx(2) * m01) / det;
    T.b(0) = -(T.A(0, 0) * src[0].first + T.A(0, 1) * src[0].second);
    T.b(1) = -(T.A(1, 0) * src[0].first + T.A(1, 1) * src[0].second);
    return T;
}

/// Lexicographic comparison of two coordinate keys with roundoff-tolerant
/// ties (used for the anchor-triple tie-break).
inline bool key_lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (near_value(a[i], b[i])) continue;
        return a[i] < b[i];
    }
    return false;
}

}  // namespace detail

/// Output of the normal-form reduction: the representative, the affine map
/// that produced it, and the source coordinates of the chosen anchor triple
/// (in the order sent to (0,0), (0,2), (2,0)).
struct Regularization {
    RegularRep rep;
    AffineMap map;
    std::array<std::pair<cplx, cplx>, 3> sources;
};

/// Move a field to its regular representative: pick the triple of finite
/// nondegenerate singular points spanning the largest triangle (roundoff-near
/// areas tie-broken lexicographically), send it affinely to the anchors
/// (lex-sorted sources to lex-sorted targets (0,0), (0,2), (2,0)), and read
/// off the basis coefficients.
inline Regularization to_regular_representative(const VectorField& v) {
    if (v.degree() != 2)
        throw error(errc::dimension_mismatch,
                    "the regular-representative chart is defined for quadratic fields");
    const auto pts = finite_singular_points(v);
    std::vector<std::pair<cplx, cplx>> good;
    for (const auto& p : pts)
        if (!p.degenerate) good.emplace_back(p.x, p.y);
    if (good.size() < 3)
        throw error(errc::too_few_finite_singularities,
                    "normal form needs three nondegenerate finite points");

    auto key_of = [&](int i, int j, int k) {
        std::vector<double> key;
        for (int t : {i, j, k}) {
            key.push_back(good[t].first.real());
            key.push_back(good[t].first.imag());
            key.push_back(good[t].second.real());
            key.push_back(good[t].second.imag());
        }
        return key;
    };

    double span = 0;
    for (const auto& [x, y] : good) span = std::max({span, std::abs(x), std::abs(y)});

    int bi = -1, bj = -1, bk = -1;
    double best_area = -1;
    std::vector<double> best_key;
    const int m = static_cast<int>(good.size());
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            for (int k = j + 1; k < m; ++k) {
                const cplx ux = good[j].first - good[i].first;
                const cplx uy = good[j].second - good[i].second;
                const cplx wx = good[k].first - good[i].first;
                const cplx wy = good[k].second - good[i].second;
                const double area = std::abs(ux * wy - uy * wx);
                auto key = key_of(i, j, k);
                const bool take =
                    area > best_area * (1.0 + 1e-9) ||
                    (area >= best_area * (1.0 - 1e-9) && detail::key_lex_less(key, best_key));
                if (best_area < 0 || take) {
                    best_area = area;
                    best_key = std::move(key);
                    bi = i; bj = j; bk = k;
                }
            }
    if (best_area <= 1e-10 * (1.0 + span) * (1.0 + span))
        throw error(errc::collinear_singularities, "every candidate anchor triple is collinear");

    const std::array<std::pair<cplx, cplx>, 3> src{good[bi], good[bj], good[bk]};
    Regularization out;
    out.map = detail::map_triple_to_anchors(src);
    out.sources = src;
    out.rep = normalized(detail::read_rep_coeffs(apply_affine(v, out.map)));
    return out;
}

// ---------------------------------------------------------------------------
// ModuliVector
// ---------------------------------------------------------------------------

/// The value of the moduli map at a field: nu at every singular point, with
/// the infinite block first. `labeled` follows the enumeration order of the
/// points; the canonical blocks are sorted by (Re, Im) and serve as the
/// quotient-invariant form.
struct ModuliVector {
    std::vector<SingPoint> points;       // infinite block first, then finite
    std::vector<cplx> labeled;           // nu per point, same order
    std::vector<cplx> infinite_ratios;   // characteristic ratios at infinity
    std::vector<cplx> canonical_infinite;
    std::vector<cplx> canonical_finite;
    size_t n_infinite = 0;
};

inline ModuliVector moduli_vector(const VectorField& v, double tol = 1e-10) {
    const SingSet s = singular_points(v, tol);
    ModuliVector m;
    m.n_infinite = s.infinite.size();
    for (const SingPoint* p : s.all()) {
        if (p->degenerate || !p->nu)
            throw error(errc::degenerate_singularity, "moduli vector undefined: degenerate point");
        m.points.push_back(*p);
        m.labeled.push_back(*p->nu);
        if (p->at_infinity) {
            m.infinite_ratios.push_back(*p->char_ratio);
            m.canonical_infinite.push_back(*p->nu);
        } else {
            m.canonical_finite.push_back(*p->nu);
        }
    }
    std::sort(m.canonical_infinite.begin(), m.canonical_infinite.end(), detail::lex_less);
    std::sort(m.canonical_finite.begin(), m.canonical_finite.end(), detail::lex_less);
    return m;
}

namespace detail {

/// Minimal sum-of-squares pairing of two equal-length complex lists (n <= 7,
/// brute force over permutations). Returns the largest per-entry distance of
/// the optimal pairing; optionally writes sigma with b[sigma[i]] matched to
/// a[i].
inline double min_cost_assignment(const std::vector<cplx>& a, const std::vector<cplx>& b,
                                  std::vector<int>* sigma_out = nullptr) {
    if (a.size() != b.size())
        throw error(errc::dimension_mismatch, "assignment needs equal-size lists");
    const int n = static_cast<int>(a.size());
    if (n == 0) {
        if (sigma_out) sigma_out->clear();
        return 0;
    }
    std::vector<int> idx(n), best(n);
    std::iota(idx.begin(), idx.end(), 0);
    best = idx;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0;
        for (int i = 0; i < n; ++i) cost += std::norm(a[i] - b[idx[i]]);
        if (cost < best_cost) {
            best_cost = cost;
            best = idx;
        }
    } while (std::next_permutation(idx.begin(), idx.end()));
    double mx = 0;
    for (int i = 0; i < n; ++i) mx = std::max(mx, std::abs(a[i] - b[best[i]]));
    if (sigma_out) *sigma_out = best;
    return mx;
}

}  // namespace detail

/// Distances between two moduli values after optimal pairing: `joint` pairs
/// all points in one pool, `split` pairs the infinite and finite blocks
/// separately. Both are reported: whether a homeomorphism may trade finite
/// points for infinite ones is a modeling choice, not ours to hardcode.
struct MatchedDistance {
    double joint = 0;
    double split = 0;
};

inline MatchedDistance moduli_distance(const ModuliVector& a, const ModuliVector& b) {
    MatchedDistance d;
    std::vector<cplx> all_a(a.labeled), all_b(b.labeled);
    d.joint = detail::min_cost_assignment(all_a, all_b);
    const double di = detail::min_cost_assignment(a.canonical_infinite, b.canonical_infinite);
    const double df = detail::min_cost_assignment(a.canonical_finite, b.canonical_finite);
    d.split = std::max(di, df);
    return d;
}

// ---------------------------------------------------------------------------
// moduli_jacobian
// ---------------------------------------------------------------------------

struct JacobianReport {
    CMatrix matrix;                       // 7x6 derivative of the labeled map
    std::vector<double> singular_values;  // descending, 6 entries
    int rank = 0;
    double radial_residual = 0;           // |J r| for the scaling direction r = rep coefficients
};

/// Count of singular values at or above rel_tol times the largest.
inline int numerical_rank(const std::vector<double>& values, double rel_tol = 1e-4) {
    if (values.empty() || values[0] <= 0) return 0;
    int r = 0;
    for (double s : values)
        if (s >= rel_tol * values[0]) ++r;
    return r;
}

namespace detail {

inline double point_track_distance(const SingPoint& a, const SingPoint& b) {
    if (a.at_infinity != b.at_infinity) return std::numeric_limits<double>::infinity();
    if (a.at_infinity) {
        // chordal distance between projective directions
        const cplx cross = a.dir_x * b.dir_y - a.dir_y * b.dir_x;
        const double na = std::abs(a.dir_x) + std::abs(a.dir_y);
        const double nb = std::abs(b.dir_x) + std::abs(b.dir_y);
        return std::abs(cross) / (na * nb);
    }
    return (std::abs(a.x - b.x) + std::abs(a.y - b.y)) /
           (1.0 + std::abs(a.x) + std::abs(a.y));
}

/// nu of each point of w, listed in the order of the reference points; the
/// identification is nearest-neighbor within the trust radius (labels are
/// never re-derived by sorting, which is non-smooth at collisions).
inline std::vector<cplx> tracked_labeled_nu(const std::vector<SingPoint>& ref,
                                            const VectorField& w,
                                            double trust = kTrackTrustRadius) {
    const SingSet s = singular_points(w);
    const auto all = s.all();
    std::vector<char> used(all.size(), 0);
    std::vector<cplx> out(ref.size());
    for (size_t i = 0; i < ref.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int bidx = -1;
        for (size_t j = 0; j < all.size(); ++j) {
            const double d = point_track_distance(ref[i], *all[j]);
            if (d < best) {
                best = d;
                bidx = static_cast<int>(j);
            }
        }
        if (bidx < 0 || best > trust)
            throw error(errc::label_tracking_failure,
                        "perturbed singular point moved outside the trust radius");
        if (used[bidx])
            throw error(errc::label_tracking_failure,
                        "two reference points collapsed onto one perturbed point");
        used[bidx] = 1;
        if (all[bidx]->degenerate || !all[bidx]->nu)
            throw error(errc::degenerate_singularity, "perturbed point degenerate");
        out[i] = *all[bidx]->nu;
    }
    return out;
}

}  // namespace detail

/// Central-difference derivative of the labeled moduli map with respect to
/// the six representative coefficients (a real step h is enough: the map is
/// holomorphic, so the real directional derivative is the complex one).
inline JacobianReport moduli_jacobian(const RegularRep& rep, double h = 1e-5) {
    if (!(h >= 1e-7 && h <= 1e-4))
        throw std::invalid_argument("moduli_jacobian step must lie in [1e-7, 1e-4]");
    const VectorField base = from_regular(rep);
    const ModuliVector m0 = moduli_vector(base);
    const size_t npts = m0.points.size();

    JacobianReport rep_out;
    rep_out.matrix = CMatrix::Zero(npts, 6);
    for (int t = 0; t < 6; ++t) {
        RegularRep rplus = rep, rminus = rep;
        rplus.coeff(t) += h;
        rminus.coeff(t) -= h;
        const auto nup = detail::tracked_labeled_nu(m0.points, from_regular(rplus));
        const auto num = detail::tracked_labeled_nu(m0.points, from_regular(rminus));
        for (size_t i = 0; i < npts; ++i)
            rep_out.matrix(i, t) = (nup[i] - num[i]) / (2.0 * h);
    }

    rep_out.singular_values = singular_values(rep_out.matrix);
    rep_out.rank = numerical_rank(rep_out.singular_values);
    CVector radial(6);
    for (int k = 0; k < 6; ++k) radial(k) = rep.coeff(k);
    rep_out.radial_residual = (rep_out.matrix * radial).norm();
    return rep_out;
}

// ---------------------------------------------------------------------------
// dimension_report
// ---------------------------------------------------------------------------

struct DimensionReport {
    int dim_source;        // (n+1)(n+2) - 7: degree-n fields mod affine maps and scale
    int dim_target_bound;  // n^2 + n - 1: index values constrained by the two index sums
    int gap;               // 2n - 4
};

inline DimensionReport dimension_report(int n) {
    if (n < 2) throw std::invalid_argument("dimension_report requires n >= 2");
    return {(n + 1) * (n + 2) - 7, n * n + n - 1, 2 * n - 4};
}

// ---------------------------------------------------------------------------
// Anchor symmetries and rep-orbit comparison
// ---------------------------------------------------------------------------

namespace detail {

/// Distance between coefficient vectors up to one complex scale factor
/// (least-squares fit of the scale, then largest entry difference).
inline double projective_coeff_distance(const std::array<cplx, 6>& u,
                                        const std::array<cplx, 6>& w) {
    cplx num(0);
    double den = 0, umax = 0;
    for (int k = 0; k < 6; ++k) {
        num += u[k] * std::conj(w[k]);
        den += std::norm(w[k]);
        umax = std::max(umax, std::abs(u[k]));
    }
    if (den == 0 || umax == 0) return (den == 0 && umax == 0) ? 0 : 1e300;
    const cplx c = num / den;
    double d = 0;
    for (int k = 0; k < 6; ++k) d = std::max(d, std::abs(u[k] - c * w[k]));
    return d / umax;
}

}  // namespace detail

/// True when two representatives present the same point of the quotient,
/// i.e. the realized fields are affinely equivalent up to scale. Any
/// witnessing affine map must carry the anchor triple of `a` onto three
/// finite singular points of `b`, so trying every ordered source triple of
/// `b` is a complete test for generic quadratics.
inline bool same_rep_orbit(const RegularRep& a, const RegularRep& b, double tol = 1e-6) {
    const auto fa = a.flat();
    if (detail::projective_coeff_distance(fa, b.flat()) < tol) return true;
    const VectorField vb = from_regular(b);
    std::vector<std::pair<cplx, cplx>> pts;
    try {
        for (const auto& p : finite_singular_points(vb))
            if (!p.degenerate) pts.emplace_back(p.x, p.y);
    } catch (const error&) {
        return false;  // only the direct comparison above is available
    }
    const int m = static_cast<int>(pts.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                if (i == j || j == k || i == k) continue;
                AffineMap T;
                try {
                    T = detail::map_triple_to_anchors({pts[i], pts[j], pts[k]});
                } catch (const error&) {
                    continue;
                }
                const RegularRep bs = detail::read_rep_coeffs(apply_affine(vb, T));
                if (detail::projective_coeff_distance(fa, bs.flat()) < tol) return true;
            }
    return false;
}

// ---------------------------------------------------------------------------
// darboux_family_scan
// ---------------------------------------------------------------------------

/// The quadratic member of the one-parameter family with first integral
/// (xy + x + y)(x - k y)^alpha.
inline VectorField darboux_family_member(cplx alpha, cplx k) {
    BiPoly f(2), g(1);
    f.set_coeff(1, 1, cplx(1));
    f.set_coeff(1, 0, cplx(1));
    f.set_coeff(0, 1, cplx(1));
    g.set_coeff(1, 0, cplx(1));
    g.set_coeff(0, 1, -k);
    return darboux_two_factor(f, g, alpha);
}

struct DarbouxMember {
    cplx k;
    bool ok = false;
    std::string error_code;  // stable error name when !ok
    ModuliVector moduli;
    RegularRep rep;
    int jacobian_rank = -1;
    double sigma1 = 0;
    double k_dir_pushed_rel = 0;  // |J t'(k)| / (sigma1 |t'(k)|)
    double k_dir_direct_rel = 0;  // matched moduli distance across k +- dk, relative
};

struct DarbouxScan {
    cplx alpha;
    std::vector<DarbouxMember> members;
    double max_matched_joint = 0;
    double max_matched_split = 0;
};

namespace detail {

/// Rep coordinates of a field near a reference member, reusing the reference
/// anchor assignment and pin so the chart depends smoothly on the parameter.
inline std::array<cplx, 6> rep_continuation(const VectorField& nearby,
                                            const std::array<std::pair<cplx, cplx>, 3>& ref_src,
                                            int pin) {
    const auto pts = finite_singular_points(nearby);
    std::array<std::pair<cplx, cplx>, 3> src;
    for (int i = 0; i < 3; ++i) {
        double best = std::numeric_limits<double>::infinity();
        const SingPoint* bp = nullptr;
        for (const auto& p : pts) {
            if (p.degenerate) continue;
            const double d = (std::abs(p.x - ref_src[i].first) + std::abs(p.y - ref_src[i].second)) /
                             (1.0 + std::abs(p.x) + std::abs(p.y));
            if (d < best) {
                best = d;
                bp = &p;
            }
        }
        if (!bp || best > kTrackTrustRadius)
            throw error(errc::label_tracking_failure, "anchor tracking lost across the family step");
        src[i] = {bp->x, bp->y};
    }
    const AffineMap T = map_triple_to_anchors(src);
    const RegularRep raw = read_rep_coeffs(apply_affine(nearby, T));
    const cplx pivot = raw.coeff(pin);
    if (std::abs(pivot) < 1e-12)
        throw error(errc::label_tracking_failure, "pinned coefficient vanished on the family step");
    std::array<cplx, 6> out;
    for (int k = 0; k < 6; ++k) out[k] = raw.coeff(k) / pivot;
    return out;
}

}  // namespace detail

/// Walk the family over a k-grid: per member, the canonical moduli value and
/// the evidence that the k-direction lies in the kernel of the moduli
/// derivative. Member failures are recorded and the scan continues.
inline DarbouxScan darboux_family_scan(cplx alpha, const std::vector<cplx>& k_grid,
                                       double dk = 1e-5) {
    if (alpha == cplx(0)) throw std::invalid_argument("family scan requires alpha != 0");
    DarbouxScan scan;
    scan.alpha = alpha;
    for (const cplx& k : k_grid) {
        DarbouxMember mem;
        mem.k = k;
        try {
            const VectorField v = darboux_family_member(alpha, k);
            mem.moduli = moduli_vector(v);
            const Regularization reg = to_regular_representative(v);
            mem.rep = reg.rep;
            const JacobianReport J = moduli_jacobian(reg.rep);
            mem.jacobian_rank = J.rank;
            mem.sigma1 = J.singular_values.empty() ? 0 : J.singular_values[0];

            // tangent of the rep curve k -> t(k), same anchors and pin
            const auto tp = detail::rep_continuation(darboux_family_member(alpha, k + dk),
                                                     reg.sources, reg.rep.pin);
            const auto tm = detail::rep_continuation(darboux_family_member(alpha, k - dk),
                                                     reg.sources, reg.rep.pin);
            CVector tdot(6);
            for (int i = 0; i < 6; ++i) tdot(i) = (tp[i] - tm[i]) / (2.0 * dk);
            const double tn = tdot.norm();
            if (tn > 0 && mem.sigma1 > 0)
                mem.k_dir_pushed_rel = (J.matrix * tdot).norm() / (mem.sigma1 * tn);

            // direct check: the moduli value does not move along the family
            const ModuliVector mp = moduli_vector(darboux_family_member(alpha, k + dk));
            const ModuliVector mm = moduli_vector(darboux_family_member(alpha, k - dk));
            const MatchedDistance md = moduli_distance(mp, mm);
            if (mem.sigma1 > 0)
                mem.k_dir_direct_rel = md.split / (2.0 * dk * mem.sigma1);
            mem.ok = true;
        } catch (const error& e) {
            mem.ok = false;
            mem.error_code = e.code_name();
        }
        scan.members.push_back(std::move(mem));
    }
    for (size_t i = 0; i < scan.members.size(); ++i)
        for (size_t j = i + 1; j < scan.members.size(); ++j) {
            if (!scan.members[i].ok || !scan.members[j].ok) continue;
            const MatchedDistance d = moduli_distance(scan.members[i].moduli, scan.members[j].moduli);
            scan.max_matched_joint = std::max(scan.max_matched_joint, d.joint);
            scan.max_matched_split = std::max(scan.max_matched_split, d.split);
        }
    return scan;
}

// ---------------------------------------------------------------------------
// fiber_search
// ---------------------------------------------------------------------------

struct FiberOptions {
    double tol = 1e-8;      // matched-distance convergence target
    int max_iters = 100;
    int max_halvings = 8;
    double fd_step = 1e-5;
    // Orbit-identification radius for deduplication. At a target whose points
    // all have characteristic ratio +-1 the moduli map is critical (d(r+1/r)
    // vanishes at r = +-1), the fiber equation is locally quadratic, and
    // converged iterates resolve the quotient point only to ~sqrt(tol); keep
    // dedup_tol ~ 10 sqrt(tol), well below distances between genuinely
    // different fiber points (~1e-2 for the blow-down family).
    double dedup_tol = 1e-3;
};

struct FiberResult {
    std::vector<RegularRep> solutions;      // distinct quotient points, normalized
    std::vector<double> matched_distances;  // split-assignment distance per solution
    int attempted = 0;
    int converged = 0;
    int failed = 0;
    bool blow_down_suspected = false;  // three or more distinct points over one target
};

namespace detail {

/// Residual and row permutation matching the current labeled moduli to the
/// target, block by block (infinite to infinite, finite to finite).
struct MatchedResidual {
    CVector r;                 // ordered by target labels
    std::vector<int> row_map;  // current-enumeration row for each target row
    double cost = 0;           // sum |r|^2
    double distance = 0;       // largest block-matched entry distance
};

inline MatchedResidual match_to_target(const ModuliVector& target, const ModuliVector& cur) {
    const size_t ni = target.n_infinite;
    if (cur.n_infinite != ni || cur.labeled.size() != target.labeled.size())
        throw error(errc::label_tracking_failure, "point count changed during the search");
    std::vector<cplx> ti(target.labeled.begin(), target.labeled.begin() + ni);
    std::vector<cplx> tf(target.labeled.begin() + ni, target.labeled.end());
    std::vector<cplx> ci(cur.labeled.begin(), cur.labeled.begin() + ni);
    std::vector<cplx> cf(cur.labeled.begin() + ni, cur.labeled.end());
    std::vector<int> si, sf;
    const double di = min_cost_assignment(ti, ci, &si);
    const double df = min_cost_assignment(tf, cf, &sf);

    MatchedResidual out;
    const size_t n = target.labeled.size();
    out.r = CVector::Zero(n);
    out.row_map.resize(n);
    for (size_t i = 0; i < ni; ++i) {
        out.r(i) = ci[si[i]] - ti[i];
        out.row_map[i] = si[i];
    }
    for (size_t i = 0; i + ni < n; ++i) {
        out.r(ni + i) = cf[sf[i]] - tf[i];
        out.row_map[ni + i] = static_cast<int>(ni) + sf[i];
    }
    out.cost = out.r.squaredNorm();
    out.distance = std::max(di, df);
    return out;
}

/// Truncated-SVD least-squares step for J delta = -r.
inline CVector gauss_newton_step(const CMatrix& J, const CVector& r) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() ? 1e-8 * sv(0) : 0;
    CVector y = svd.matrixU().adjoint() * (-r);
    for (int i = 0; i < sv.size(); ++i) y(i) = (sv(i) > cut) ? y(i) / sv(i) : cplx(0);
    return svd.matrixV() * y;
}

}  // namespace detail

/// Damped Gauss-Newton search for representatives whose moduli value matches
/// the target, from the given starts. Converged points are deduplicated
/// modulo anchor permutations and scale; three or more distinct survivors
/// flag the target as a suspected blow-down value.
inline FiberResult fiber_search(const ModuliVector& target,
                                const std::vector<RegularRep>& starts, FiberOptions opt = {}) {
    FiberResult result;
    for (const RegularRep& start : starts) {
        ++result.attempted;
        RegularRep cur = start;
        bool converged = false;
        double final_distance = 0;
        try {
            ModuliVector mv = moduli_vector(from_regular(cur));
            detail::MatchedResidual res = detail::match_to_target(target, mv);
            for (int it = 0; it < opt.max_iters; ++it) {
                if (res.distance < opt.tol) {
                    converged = true;
                    final_distance = res.distance;
                    break;
                }
                const JacobianReport J = moduli_jacobian(cur, opt.fd_step);
                CMatrix Jm(J.matrix.rows(), J.matrix.cols());
                for (size_t i = 0; i < res.row_map.size(); ++i)
                    Jm.row(i) = J.matrix.row(res.row_map[i]);
                const CVector delta = detail::gauss_newton_step(Jm, res.r);

                bool accepted = false;
                double lambda = 1.0;
                for (int halving = 0; halving <= opt.max_halvings; ++halving) {
                    RegularRep trial = cur;
                    for (int k = 0; k < 6; ++k) trial.coeff(k) += lambda * delta(k);
                    try {
                        ModuliVector tv = moduli_vector(from_regular(trial));
                        detail::MatchedResidual tres = detail::match_to_target(target, tv);
                        if (tres.cost < res.cost * (1.0 - 1e-6)) {
                            cur = trial;
                            res = std::move(tres);
                            accepted = true;
                            break;
                        }
                    } catch (const error&) {
                        // trial left the admissible set; shorten the step
                    }
                    lambda *= 0.5;
                }
                if (!accepted) break;  // stalled
            }
            if (!converged && res.distance < opt.tol) {
                converged = true;
                final_distance = res.distance;
            }
        } catch (const error&) {
            // start failed outright (degenerate field etc.)
        }

        if (!converged) {
            ++result.failed;
            continue;
        }
        ++result.converged;
        const RegularRep sol = normalized(cur);
        bool duplicate = false;
        for (const RegularRep& known : result.solutions)
            if (same_rep_orbit(sol, known, opt.dedup_tol)) {
                duplicate = true;
                break;
            }
        if (!duplicate) {
            result.solutions.push_back(sol);
            result.matched_distances.push_back(final_distance);
        }
    }
    result.blow_down_suspected = result.solutions.size() >= 3;
    return result;
}

/// Seeded random starts: i.i.d. standard-complex-normal coefficients.
inline std::vector<RegularRep> random_reps(std::uint64_t seed, int count) {
    Rng rng(seed);
    std::vector<RegularRep> out(count);
    for (auto& r : out)
        for (int k = 0; k < 6; ++k) r.coeff(k) = rng.complex_normal();
    return out;
}

/// Starts scattered around a center representative by complex-normal noise
/// of the given scale.
inline std::vector<RegularRep> perturbed_reps(const RegularRep& center, std::uint64_t seed,
                                              int count, double scale) {
    Rng rng(seed);
    std::vector<RegularRep> out(count, center);
    for (auto& r : out)
        for (int k = 0; k < 6; ++k) r.coeff(k) += scale * rng.complex_normal();
    return out;
}

/// Restart-driven form: seeded starts scattered around a center rep.
inline FiberResult fiber_search(const ModuliVector& target, const RegularRep& center,
                                int restarts, std::uint64_t seed, double tol,
                                double spread = 1e-3) {
    FiberOptions opt;
    opt.tol = tol;
    return fiber_search(target, perturbed_reps(center, seed, restarts, spread), opt);
}

}  // namespace baumbott

#endif  // BAUMBOTT_MODULI_HPP
