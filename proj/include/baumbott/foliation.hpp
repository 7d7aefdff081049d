#ifndef BAUMBOTT_FOLIATION_HPP
#define BAUMBOTT_FOLIATION_HPP

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "baumbott/numkernel.hpp"

namespace baumbott {

/// Degeneracy threshold for |det J| relative to the squared Jacobian scale.
inline constexpr double kDegenTol = 1e-10;

// ---------------------------------------------------------------------------
// VectorField / AffineMap / Line
// ---------------------------------------------------------------------------

/// Polynomial vector field (P, Q) in the fixed affine chart. Immutable after
/// construction; the degree is the larger of the two component degrees.
class VectorField {
  public:
    VectorField(BiPoly P, BiPoly Q) : P_(P.trimmed()), Q_(Q.trimmed()) {
        n_ = std::max(P_.actual_degree(), Q_.actual_degree());
        if (n_ < 1)
            throw std::invalid_argument("vector field must have degree >= 1");
    }

    const BiPoly& P() const { return P_; }
    const BiPoly& Q() const { return Q_; }
    int degree() const { return n_; }

    double coeff_scale() const { return std::max(P_.max_abs_coeff(), Q_.max_abs_coeff()); }

    VectorField scaled(cplx c) const { return VectorField(P_.scaled(c), Q_.scaled(c)); }

  private:
    BiPoly P_, Q_;
    int n_;
};

/// Invertible affine map z -> A z + b of the phase plane.
struct AffineMap {
    Eigen::Matrix2cd A = Eigen::Matrix2cd::Identity();
    Eigen::Vector2cd b = Eigen::Vector2cd::Zero();

    static AffineMap identity() { return {}; }

    cplx det() const { return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0); }

    AffineMap inverse() const {
        const cplx d = det();
        const double scale = A.cwiseAbs().maxCoeff();
        if (std::abs(d) <= 1e-12 * scale * scale)
            throw std::invalid_argument("affine map not invertible");
        AffineMap inv;
        inv.A(0, 0) = A(1, 1) / d;
        inv.A(0, 1) = -A(0, 1) / d;
        inv.A(1, 0) = -A(1, 0) / d;
        inv.A(1, 1) = A(0, 0) / d;
        inv.b = -(inv.A * b);
        return inv;
    }

    std::pair<cplx, cplx> apply(cplx x, cplx y) const {
        return {A(0, 0) * x + A(0, 1) * y + b(0), A(1, 0) * x + A(1, 1) * y + b(1)};
    }
};

/// Pushforward of the field by an affine map: w(z) = A v(A^{-1}(z - b)).
/// Affine-equivalent fields have the same indices at corresponding points.
inline VectorField apply_affine(const VectorField& v, const AffineMap& T) {
    const AffineMap S = T.inverse();
    auto sub = [&](const BiPoly& p) {
        return p.compose_affine(S.A(0, 0), S.A(0, 1), S.b(0), S.A(1, 0), S.A(1, 1), S.b(1));
    };
    const BiPoly Pc = sub(v.P());
    const BiPoly Qc = sub(v.Q());
    return VectorField(Pc.scaled(T.A(0, 0)) + Qc.scaled(T.A(0, 1)),
                       Pc.scaled(T.A(1, 0)) + Qc.scaled(T.A(1, 1)));
}

/// Affine line a x + b y + c = 0, normalized so the largest-magnitude
/// coefficient equals 1.
struct Line {
    cplx a, b, c;

    Line(cplx a_, cplx b_, cplx c_) : a(a_), b(b_), c(c_) {
        if (a == cplx(0) && b == cplx(0))
            throw std::invalid_argument("line requires (a,b) != (0,0)");
        cplx pivot = a;
        double best = std::abs(a);
        if (std::abs(b) > best) { pivot = b; best = std::abs(b); }
        if (std::abs(c) > best) { pivot = c; best = std::abs(c); }
        a /= pivot; b /= pivot; c /= pivot;
    }

    cplx eval(cplx x, cplx y) const { return a * x + b * y + c; }

    /// Direction vector of the line (tangent), also its point at infinity.
    std::pair<cplx, cplx> direction() const { return {b, -a}; }
};

// ---------------------------------------------------------------------------
// Infinity charts
// ---------------------------------------------------------------------------

/// Field in an infinity chart. Chart 1 is (u,v) = (1/x, y/x), chart 2 is
/// (u,v) = (1/y, x/y); u = 0 is the line at infinity in both. `star` holds
/// u^n P(1/u, v/u) for chart 1 (resp. u^n Q(v/u, 1/u) for chart 2), so that
/// U = -u * star and V(0,v) is the dehomogenized binary form on the line.
struct ChartField {
    BiPoly U, V, star;
    int chart = 1;
};

namespace detail {

inline BiPoly star_transform(const BiPoly& p, int n, bool chart1) {
    // chart 1: x^i y^j -> u^(n-i-j) v^j ; chart 2: x^i y^j -> u^(n-i-j) v^i
    BiPoly r(n);
    for (int d = 0; d <= p.degree(); ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            const cplx a = p.coeff(i, j);
            if (a == cplx(0)) continue;
            const int uexp = n - i - j;
            const int vexp = chart1 ? j : i;
            r.set_coeff(uexp, vexp, r.coeff(uexp, vexp) + a);
        }
    return r;
}

inline BiPoly times_u(const BiPoly& p) {
    BiPoly r(p.degree() + 1);
    for (int d = 0; d <= p.degree(); ++d)
        for (int j = 0; j <= d; ++j) r.set_coeff(d - j + 1, j, p.coeff(d - j, j));
    return r;
}

inline BiPoly times_v(const BiPoly& p) {
    BiPoly r(p.degree() + 1);
    for (int d = 0; d <= p.degree(); ++d)
        for (int j = 0; j <= d; ++j) r.set_coeff(d - j, j + 1, p.coeff(d - j, j));
    return r;
}

/// Restriction of the chart field to the infinity line: V(0, v) as a
/// univariate polynomial (not trimmed; raw coefficients).
inline std::vector<cplx> restrict_to_line_at_infinity(const BiPoly& V) {
    std::vector<cplx> h(V.degree() + 1, cplx(0));
    for (int j = 0; j <= V.degree(); ++j) h[j] = V.coeff(0, j);
    return h;
}

}  // namespace detail

/// Coefficients of the binary form h(x,y) = x Q_n - y P_n of degree n+1,
/// listed as the coefficient of x^(n+1-j) y^j for j = 0..n+1. The field is
/// dicritical (no invariant infinity line) iff h vanishes identically.
inline std::vector<cplx> binary_form_at_infinity(const VectorField& v) {
    const int n = v.degree();
    const auto pn = v.P().homogeneous_part(n);
    const auto qn = v.Q().homogeneous_part(n);
    std::vector<cplx> h(n + 2, cplx(0));
    for (int j = 0; j <= n; ++j) {
        h[j] += qn[j];       // x * (coeff of x^(n-j) y^j in Q_n)
        h[j + 1] -= pn[j];   // y * (coeff of x^(n-j) y^j in P_n)
    }
    return h;
}

inline bool is_dicritical(const VectorField& v) {
    const auto h = binary_form_at_infinity(v);
    double m = 0;
    for (const auto& a : h) m = std::max(m, std::abs(a));
    return m <= kCoeffDropTol * std::max(v.coeff_scale(), 1e-300);
}

/// Extend the field to an infinity chart. Chart 1 keeps directions [x:y]
/// with finite v = y/x; chart 2 handles [0:1]. Throws DicriticalAtInfinity
/// when the top-degree parts are radial.
inline ChartField infinity_chart_field(const VectorField& v, int chart = 1) {
    if (is_dicritical(v))
        throw error(errc::dicritical_at_infinity, "top-degree parts are proportional to the radial field");
    const int n = v.degree();
    ChartField cf;
    cf.chart = chart;
    if (chart == 1) {
        const BiPoly ps = detail::star_transform(v.P(), n, true);
        const BiPoly qs = detail::star_transform(v.Q(), n, true);
        cf.star = ps;
        cf.U = detail::times_u(ps).scaled(cplx(-1));
        cf.V = qs - detail::times_v(ps);
    } else {
        const BiPoly ps = detail::star_transform(v.P(), n, false);
        const BiPoly qs = detail::star_transform(v.Q(), n, false);
        cf.star = qs;
        cf.U = detail::times_u(qs).scaled(cplx(-1));
        cf.V = ps - detail::times_v(qs);
    }
    return cf;
}

// ---------------------------------------------------------------------------
// Singular points
// ---------------------------------------------------------------------------

/// One singular point, finite or at infinity, with its local linear data.
/// For infinite points the Jacobian is taken in the chart where the point is
/// finite; it is lower triangular there, and `mu` is the eigenvalue whose
/// eigenvector is tangent to the infinity line. For degenerate points
/// (|det J| below kDegenTol * |J|^2) the ratio and nu are left unset.
struct SingPoint {
    bool at_infinity = false;
    cplx x, y;                    // finite location
    int chart = 0;                // 1 or 2 for infinite points
    cplx vparam;                  // chart coordinate on the infinity line
    cplx dir_x, dir_y;            // projective direction [x:y] (infinite only)
    CMatrix jacobian;             // 2x2
    cplx lambda, mu;
    std::optional<cplx> char_ratio;
    std::optional<cplx> nu;
    bool degenerate = false;
    double residual = 0;
};

struct SingSet {
    std::vector<SingPoint> infinite;
    std::vector<SingPoint> finite;
    int N = 0;

    std::vector<const SingPoint*> all() const {
        std::vector<const SingPoint*> out;
        out.reserve(infinite.size() + finite.size());
        for (const auto& p : infinite) out.push_back(&p);
        for (const auto& p : finite) out.push_back(&p);
        return out;
    }
};

/// Baum-Bott index from a 2x2 Jacobian: trace^2/det - 2 = l/m + m/l.
/// Invariant under eigenvalue swap and under J -> cJ.
inline cplx nu_index(const CMatrix& J, double tol = kDegenTol) {
    const cplx tr = J(0, 0) + J(1, 1);
    const cplx det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
    const double nrm = J.norm();
    if (std::abs(det) < tol * nrm * nrm)
        throw error(errc::degenerate_singularity, "nu undefined at degenerate point");
    return tr * tr / det - cplx(2);
}

namespace detail {

inline void attach_linear_data_finite(const VectorField& v, SingPoint& pt) {
    CMatrix J(2, 2);
    J(0, 0) = v.P().dx().eval(pt.x, pt.y);
    J(0, 1) = v.P().dy().eval(pt.x, pt.y);
    J(1, 0) = v.Q().dx().eval(pt.x, pt.y);
    J(1, 1) = v.Q().dy().eval(pt.x, pt.y);
    pt.jacobian = J;
    const auto [l1, l2] = eig2(J);
    pt.lambda = l1;
    pt.mu = l2;
    const cplx det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
    // degeneracy is judged against the field's own derivative scale so that
    // a point with an anomalously small Jacobian is flagged rather than
    // passing a self-relative test
    const double dscale =
        std::max({v.P().dx().max_abs_coeff(), v.P().dy().max_abs_coeff(),
                  v.Q().dx().max_abs_coeff(), v.Q().dy().max_abs_coeff()});
    const double local =
        dscale * std::pow(std::max({1.0, std::abs(pt.x), std::abs(pt.y)}),
                          std::max(v.degree() - 1, 0));
    const double nrm = std::max(J.norm(), local);
    if (std::abs(det) < kDegenTol * nrm * nrm) {
        pt.degenerate = true;
        return;
    }
    pt.char_ratio = l1 / l2;
    const cplx tr = J(0, 0) + J(1, 1);
    pt.nu = tr * tr / det - cplx(2);
}

/// Sort by successive floating keys, treating values that agree to a
/// relative 1e-9 as ties so coordinate roundoff cannot reorder well-separated
/// points. Each level uses an exact comparison (a strict weak ordering);
/// near-equal runs are refined recursively by the next key.
template <class T, class KeyFn, size_t K>
inline void cluster_sort(std::vector<T>& v, KeyFn key, std::integral_constant<size_t, K>,
                         size_t level = 0) {
    if (level >= K || v.size() <= 1) return;
    std::stable_sort(v.begin(), v.end(),
                     [&](const T& a, const T& b) { return key(a)[level] < key(b)[level]; });
    auto near = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
    };
    size_t run = 0;
    for (size_t i = 1; i <= v.size(); ++i) {
        if (i == v.size() || !near(key(v[i - 1])[level], key(v[i])[level])) {
            if (i - run > 1) {
                std::vector<T> chunk(std::make_move_iterator(v.begin() + run),
                                     std::make_move_iterator(v.begin() + i));
                cluster_sort(chunk, key, std::integral_constant<size_t, K>{}, level + 1);
                std::move(chunk.begin(), chunk.end(), v.begin() + run);
            }
            run = i;
        }
    }
}

}  // namespace detail

/// Isolated common roots of (P, Q): resultant elimination in each variable,
/// candidate pairing, Newton polish, dedup. Sorted lexicographically by
/// (Re x, Im x, Re y, Im y). Throws NonIsolatedSingularities when P and Q
/// share a polynomial factor.
inline std::vector<SingPoint> finite_singular_points(const VectorField& v, double tol = 1e-10) {
    UniPoly rx, ry;
    try {
        rx = resultant_eliminate(v.P(), v.Q(), var_tag::y);
        ry = resultant_eliminate(v.P(), v.Q(), var_tag::x);
    } catch (const error& e) {
        if (e.code() == errc::identically_zero_resultant)
            throw error(errc::non_isolated_singularities, "P and Q share a common factor");
        throw;
    }

    std::vector<cplx> xs = rx.degree() >= 1 ? roots_univariate(rx, 1e-8) : std::vector<cplx>{};
    std::vector<cplx> ys = ry.degree() >= 1 ? roots_univariate(ry, 1e-8) : std::vector<cplx>{};

    const double scale = std::max(v.coeff_scale(), 1e-300);
    std::vector<SingPoint> found;
    for (const cplx& x0 : xs)
        for (const cplx& y0 : ys) {
            const double local =
                scale * std::pow(std::max({1.0, std::abs(x0), std::abs(y0)}), v.degree());
            cplx xr, yr;
            try {
                std::tie(xr, yr) = newton_polish(v.P(), v.Q(), x0, y0, 1e-13 * local);
            } catch (const error&) {
                continue;  // candidate pair does not correspond to a common root
            }
            bool dup = false;
            for (const auto& q : found) {
                const double sep = std::abs(xr - q.x) + std::abs(yr - q.y);
                // wide enough to absorb the convergence basin of a multiple
                // root, far below any genuine point separation
                if (sep <= 1e-5 * (1.0 + std::abs(xr) + std::abs(yr))) {
                    dup = true;
                    break;
                }
            }
            if (dup) continue;
            SingPoint pt;
            pt.x = xr;
            pt.y = yr;
            pt.residual = std::max(std::abs(v.P().eval(xr, yr)), std::abs(v.Q().eval(xr, yr)));
            if (!(pt.residual <= tol * std::max(scale, 1.0) *
                                     std::pow(std::max({1.0, std::abs(xr), std::abs(yr)}), v.degree())))
                continue;
            detail::attach_linear_data_finite(v, pt);
            found.push_back(std::move(pt));
        }
    detail::cluster_sort(
        found,
        [](const SingPoint& p) {
            return std::array<double, 4>{p.x.real(), p.x.imag(), p.y.real(), p.y.imag()};
        },
        std::integral_constant<size_t, 4>{});
    return found;
}

/// Local linear data at a point (0, w) of an infinity chart:
/// lambda = -star(0, w) transverse to the line, mu = dV/dv(0, w) tangent.
inline SingPoint infinity_point_data(const ChartField& cf, cplx w) {
    SingPoint pt;
    pt.at_infinity = true;
    pt.chart = cf.chart;
    pt.vparam = w;
    if (cf.chart == 1) {
        pt.dir_x = cplx(1);
        pt.dir_y = w;
    } else {
        pt.dir_x = w;
        pt.dir_y = cplx(1);
    }
    // normalize direction so the largest-magnitude component is 1
    if (std::abs(pt.dir_y) > std::abs(pt.dir_x)) {
        pt.dir_x /= pt.dir_y;
        pt.dir_y = cplx(1);
    } else {
        pt.dir_y /= pt.dir_x;
        pt.dir_x = cplx(1);
    }

    const UniPoly hv{detail::restrict_to_line_at_infinity(cf.V)};
    const cplx lambda = -cf.star.eval(cplx(0), w);
    const cplx mu = hv.derivative().eval(w);
    const cplx vu = cf.V.dx().eval(cplx(0), w);  // dV/du at the point

    CMatrix J(2, 2);
    J(0, 0) = lambda;
    J(0, 1) = cplx(0);
    J(1, 0) = vu;
    J(1, 1) = mu;
    pt.jacobian = J;
    pt.lambda = lambda;
    pt.mu = mu;
    pt.residual = std::abs(hv.eval(w));

    // The matrix is triangular, so det = lambda mu and each factor can be
    // judged against the evaluation scale of the univariate polynomial that
    // produced it (a single threshold built from the full chart-field scale
    // overshoots badly at far-out roots).
    const UniPoly lam_poly{detail::restrict_to_line_at_infinity(cf.star)};
    const UniPoly dh = hv.derivative();
    const auto eval_scale = [&](const UniPoly& p) {
        return p.max_abs_coeff() *
               std::pow(std::max(1.0, std::abs(w)), std::max(p.degree(), 0));
    };
    const double slam = eval_scale(lam_poly);
    const double smu = eval_scale(dh);
    if (slam <= 0 || smu <= 0 || std::abs(lambda) < kDegenTol * slam ||
        std::abs(mu) < kDegenTol * smu) {
        pt.degenerate = true;
    } else {
        pt.char_ratio = lambda / mu;
        pt.nu = lambda / mu + mu / lambda;
    }
    return pt;
}

/// Singular points on the line at infinity. Roots of h(1,v) are processed in
/// chart 1; the direction [0:1] (present iff h(1,.) drops degree) is always
/// processed in chart 2. Sorted by (Re, Im) of the chart-1 parameter with
/// [0:1] last.
inline std::vector<SingPoint> infinite_singular_points(const VectorField& v, double tol = 1e-10) {
    const int n = v.degree();
    const ChartField c1 = infinity_chart_field(v, 1);
    UniPoly hv{detail::restrict_to_line_at_infinity(c1.V)};

    std::vector<SingPoint> out;
    std::vector<cplx> roots;
    if (hv.degree() >= 1)
        roots = roots_univariate(hv, tol);
    // collapse multiple roots into one point, remembered as degenerate: a
    // numerically split multiple root lands within ~sqrt(eps) of its cluster
    std::vector<cplx> kept;
    std::vector<bool> multiple;
    for (const cplx& r : roots) {
        bool dup = false;
        for (size_t j = 0; j < kept.size(); ++j)
            if (std::abs(r - kept[j]) <= 1e-6 * (1.0 + std::abs(r))) {
                multiple[j] = true;
                dup = true;
                break;
            }
        if (!dup) {
            kept.push_back(r);
            multiple.push_back(false);
        }
    }
    for (size_t i = 0; i < kept.size(); ++i) {
        SingPoint pt = infinity_point_data(c1, kept[i]);
        if (multiple[i]) {
            pt.degenerate = true;
            pt.char_ratio.reset();
            pt.nu.reset();
        }
        out.push_back(pt);
    }

    if (hv.degree() < n + 1) {
        // degree drop: [0:1] is singular, handled in the symmetric chart
        const ChartField c2 = infinity_chart_field(v, 2);
        out.push_back(infinity_point_data(c2, cplx(0)));
    }

    // chart 1 points in (Re, Im) order of the line parameter, [0:1] last
    detail::cluster_sort(
        out,
        [](const SingPoint& p) {
            return std::array<double, 3>{double(p.chart), p.vparam.real(), p.vparam.imag()};
        },
        std::integral_constant<size_t, 3>{});
    return out;
}

/// Full enumeration: the n+1 infinite points first, then the finite ones.
inline SingSet singular_points(const VectorField& v, double tol = 1e-10) {
    SingSet s;
    s.infinite = infinite_singular_points(v, tol);
    s.finite = finite_singular_points(v, tol);
    s.N = static_cast<int>(s.infinite.size() + s.finite.size());
    return s;
}

// ---------------------------------------------------------------------------
// Invariant lines and index identities
// ---------------------------------------------------------------------------

namespace detail {

/// Restrict a bivariate polynomial to the line a x + b y + c = 0,
/// substituting out whichever variable has the larger line coefficient.
inline UniPoly restrict_to_line(const BiPoly& p, const Line& l) {
    const bool sub_y = std::abs(l.b) >= std::abs(l.a);
    const cplx alpha = sub_y ? -l.a / l.b : -l.b / l.a;  // slope of the kept variable
    const cplx beta = sub_y ? -l.c / l.b : -l.c / l.a;
    // q(t) = p(t, alpha t + beta) or p(alpha t + beta, t)
    const int d = p.degree();
    std::vector<UniPoly> tp(d + 1);  // powers of (alpha t + beta)
    tp[0] = UniPoly::constant(cplx(1));
    const UniPoly lin{std::vector<cplx>{beta, alpha}};
    for (int k = 1; k <= d; ++k) tp[k] = tp[k - 1] * lin;
    UniPoly acc;
    for (int dd = 0; dd <= d; ++dd)
        for (int j = 0; j <= dd; ++j) {
            const int i = dd - j;
            const cplx a = p.coeff(i, j);
            if (a == cplx(0)) continue;
            // monomial x^i y^j
            const int kept = sub_y ? i : j;
            const int subd = sub_y ? j : i;
            UniPoly mono = tp[subd];
            std::vector<cplx> shift(kept, cplx(0));
            shift.insert(shift.end(), mono.coeffs().begin(), mono.coeffs().end());
            if (shift.empty()) shift.push_back(cplx(0));
            acc = acc + UniPoly(std::move(shift)).scaled(a);
        }
    return acc;
}

}  // namespace detail

/// True iff the line is invariant: l divides P dl/dx + Q dl/dy, tested by
/// restricting that combination to the line.
inline bool is_line_invariant(const VectorField& v, const Line& l, double tol = 1e-9) {
    const BiPoly D = v.P().scaled(l.a) + v.Q().scaled(l.b);
    const UniPoly r = detail::restrict_to_line(D, l);
    const bool sub_y = std::abs(l.b) >= std::abs(l.a);
    const double amp = std::max({1.0, std::abs(sub_y ? l.a / l.b : l.b / l.a),
                                 std::abs(sub_y ? l.c / l.b : l.c / l.a)});
    const double scale = std::max(D.max_abs_coeff(), 1e-300) * std::pow(amp, D.degree());
    return r.max_abs_coeff() <= tol * scale;
}

/// Sum of Baum-Bott indices over all singular points for a degree-n field.
/// The n = 2 value is 2.
inline cplx baum_bott_target(int n) {
    return cplx(double((n + 2) * (n + 2) - 2 * (n * n + n + 1)));
}

/// |sum of nu over all singular points - target|. All points must be
/// nondegenerate.
inline double verify_baum_bott(const VectorField& v, double tol = 1e-10) {
    const SingSet s = singular_points(v, tol);
    cplx acc(0);
    for (const SingPoint* p : s.all()) {
        if (p->degenerate || !p->nu)
            throw error(errc::degenerate_singularity, "Baum-Bott sum undefined: degenerate point");
        acc += *p->nu;
    }
    return std::abs(acc - baum_bott_target(v.degree()));
}

/// |sum of characteristic ratios at infinity - 1| (the line's
/// self-intersection number).
inline double verify_camacho_sad_infinity(const VectorField& v, double tol = 1e-10) {
    const auto pts = infinite_singular_points(v, tol);
    cplx acc(0);
    for (const auto& p : pts) {
        if (p.degenerate || !p.char_ratio)
            throw error(errc::degenerate_singularity, "Camacho-Sad sum undefined: degenerate point");
        acc += *p.char_ratio;
    }
    return std::abs(acc - cplx(1));
}

/// Camacho-Sad relation along an invariant affine line: the ratios
/// (transverse eigenvalue)/(tangent eigenvalue) over all singular points on
/// the projective closure of l sum to 1. The point of l at infinity
/// contributes the inverse of its characteristic ratio.
inline double verify_camacho_sad_line(const VectorField& v, const Line& l, double tol = 1e-10) {
    if (!is_line_invariant(v, l))
        throw error(errc::line_not_invariant, "Camacho-Sad sum requires an invariant line");
    const SingSet s = singular_points(v, tol);

    cplx acc(0);
    const auto [dx, dy] = l.direction();
    for (const auto& p : s.finite) {
        if (std::abs(l.eval(p.x, p.y)) >
            1e-8 * (1.0 + std::abs(p.x) + std::abs(p.y)))
            continue;
        if (p.degenerate)
            throw error(errc::degenerate_singularity, "degenerate point on the line");
        // the line direction is an eigenvector of J at a nondegenerate point
        const cplx w0 = p.jacobian(0, 0) * dx + p.jacobian(0, 1) * dy;
        const cplx w1 = p.jacobian(1, 0) * dx + p.jacobian(1, 1) * dy;
        const cplx mu_t = std::abs(dx) >= std::abs(dy) ? w0 / dx : w1 / dy;
        const double mismatch = std::max(std::abs(w0 - mu_t * dx), std::abs(w1 - mu_t * dy));
        if (mismatch > 1e-6 * p.jacobian.norm() * std::max(std::abs(dx), std::abs(dy)))
            throw error(errc::degenerate_singularity,
                        "line direction is not an eigenvector at an on-line point");
        if (std::abs(mu_t) < kDegenTol * p.jacobian.norm())
            throw error(errc::degenerate_singularity, "tangent eigenvalue vanishes");
        const cplx tr = p.jacobian(0, 0) + p.jacobian(1, 1);
        acc += (tr - mu_t) / mu_t;
    }

    // point of l on the infinity line: ratio inverts (mu there is tangent to
    // infinity, and the eigenvector transverse to infinity runs along l)
    bool found_inf = false;
    for (const auto& p : s.infinite) {
        const cplx cross = dx * p.dir_y - dy * p.dir_x;
        const double nn = (std::abs(dx) + std::abs(dy)) * (std::abs(p.dir_x) + std::abs(p.dir_y));
        if (std::abs(cross) <= 1e-6 * nn) {
            if (p.degenerate || !p.char_ratio)
                throw error(errc::degenerate_singularity, "degenerate point of the line at infinity");
            acc += cplx(1) / *p.char_ratio;
            found_inf = true;
            break;
        }
    }
    if (!found_inf)
        throw error(errc::degenerate_singularity,
                    "direction of the invariant line is not among the infinite singular points");
    return std::abs(acc - cplx(1));
}

// ---------------------------------------------------------------------------
// Darboux constructions
// ---------------------------------------------------------------------------

/// Field annihilating the Darboux integral f g^alpha: with
/// omega = g df + alpha f dg = A dx + B dy, returns v = (B, -A).
inline VectorField darboux_two_factor(const BiPoly& f, const BiPoly& g, cplx alpha) {
    if (f.actual_degree() > 2 || g.actual_degree() > 1)
        throw error(errc::degree_overflow, "darboux_two_factor expects deg f <= 2, deg g <= 1");
    if (alpha == cplx(0))
        throw std::invalid_argument("darboux_two_factor requires alpha != 0");
    const BiPoly A = g * f.dx() + (f * g.dx()).scaled(alpha);
    const BiPoly B = g * f.dy() + (f * g.dy()).scaled(alpha);
    return VectorField(B, A.scaled(cplx(-1)));
}

/// Largest coefficient magnitude of g (P f_x + Q f_y) + alpha f (P g_x + Q g_y);
/// identically zero exactly when v annihilates f g^alpha.
inline double darboux_annihilation_residual(const BiPoly& f, const BiPoly& g, cplx alpha,
                                            const VectorField& v) {
    const BiPoly lhs = (v.P() * f.dx() + v.Q() * f.dy()) * g;
    const BiPoly rhs = ((v.P() * g.dx() + v.Q() * g.dy()) * f).scaled(alpha);
    return (lhs + rhs).max_abs_coeff();
}

/// Quadratic field with the three invariant lines x=0, y=0, x+y=1 and
/// Darboux integral x^a y^b (x+y-1)^c:
///   v = ( x(b(x+y-1) + c y), -y(a(x+y-1) + c x) ).
inline VectorField three_line_field(cplx a, cplx b, cplx c) {
    BiPoly P(2), Q(2);
    // P = b x^2 + (b+c) x y - b x
    P.set_coeff(2, 0, b);
    P.set_coeff(1, 1, b + c);
    P.set_coeff(1, 0, -b);
    // Q = -(a+c) x y - a y^2 + a y
    Q.set_coeff(1, 1, -(a + c));
    Q.set_coeff(0, 2, -a);
    Q.set_coeff(0, 1, a);
    return VectorField(P, Q);
}

}  // namespace baumbott

#endif  // BAUMBOTT_FOLIATION_HPP
