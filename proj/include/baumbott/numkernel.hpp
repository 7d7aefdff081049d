#ifndef BAUMBOTT_NUMKERNEL_HPP
#define BAUMBOTT_NUMKERNEL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "baumbott/errors.hpp"

namespace baumbott {

using cplx = std::complex<double>;

/// Dense complex matrix, row-major. Small sizes only (nothing here exceeds
/// the 7x6 moduli-map derivative).
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

/// Relative magnitude below which a coefficient is treated as zero for
/// degree detection. All fixtures are O(1)-scaled.
inline constexpr double kCoeffDropTol = 1e-12;

namespace detail {
inline bool lex_less(const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}
}  // namespace detail

// ---------------------------------------------------------------------------
// UniPoly
// ---------------------------------------------------------------------------

/// Univariate polynomial, coefficients ascending in degree. The zero
/// polynomial has an empty coefficient list and degree() == -1.
class UniPoly {
  public:
    UniPoly() = default;
    explicit UniPoly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }

    static UniPoly constant(cplx a) { return UniPoly({a}); }

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    const std::vector<cplx>& coeffs() const { return c_; }

    cplx coeff(int k) const { return k >= 0 && k < static_cast<int>(c_.size()) ? c_[k] : cplx(0); }

    double max_abs_coeff() const {
        double m = 0;
        for (const auto& a : c_) m = std::max(m, std::abs(a));
        return m;
    }

    cplx eval(cplx z) const {
        cplx acc(0);
        for (int k = degree(); k >= 0; --k) acc = acc * z + c_[k];
        return acc;
    }

    UniPoly derivative() const {
        if (c_.size() <= 1) return UniPoly();
        std::vector<cplx> d(c_.size() - 1);
        for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
        return UniPoly(std::move(d));
    }

    UniPoly operator*(const UniPoly& o) const {
        if (is_zero() || o.is_zero()) return UniPoly();
        std::vector<cplx> r(c_.size() + o.c_.size() - 1, cplx(0));
        for (size_t i = 0; i < c_.size(); ++i)
            for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
        return UniPoly(std::move(r));
    }

    UniPoly operator+(const UniPoly& o) const {
        std::vector<cplx> r(std::max(c_.size(), o.c_.size()), cplx(0));
        for (size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
        for (size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
        return UniPoly(std::move(r));
    }

    UniPoly operator-(const UniPoly& o) const {
        std::vector<cplx> r(std::max(c_.size(), o.c_.size()), cplx(0));
        for (size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
        for (size_t i = 0; i < o.c_.size(); ++i) r[i] -= o.c_[i];
        return UniPoly(std::move(r));
    }

    UniPoly scaled(cplx s) const {
        std::vector<cplx> r(c_);
        for (auto& a : r) a *= s;
        return UniPoly(std::move(r));
    }

  private:
    // Drop trailing coefficients below kCoeffDropTol relative to the max
    // magnitude; a polynomial with no surviving leading term becomes zero.
    void trim() {
        double m = 0;
        for (const auto& a : c_) m = std::max(m, std::abs(a));
        if (m == 0) {
            c_.clear();
            return;
        }
        while (!c_.empty() && std::abs(c_.back()) <= kCoeffDropTol * m) c_.pop_back();
    }

    std::vector<cplx> c_;
};

// ---------------------------------------------------------------------------
// BiPoly
// ---------------------------------------------------------------------------

/// Dense bivariate polynomial. Coefficients are stored in the fixed graded
/// lexicographic monomial order with x before y:
///   [1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3, ...]
/// The list length is (degree+1)(degree+2)/2. This order is part of the
/// field-file format contract and must not change.
class BiPoly {
  public:
    BiPoly() : deg_(0), c_(1, cplx(0)) {}
    explicit BiPoly(int degree) : deg_(degree), c_(size_for(degree), cplx(0)) {}
    BiPoly(int degree, std::vector<cplx> coeffs) : deg_(degree), c_(std::move(coeffs)) {
        if (c_.size() != size_for(degree))
            throw error(errc::dimension_mismatch, "BiPoly coefficient list length mismatch");
    }

    static size_t size_for(int degree) {
        return static_cast<size_t>((degree + 1) * (degree + 2) / 2);
    }

    /// Position of x^i y^j in the monomial order.
    static size_t index(int i, int j) {
        const int d = i + j;
        return static_cast<size_t>(d * (d + 1) / 2 + j);
    }

    int degree() const { return deg_; }
    const std::vector<cplx>& coeffs() const { return c_; }

    cplx coeff(int i, int j) const {
        if (i < 0 || j < 0 || i + j > deg_) return cplx(0);
        return c_[index(i, j)];
    }

    void set_coeff(int i, int j, cplx a) {
        if (i < 0 || j < 0 || i + j > deg_)
            throw error(errc::degree_overflow, "monomial exceeds declared degree");
        c_[index(i, j)] = a;
    }

    double max_abs_coeff() const {
        double m = 0;
        for (const auto& a : c_) m = std::max(m, std::abs(a));
        return m;
    }

    bool is_zero(double rel_tol = kCoeffDropTol) const {
        const double m = max_abs_coeff();
        return m == 0 || m <= rel_tol;  // second case only for scale-free callers
    }

    /// Largest total degree with a coefficient above the drop tolerance, or
    /// -1 for the (numerically) zero polynomial.
    int actual_degree() const {
        const double m = max_abs_coeff();
        if (m == 0) return -1;
        for (int d = deg_; d >= 0; --d)
            for (int j = 0; j <= d; ++j)
                if (std::abs(coeff(d - j, j)) > kCoeffDropTol * m) return d;
        return -1;
    }

    cplx eval(cplx x, cplx y) const {
        // powers are tiny here (degree <= 4 in practice)
        std::vector<cplx> xp(deg_ + 1, cplx(1)), yp(deg_ + 1, cplx(1));
        for (int k = 1; k <= deg_; ++k) {
            xp[k] = xp[k - 1] * x;
            yp[k] = yp[k - 1] * y;
        }
        cplx acc(0);
        for (int d = 0; d <= deg_; ++d)
            for (int j = 0; j <= d; ++j) acc += c_[index(d - j, j)] * xp[d - j] * yp[j];
        return acc;
    }

    BiPoly dx() const {
        BiPoly r(std::max(deg_ - 1, 0));
        for (int d = 1; d <= deg_; ++d)
            for (int j = 0; j <= d; ++j) {
                const int i = d - j;
                if (i >= 1) r.c_[index(i - 1, j)] += double(i) * c_[index(i, j)];
            }
        return r;
    }

    BiPoly dy() const {
        BiPoly r(std::max(deg_ - 1, 0));
        for (int d = 1; d <= deg_; ++d)
            for (int j = 1; j <= d; ++j) {
                const int i = d - j;
                r.c_[index(i, j - 1)] += double(j) * c_[index(i, j)];
            }
        return r;
    }

    BiPoly operator+(const BiPoly& o) const {
        BiPoly r(std::max(deg_, o.deg_));
        for (int d = 0; d <= deg_; ++d)
            for (int j = 0; j <= d; ++j) r.c_[index(d - j, j)] += coeff(d - j, j);
        for (int d = 0; d <= o.deg_; ++d)
            for (int j = 0; j <= d; ++j) r.c_[index(d - j, j)] += o.coeff(d - j, j);
        return r;
    }

    BiPoly operator-(const BiPoly& o) const { return *this + o.scaled(cplx(-1)); }

    BiPoly operator*(const BiPoly& o) const {
        BiPoly r(deg_ + o.deg_);
        for (int d1 = 0; d1 <= deg_; ++d1)
            for (int j1 = 0; j1 <= d1; ++j1) {
                const cplx a = c_[index(d1 - j1, j1)];
                if (a == cplx(0)) continue;
                for (int d2 = 0; d2 <= o.deg_; ++d2)
                    for (int j2 = 0; j2 <= d2; ++j2) {
                        const cplx b = o.c_[index(d2 - j2, j2)];
                        if (b == cplx(0)) continue;
                        r.c_[index(d1 - j1 + d2 - j2, j1 + j2)] += a * b;
                    }
            }
        return r;
    }

    BiPoly scaled(cplx s) const {
        BiPoly r(*this);
        for (auto& a : r.c_) a *= s;
        return r;
    }

    /// Drop to the actual degree (coefficient list shrinks accordingly).
    BiPoly trimmed() const {
        const int d = std::max(actual_degree(), 0);
        BiPoly r(d);
        for (int dd = 0; dd <= d; ++dd)
            for (int j = 0; j <= dd; ++j) r.c_[index(dd - j, j)] = coeff(dd - j, j);
        return r;
    }

    /// Substitute x -> ax*x + bx*y + cx, y -> ay*x + by*y + cy.
    BiPoly compose_affine(cplx ax, cplx bx, cplx cx, cplx ay, cplx by, cplx cy) const {
        BiPoly lx(1), ly(1);
        lx.set_coeff(0, 0, cx); lx.set_coeff(1, 0, ax); lx.set_coeff(0, 1, bx);
        ly.set_coeff(0, 0, cy); ly.set_coeff(1, 0, ay); ly.set_coeff(0, 1, by);

        BiPoly acc(deg_);
        std::vector<BiPoly> xp, yp;  // powers of the substituted lines
        xp.reserve(deg_ + 1); yp.reserve(deg_ + 1);
        BiPoly one(0); one.set_coeff(0, 0, cplx(1));
        xp.push_back(one); yp.push_back(one);
        for (int k = 1; k <= deg_; ++k) {
            xp.push_back(xp.back() * lx);
            yp.push_back(yp.back() * ly);
        }
        for (int d = 0; d <= deg_; ++d)
            for (int j = 0; j <= d; ++j) {
                const cplx a = c_[index(d - j, j)];
                if (a == cplx(0)) continue;
                acc = acc + (xp[d - j] * yp[j]).scaled(a);
            }
        // composition with total-degree-1 substitutions preserves the bound
        BiPoly r(deg_);
        for (int d = 0; d <= deg_; ++d)
            for (int j = 0; j <= d; ++j) r.c_[index(d - j, j)] = acc.coeff(d - j, j);
        return r;
    }

    /// View as a polynomial in y with UniPoly-in-x coefficients (k-th entry
    /// multiplies y^k), or the transposed view for `in_x == false`.
    std::vector<UniPoly> collect(bool in_y_powers) const {
        std::vector<std::vector<cplx>> rows(deg_ + 1, std::vector<cplx>(deg_ + 1, cplx(0)));
        for (int d = 0; d <= deg_; ++d)
            for (int j = 0; j <= d; ++j) {
                const int i = d - j;
                if (in_y_powers)
                    rows[j][i] = c_[index(i, j)];
                else
                    rows[i][j] = c_[index(i, j)];
            }
        std::vector<UniPoly> out;
        out.reserve(rows.size());
        for (auto& r : rows) out.emplace_back(std::move(r));
        return out;
    }

    /// Top homogeneous part of total degree d, as coefficients of
    /// x^(d-j) y^j for j = 0..d.
    std::vector<cplx> homogeneous_part(int d) const {
        std::vector<cplx> h(d + 1, cplx(0));
        if (d > deg_) return h;
        for (int j = 0; j <= d; ++j) h[j] = c_[index(d - j, j)];
        return h;
    }

  private:
    int deg_;
    std::vector<cplx> c_;
};

// ---------------------------------------------------------------------------
// roots_univariate
// ---------------------------------------------------------------------------

namespace detail {

/// One pass of Aberth-Ehrlich simultaneous correction. Returns the largest
/// applied step magnitude.
inline double aberth_sweep(const UniPoly& p, const UniPoly& dp, std::vector<cplx>& z) {
    const int n = static_cast<int>(z.size());
    double max_step = 0;
    for (int i = 0; i < n; ++i) {
        const cplx pv = p.eval(z[i]);
        if (pv == cplx(0)) continue;
        cplx dv = dp.eval(z[i]);
        if (dv == cplx(0)) dv = cplx(std::numeric_limits<double>::min());
        const cplx newton = pv / dv;
        cplx repulsion(0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cplx d = z[i] - z[j];
            if (d == cplx(0)) d = cplx(1e-30, 1e-30);
            repulsion += cplx(1) / d;
        }
        const cplx denom = cplx(1) - newton * repulsion;
        const cplx step = (std::abs(denom) < 1e-300) ? newton : newton / denom;
        z[i] -= step;
        max_step = std::max(max_step, std::abs(step));
    }
    return max_step;
}

inline std::vector<cplx> companion_roots(const std::vector<cplx>& monic) {
    const int n = static_cast<int>(monic.size()) - 1;
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = cplx(1);
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -monic[i];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    std::vector<cplx> z(n);
    for (int i = 0; i < n; ++i) z[i] = es.eigenvalues()(i);
    return z;
}

inline bool roots_within_bound(const UniPoly& p, const std::vector<cplx>& z, double tol) {
    const double m = p.max_abs_coeff();
    const int n = p.degree();
    for (const auto& r : z) {
        const double bound = tol * m * std::pow(std::max(1.0, std::abs(r)), n);
        if (!(std::abs(p.eval(r)) <= bound)) return false;
    }
    return true;
}

}  // namespace detail

/// All complex roots of p, with multiplicity. Simultaneous Aberth-Ehrlich
/// iteration, companion-matrix fallback if it stalls. Each returned root z
/// satisfies |p(z)| <= tol * max|coeff| * max(1,|z|)^deg. Roots are sorted
/// by (Re, Im).
inline std::vector<cplx> roots_univariate(const UniPoly& p, double tol = 1e-10) {
    if (p.is_zero()) throw error(errc::zero_polynomial, "root finding on the zero polynomial");
    const int n = p.degree();
    if (n == 0) return {};

    std::vector<cplx> monic(p.coeffs().begin(), p.coeffs().end());
    const cplx lead = monic.back();
    for (auto& a : monic) a /= lead;
    const UniPoly pm{std::vector<cplx>(monic)};

    std::vector<cplx> z;
    if (n == 1) {
        z = {-monic[0]};
    } else if (n == 2) {
        // stable quadratic formula
        const cplx b = monic[1], c = monic[0];
        const cplx disc = std::sqrt(b * b - 4.0 * c);
        const cplx q = (std::real(std::conj(b) * disc) >= 0) ? -0.5 * (b + disc) : -0.5 * (b - disc);
        if (q == cplx(0)) {
            z = {cplx(0), -b};
        } else {
            z = {q, c / q};
        }
    } else {
        double cauchy = 0;
        for (int k = 0; k < n; ++k) cauchy = std::max(cauchy, std::abs(monic[k]));
        const double r0 = 1.0 + cauchy;
        z.resize(n);
        for (int i = 0; i < n; ++i) {
            const double th = 2.0 * std::numbers::pi * i / n + 0.376;
            z[i] = r0 * cplx(std::cos(th), std::sin(th));
        }
        const UniPoly dpm = pm.derivative();
        constexpr int kMaxSweeps = 200;
        bool ok = false;
        for (int it = 0; it < kMaxSweeps; ++it) {
            const double step = detail::aberth_sweep(pm, dpm, z);
            if (step < 1e-14 * (1.0 + r0)) {
                ok = true;
                break;
            }
        }
        if (!ok || !detail::roots_within_bound(pm, z, std::min(tol, 1e-8))) {
            z = detail::companion_roots(monic);
            // polish the fallback roots with plain Newton
            const UniPoly dp2 = pm.derivative();
            for (auto& r : z)
                for (int it = 0; it < 4; ++it) {
                    const cplx dv = dp2.eval(r);
                    if (std::abs(dv) < 1e-300) break;
                    r -= pm.eval(r) / dv;
                }
        }
    }

    if (!detail::roots_within_bound(pm, z, tol))
        throw error(errc::no_convergence, "root residual bound not met");
    std::sort(z.begin(), z.end(), detail::lex_less);
    return z;
}

// ---------------------------------------------------------------------------
// resultant_eliminate
// ---------------------------------------------------------------------------

enum class var_tag { x, y };

namespace detail {

/// Determinant by partial-pivot Gaussian elimination; matrices are tiny.
inline cplx det_inplace(std::vector<std::vector<cplx>>& a) {
    const int n = static_cast<int>(a.size());
    cplx det(1);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(a[k][k]);
        for (int r = k + 1; r < n; ++r)
            if (std::abs(a[r][k]) > best) {
                best = std::abs(a[r][k]);
                piv = r;
            }
        if (best == 0) return cplx(0);
        if (piv != k) {
            std::swap(a[piv], a[k]);
            det = -det;
        }
        det *= a[k][k];
        for (int r = k + 1; r < n; ++r) {
            const cplx f = a[r][k] / a[k][k];
            if (f == cplx(0)) continue;
            for (int c = k; c < n; ++c) a[r][c] -= f * a[k][c];
        }
    }
    return det;
}

inline double hadamard_bound(const std::vector<std::vector<cplx>>& a) {
    double b = 1;
    for (const auto& row : a) {
        double s = 0;
        for (const auto& e : row) s += std::norm(e);
        b *= std::sqrt(s);
    }
    return b;
}

}  // namespace detail

/// Resultant of P and Q with respect to the eliminated variable, returned as
/// a polynomial in the surviving one. The Sylvester determinant is evaluated
/// at roots of unity (pivoted elimination on the numeric matrix) and the
/// coefficients are recovered by inverse DFT; degrees here are small enough
/// that this is both exact in spirit and well conditioned.
inline UniPoly resultant_eliminate(const BiPoly& P, const BiPoly& Q, var_tag eliminated) {
    const bool elim_y = (eliminated == var_tag::y);
    // rows[k] = coefficient of (eliminated var)^k, as UniPoly in the survivor
    std::vector<UniPoly> pc = P.collect(elim_y);
    std::vector<UniPoly> qc = Q.collect(elim_y);

    const double pscale = P.max_abs_coeff();
    const double qscale = Q.max_abs_coeff();
    if (pscale == 0 && qscale == 0)
        throw error(errc::identically_zero_resultant, "both polynomials vanish");

    auto top_degree = [](const std::vector<UniPoly>& v, double scale) {
        for (int k = static_cast<int>(v.size()) - 1; k >= 0; --k)
            if (v[k].max_abs_coeff() > kCoeffDropTol * scale) return k;
        return -1;
    };
    const int m = top_degree(pc, pscale);
    const int l = top_degree(qc, qscale);
    if (m < 0 || l < 0)
        throw error(errc::identically_zero_resultant,
                    "a polynomial is identically zero in the eliminated variable");
    if (m == 0 && l == 0) return UniPoly::constant(cplx(1));

    auto survivor_degree = [](const std::vector<UniPoly>& v, int top) {
        int d = 0;
        for (int k = 0; k <= top; ++k) d = std::max(d, v[k].degree());
        return d;
    };
    const int dp = survivor_degree(pc, m);
    const int dq = survivor_degree(qc, l);
    const int D = l * dp + m * dq;  // degree bound for the determinant

    const int samples = D + 1;
    std::vector<cplx> values(samples);
    double max_val = 0, max_bound = 0;
    for (int t = 0; t < samples; ++t) {
        const double th = 2.0 * std::numbers::pi * t / samples;
        const cplx s(std::cos(th), std::sin(th));
        const int dim = m + l;
        std::vector<std::vector<cplx>> syl(dim, std::vector<cplx>(dim, cplx(0)));
        // l shifted rows of P (descending powers of the eliminated variable)
        for (int r = 0; r < l; ++r)
            for (int k = 0; k <= m; ++k) syl[r][r + k] = pc[m - k].eval(s);
        for (int r = 0; r < m; ++r)
            for (int k = 0; k <= l; ++k) syl[l + r][r + k] = qc[l - k].eval(s);
        max_bound = std::max(max_bound, detail::hadamard_bound(syl));
        values[t] = detail::det_inplace(syl);
        max_val = std::max(max_val, std::abs(values[t]));
    }

    if (max_val <= 1e-12 * std::max(max_bound, 1e-300))
        throw error(errc::identically_zero_resultant,
                    "Sylvester determinant vanishes identically (common factor)");

    // inverse DFT on the unit circle samples
    std::vector<cplx> coeffs(samples, cplx(0));
    for (int j = 0; j < samples; ++j) {
        cplx acc(0);
        for (int t = 0; t < samples; ++t) {
            const double th = -2.0 * std::numbers::pi * j * t / samples;
            acc += values[t] * cplx(std::cos(th), std::sin(th));
        }
        coeffs[j] = acc / double(samples);
    }
    return UniPoly(std::move(coeffs));
}

// ---------------------------------------------------------------------------
// eig2 / singular_values / numerical rank
// ---------------------------------------------------------------------------

/// Eigenvalues of a 2x2 complex matrix via the quadratic formula on
/// trace/determinant, sorted by (Re, Im). Repeated roots come back verbatim.
inline std::pair<cplx, cplx> eig2(const CMatrix& M) {
    if (M.rows() != 2 || M.cols() != 2)
        throw error(errc::dimension_mismatch, "eig2 expects a 2x2 matrix");
    const cplx tr = M(0, 0) + M(1, 1);
    const cplx det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    const cplx d = (std::real(std::conj(tr) * disc) >= 0) ? disc : -disc;
    const cplx l1 = 0.5 * (tr + d);
    const cplx l2 = (std::abs(l1) > 0) ? det / l1 : tr - l1;
    if (detail::lex_less(l2, l1)) return {l2, l1};
    return {l1, l2};
}

/// Singular values, descending.
inline std::vector<double> singular_values(const CMatrix& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    std::vector<double> s(svd.singularValues().data(),
                          svd.singularValues().data() + svd.singularValues().size());
    return s;
}

// ---------------------------------------------------------------------------
// newton_polish
// ---------------------------------------------------------------------------

/// Newton refinement of a root of the system (P, Q) from a nearby start.
/// Converges when max(|P|,|Q|) <= tol at the iterate.
inline std::pair<cplx, cplx> newton_polish(const BiPoly& P, const BiPoly& Q, cplx x, cplx y,
                                           double tol = 1e-12, int max_iters = 60) {
    const BiPoly Px = P.dx(), Py = P.dy(), Qx = Q.dx(), Qy = Q.dy();
    for (int it = 0; it < max_iters; ++it) {
        const cplx f = P.eval(x, y), g = Q.eval(x, y);
        if (std::max(std::abs(f), std::abs(g)) <= tol) return {x, y};
        const cplx a = Px.eval(x, y), b = Py.eval(x, y);
        const cplx c = Qx.eval(x, y), d = Qy.eval(x, y);
        const cplx det = a * d - b * c;
        const double jn = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
        if (std::abs(det) <= 1e-14 * jn * jn + 1e-300)
            throw error(errc::singular_jacobian, "Newton step ill-posed");
        x -= (d * f - b * g) / det;
        y -= (a * g - c * f) / det;
    }
    throw error(errc::no_convergence, "Newton iteration cap reached");
}

}  // namespace baumbott

#endif  // BAUMBOTT_NUMKERNEL_HPP
