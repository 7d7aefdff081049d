#ifndef BAUMBOTT_HOLONOMY_HPP
#define BAUMBOTT_HOLONOMY_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "baumbott/foliation.hpp"

namespace baumbott {

inline constexpr double kTau = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Transverse ODE integration
// ---------------------------------------------------------------------------

/// Tolerances for integrating the transverse equation along leaf loops.
struct IntegratorOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    long max_steps = 1000000;  // attempted steps across the whole path
};

/// Circle in the v-plane of one infinity chart: v(theta) = center +
/// radius e^{i theta orientation}, theta from base_angle to base_angle + 2pi.
struct LoopSpec {
    cplx center;
    double radius = 0;
    int orientation = 1;  // +1 counterclockwise, -1 clockwise
    double base_angle = 0;
};

/// Holonomy germ of the infinity leaf along one loop: the return map
/// u0 -> u(2pi) of du/dtheta = (dv/dtheta) U(u,v)/V(u,v). The leaf u = 0 is
/// fixed exactly (every monomial of U carries a factor of u).
struct HolonomyGerm {
    ChartField field;
    LoopSpec loop;
    IntegratorOptions opt;
};

namespace detail {

/// One smooth stretch of a path in the v-plane, parameterized over [0,1]:
/// either a circular arc with a signed angular sweep or a straight segment.
struct PathPiece {
    bool is_arc = false;
    cplx a, b;     // segment endpoints
    cplx center;   // arc data
    double radius = 0;
    double theta0 = 0, theta1 = 0;

    static PathPiece arc(cplx c, double r, double t0, double t1) {
        PathPiece p;
        p.is_arc = true;
        p.center = c;
        p.radius = r;
        p.theta0 = t0;
        p.theta1 = t1;
        return p;
    }
    static PathPiece segment(cplx from, cplx to) {
        PathPiece p;
        p.a = from;
        p.b = to;
        return p;
    }

    cplx at(double t) const {
        if (!is_arc) return a + t * (b - a);
        const double th = theta0 + t * (theta1 - theta0);
        return center + radius * cplx(std::cos(th), std::sin(th));
    }
    cplx velocity(double t) const {
        if (!is_arc) return b - a;
        const double th = theta0 + t * (theta1 - theta0);
        return cplx(0, theta1 - theta0) * radius * cplx(std::cos(th), std::sin(th));
    }
    PathPiece reversed() const {
        PathPiece p = *this;
        if (is_arc) {
            p.theta0 = theta1;
            p.theta1 = theta0;
        } else {
            p.a = b;
            p.b = a;
        }
        return p;
    }
};

/// du/dt along the piece. The transversal polynomial must stay above the
/// noise floor of its own evaluation scale, else the loop runs too close to
/// a singular direction for the result to mean anything.
inline cplx transverse_rhs(const ChartField& cf, const PathPiece& pc, double t, cplx u) {
    const cplx v = pc.at(t);
    const cplx Vval = cf.V.eval(u, v);
    const double vscale =
        cf.V.max_abs_coeff() * std::pow(std::max(1.0, std::abs(v)), cf.V.degree());
    if (std::abs(Vval) < 1e-6 * vscale)
        throw error(errc::near_singular_transversal,
                    "transversal polynomial vanishes along the loop");
    return pc.velocity(t) * cf.U.eval(u, v) / Vval;
}

/// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince pair) over one piece,
/// real parameter, complex state. `budget` counts attempted steps across a
/// whole multi-piece path.
inline cplx integrate_piece(const ChartField& cf, const PathPiece& pc, cplx u,
                            const IntegratorOptions& opt, long& budget) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b* rows of the embedded 4th-order solution
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    double t = 0, h = 0.1;
    while (t < 1.0 - 1e-15) {
        if (--budget < 0)
            throw error(errc::step_limit_exceeded, "integration step budget exhausted");
        h = std::min(h, 1.0 - t);

        const cplx k1 = transverse_rhs(cf, pc, t, u);
        const cplx k2 = transverse_rhs(cf, pc, t + c2 * h, u + h * (a21 * k1));
        const cplx k3 = transverse_rhs(cf, pc, t + c3 * h, u + h * (a31 * k1 + a32 * k2));
        const cplx k4 =
            transverse_rhs(cf, pc, t + c4 * h, u + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const cplx k5 = transverse_rhs(cf, pc, t + c5 * h,
                                       u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const cplx k6 = transverse_rhs(
            cf, pc, t + h, u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const cplx u5 = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const cplx k7 = transverse_rhs(cf, pc, t + h, u5);

        const double err =
            std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        const double tol =
            opt.abs_tol + opt.rel_tol * std::max(std::abs(u), std::abs(u5));
        const bool finite = std::isfinite(err) && std::isfinite(std::abs(u5));

        if (finite && err <= tol) {
            t += h;
            u = u5;
            if (std::abs(u) > 0.5)
                throw error(errc::trajectory_escape, "trajectory left the chart collar");
        }
        const double grow =
            !finite ? 0.25 : (err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0);
        h *= std::clamp(grow, 0.25, 4.0);
        if (h < 1e-14)
            throw error(errc::no_convergence, "step size underflow along the loop");
    }
    return u;
}

inline cplx integrate_path(const ChartField& cf, const std::vector<PathPiece>& path, cplx u,
                           const IntegratorOptions& opt) {
    long budget = opt.max_steps;
    for (const PathPiece& pc : path) u = integrate_piece(cf, pc, u, opt, budget);
    return u;
}

}  // namespace detail

/// Return map of the germ's loop applied to u0.
inline cplx holonomy_map(const HolonomyGerm& germ, cplx u0) {
    if (!(germ.loop.radius > 0)) throw std::invalid_argument("loop radius must be positive");
    if (std::abs(u0) > 0.5)
        throw error(errc::trajectory_escape, "start point is outside the chart collar");
    const double sweep = germ.loop.orientation >= 0 ? kTau : -kTau;
    const auto circle = detail::PathPiece::arc(germ.loop.center, germ.loop.radius,
                                               germ.loop.base_angle,
                                               germ.loop.base_angle + sweep);
    return detail::integrate_path(germ.field, {circle}, u0, germ.opt);
}

/// Germ of the counterclockwise loop around one enumerated infinite point;
/// radius defaults to a third of the distance to the nearest other singular
/// direction visible in the same chart.
inline HolonomyGerm loop_germ_for_point(const VectorField& v, size_t which,
                                        double radius_scale = 1.0 / 3.0) {
    const auto pts = infinite_singular_points(v);
    if (which >= pts.size())
        throw std::invalid_argument("infinite point index out of range");
    const SingPoint& pt = pts[which];
    if (pt.degenerate)
        throw error(errc::degenerate_singularity, "holonomy needs a nondegenerate point");

    double dmin = 3.0;  // chart-scale fallback when no other direction is visible
    bool any = false;
    for (size_t k = 0; k < pts.size(); ++k) {
        if (k == which) continue;
        cplx w;
        if (pts[k].chart == pt.chart) {
            w = pts[k].vparam;
        } else if (pts[k].vparam != cplx(0)) {
            w = 1.0 / pts[k].vparam;  // the other chart's coordinate, seen from this one
        } else {
            continue;  // sits at this chart's infinite direction
        }
        const double d = std::abs(w - pt.vparam);
        dmin = any ? std::min(dmin, d) : d;
        any = true;
    }
    HolonomyGerm germ{infinity_chart_field(v, pt.chart),
                      LoopSpec{pt.vparam, radius_scale * dmin, 1, 0.0},
                      IntegratorOptions{}};
    return germ;
}

namespace detail {

/// Neville extrapolation of f(x) to x = 0; the tableau diagonal must settle,
/// otherwise the node range is outside the asymptotic regime.
inline cplx extrapolate_to_zero(const std::vector<double>& x, const std::vector<cplx>& f) {
    const size_t n = x.size();
    std::vector<cplx> T(f);
    cplx prev_diag = T[0];
    double prev_delta = -1;
    for (size_t j = 1; j < n; ++j) {
        for (size_t i = n - 1; i >= j; --i)
            T[i] = (x[i - j] * T[i] - x[i] * T[i - 1]) / (x[i - j] - x[i]);
        const double delta = std::abs(T[j] - prev_diag);
        if (j + 1 == n && prev_delta >= 0 && delta > 2.0 * prev_delta &&
            delta > 1e-7 * (1.0 + std::abs(T[j])))
            throw error(errc::extrapolation_unstable,
                        "successive multiplier estimates diverge");
        prev_diag = T[j];
        prev_delta = delta;
    }
    return T[n - 1];
}

}  // namespace detail

/// Multiplier of the holonomy germ at an enumerated infinite point,
/// extrapolated from difference quotients at the given transversal radii.
inline cplx holonomy_multiplier(const VectorField& v, size_t which,
                                std::vector<double> radii = {}) {
    if (radii.empty()) radii = {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
    for (size_t i = 0; i < radii.size(); ++i)
        if (!(radii[i] > 0) || (i > 0 && radii[i] >= radii[i - 1]))
            throw std::invalid_argument("radii must be positive and strictly decreasing");
    const HolonomyGerm germ = loop_germ_for_point(v, which);
    std::vector<cplx> quot;
    for (double r : radii) quot.push_back(holonomy_map(germ, cplx(r)) / r);
    if (quot.size() == 1) return quot[0];
    return detail::extrapolate_to_zero(radii, quot);
}

// ---------------------------------------------------------------------------
// Generator arrangement on the thrice-punctured infinity leaf
// ---------------------------------------------------------------------------

/// Loop generators of the infinity-leaf fundamental group, all in a single
/// chart. Each finite puncture gets a spider lollipop from the base: travel
/// counterclockwise along the outer circle through the base, dive radially to
/// the puncture circle, run it once counterclockwise, and return. A puncture
/// sitting at the chart's own infinite direction is looped by the outer
/// circle run clockwise, appended after the others. The list is in
/// composition order (apply gens[0] first): clockwise by attachment angle,
/// which makes the full product contractible on the leaf.
struct GeneratorSet {
    ChartField field;
    int chart = 1;
    cplx base;
    cplx hub;        // center of the outer circle
    double R = 0;    // its radius (the base sits on it)
    std::vector<std::vector<detail::PathPiece>> gens;
    std::vector<int> point_index;  // enumeration index of the puncture per generator
};

inline GeneratorSet build_infinity_generators(const VectorField& v,
                                              std::optional<cplx> base = std::nullopt) {
    const auto pts = infinite_singular_points(v);
    for (const SingPoint& p : pts)
        if (p.degenerate)
            throw error(errc::degenerate_singularity,
                        "generator loops need nondegenerate infinite points");

    bool has01 = false, has10 = false;
    for (const SingPoint& p : pts) {
        if (p.chart == 2) has01 = true;
        if (p.chart == 1 && std::abs(p.vparam) <= 1e-12) has10 = true;
    }
    int chart = 1;
    bool big_needed = false;
    if (has01 && !has10)
        chart = 2;
    else if (has01 && has10)
        big_needed = true;  // [0:1] looped by the outer circle, chart 1

    std::vector<cplx> centers;
    std::vector<int> cidx;
    int big_idx = -1;
    for (size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].chart == chart) {
            centers.push_back(pts[i].vparam);
            cidx.push_back(static_cast<int>(i));
        } else if (big_needed) {
            big_idx = static_cast<int>(i);
        } else {
            centers.push_back(1.0 / pts[i].vparam);
            cidx.push_back(static_cast<int>(i));
        }
    }
    if (centers.empty()) throw std::invalid_argument("no finite puncture in the working chart");

    cplx hub(0);
    for (const cplx& c : centers) hub += c;
    hub /= double(centers.size());
    double spread = 0;
    for (const cplx& c : centers) spread = std::max(spread, std::abs(c - hub));

    const cplx b = base ? *base : hub + (2.5 * spread + 1.0) * std::polar(1.0, kTau / 10);
    const double R = std::abs(b - hub);
    const double beta = std::arg(b - hub);

    const size_t m = centers.size();
    std::vector<double> rad(m), rho(m), phi(m), delta(m);
    for (size_t j = 0; j < m; ++j) {
        double sep = 6.0;  // fallback when the puncture is alone in the chart
        bool any = false;
        for (size_t k = 0; k < m; ++k) {
            if (k == j) continue;
            const double d = std::abs(centers[j] - centers[k]);
            sep = any ? std::min(sep, d) : d;
            any = true;
        }
        rho[j] = std::abs(centers[j] - hub);
        phi[j] = rho[j] > 1e-12 ? std::arg(centers[j] - hub) : beta;
        rad[j] = std::min(sep / 3.0, 0.45 * (R - rho[j]));
        if (!(rad[j] > 0) || R < 1.25 * (rho[j] + rad[j]))
            throw std::invalid_argument("base point is too close to the puncture arrangement");
        delta[j] = std::fmod(phi[j] - beta, kTau);
        if (delta[j] < 0) delta[j] += kTau;
    }

    // Composition order: clockwise by attachment angle seen from the base.
    // With counterclockwise travel arcs and counterclockwise puncture circles
    // this is the order whose full product is the outer boundary circle, i.e.
    // trivial on the leaf (checked against a non-integrable field, where a
    // wrong order shows up at second order in the transversal coordinate).
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a2, size_t b2) {
        if (delta[a2] != delta[b2]) return delta[a2] > delta[b2];
        return rho[a2] < rho[b2];
    });

    // the radial dives must not brush another puncture circle
    for (size_t j = 0; j < m; ++j) {
        const cplx qj = hub + R * std::polar(1.0, phi[j]);
        const cplx pj = centers[j] + rad[j] * std::polar(1.0, phi[j]);
        for (size_t k = 0; k < m; ++k) {
            if (k == j) continue;
            const cplx d = pj - qj;
            const double len2 = std::norm(d);
            // projection parameter of c_k onto the segment q -> p
            const double tproj = std::clamp(
                (std::conj(d) * (centers[k] - qj)).real() / std::max(len2, 1e-300), 0.0, 1.0);
            const double dist = std::abs(centers[k] - (qj + tproj * d));
            if (dist < 1.1 * rad[k])
                throw std::invalid_argument(
                    "puncture arrangement is collinear with the base; pick another base");
        }
    }

    GeneratorSet gs{infinity_chart_field(v, chart), chart, b, hub, R, {}, {}};
    for (size_t oj = 0; oj < m; ++oj) {
        const size_t j = order[oj];
        const cplx qj = hub + R * std::polar(1.0, phi[j]);
        const cplx pj = centers[j] + rad[j] * std::polar(1.0, phi[j]);
        std::vector<detail::PathPiece> g;
        if (delta[j] > 1e-12) g.push_back(detail::PathPiece::arc(hub, R, beta, beta + delta[j]));
        g.push_back(detail::PathPiece::segment(qj, pj));
        g.push_back(detail::PathPiece::arc(centers[j], rad[j], phi[j], phi[j] + kTau));
        g.push_back(detail::PathPiece::segment(pj, qj));
        if (delta[j] > 1e-12) g.push_back(detail::PathPiece::arc(hub, R, beta + delta[j], beta));
        gs.gens.push_back(std::move(g));
        gs.point_index.push_back(cidx[j]);
    }
    if (big_needed) {
        gs.gens.push_back({detail::PathPiece::arc(hub, R, beta, beta - kTau)});
        gs.point_index.push_back(big_idx);
    }
    return gs;
}

/// Largest relative defect of the full generator product over the samples;
/// the composed loop is contractible on the punctured leaf, so the product
/// must return every transversal point to itself.
inline double generator_product_check(const VectorField& v, cplx base,
                                      const std::vector<cplx>& u0_samples,
                                      IntegratorOptions opt = {}) {
    const GeneratorSet gs = build_infinity_generators(v, base);
    double worst = 0;
    for (const cplx& u0 : u0_samples) {
        if (u0 == cplx(0)) continue;  // fixed leaf, contributes exactly zero
        cplx u = u0;
        for (const auto& g : gs.gens) u = detail::integrate_path(gs.field, g, u, opt);
        worst = std::max(worst, std::abs(u - u0) / std::abs(u0));
    }
    return worst;
}

/// |f_i f_j f_i^{-1} f_j^{-1}(u0) - u0| with the generators of the default
/// arrangement; inverses run the same path with reversed orientation. Raw
/// diagnostic magnitude; no solvability claim is attached.
inline double commutator_probe(const VectorField& v, size_t i, size_t j, cplx u0,
                               IntegratorOptions opt = {}) {
    const GeneratorSet gs = build_infinity_generators(v);
    if (i >= gs.gens.size() || j >= gs.gens.size() || i == j)
        throw std::invalid_argument("commutator needs two distinct generator indices");
    if (u0 == cplx(0)) return 0.0;
    const auto reversed = [](const std::vector<detail::PathPiece>& g) {
        std::vector<detail::PathPiece> r;
        for (auto it = g.rbegin(); it != g.rend(); ++it) r.push_back(it->reversed());
        return r;
    };
    cplx u = u0;
    u = detail::integrate_path(gs.field, reversed(gs.gens[j]), u, opt);
    u = detail::integrate_path(gs.field, reversed(gs.gens[i]), u, opt);
    u = detail::integrate_path(gs.field, gs.gens[j], u, opt);
    u = detail::integrate_path(gs.field, gs.gens[i], u, opt);
    return std::abs(u - u0);
}

}  // namespace baumbott

#endif  // BAUMBOTT_HOLONOMY_HPP
