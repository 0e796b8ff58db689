#include "filigeo/geodesic.hpp"

#include <algorithm>
#include <cmath>

#include "filigeo/quadrature.hpp"

namespace filigeo {

const char* to_string(CausalCharacter c) {
    switch (c) {
        case CausalCharacter::timelike: return "timelike";
        case CausalCharacter::null_like: return "null";
        case CausalCharacter::spacelike: return "spacelike";
        case CausalCharacter::mixed: return "mixed";
        default: return "n/a";
    }
}

CausalCharacter classify_norm_samples(const std::vector<double>& values, double tol) {
    bool has_t = false, has_s = false, has_n = false;
    for (double v : values) {
        if (v < -tol)
            has_t = true;
        else if (v > tol)
            has_s = true;
        else
            has_n = true;
    }
    const int classes = int(has_t) + int(has_s) + int(has_n);
    if (classes == 0) return CausalCharacter::not_applicable;
    if (classes > 1) return CausalCharacter::mixed;
    if (has_t) return CausalCharacter::timelike;
    if (has_s) return CausalCharacter::spacelike;
    return CausalCharacter::null_like;
}

Vec geodesic_rhs(const PiecewiseMetric& m, const PhaseState& s, Side side) {
    const int n = m.dim;
    const auto gamma = christoffel(m, s.x, side);
    Vec out(2 * n);
    out.head(n) = s.v;
    for (int i = 0; i < n; ++i) out[n + i] = -s.v.dot(gamma[i] * s.v);
    return out;
}

PiecewiseField phase_field(const PiecewiseMetric& m) {
    const int n = m.dim;
    PiecewiseField f;
    f.dim = 2 * n;
    auto make = [&m, n](Side side) {
        return [&m, n, side](const Vec& state) {
            PhaseState s{state.head(n), state.tail(n)};
            return geodesic_rhs(m, s, side);
        };
    };
    f.f_minus = make(Side::minus);
    f.f_plus = make(Side::plus);
    f.level = [&m, n](const Vec& state) { return m.level(state.head(n)); };
    f.level_grad = [&m, n](const Vec& state) {
        Vec g = Vec::Zero(2 * n);
        g.head(n) = m.level_grad(state.head(n));
        return g;
    };
    f.domain = [&m, n](const Vec& state) { return m.domain(state.head(n)); };
    return f;
}

IntegrateOptions shoot_defaults() {
    IntegrateOptions opts;
    opts.rtol = 1e-10;  // tight: |x|^(lambda-1) terms are not Lipschitz at 0
    opts.atol = 1e-12;
    return opts;
}

PhaseState GeodesicRecord::state(double s) const {
    const Vec full = trajectory.state(s);
    const int n = dim;
    return {full.head(n), full.tail(n)};
}

Vec GeodesicRecord::position(double s) const { return state(s).x; }
Vec GeodesicRecord::velocity(double s) const { return state(s).v; }

NormTrace tangent_norm(const PiecewiseMetric& m, const GeodesicRecord& rec,
                       int n_samples) {
    NormTrace out;
    const auto samples = rec.trajectory.sample(n_samples);
    out.s.reserve(samples.size());
    out.value.reserve(samples.size());
    const int n = m.dim;
    for (const auto& [s, full] : samples) {
        const Vec x = full.head(n);
        const Vec v = full.tail(n);
        Side hint = rec.trajectory.side_at(s);
        if (hint == Side::on_interface) hint = Side::plus;  // g is glued there
        const Mat g = eval_metric(m, x, hint).g;
        out.s.push_back(s);
        out.value.push_back(v.dot(g * v));
    }
    out.drift = 0.0;
    for (double v : out.value)
        out.drift = std::max(out.drift, std::abs(v - out.value.front()));
    return out;
}

GeodesicRecord shoot_geodesic(const PiecewiseMetric& m, const Vec& p, const Vec& v,
                              double s_from, double s_to,
                              const IntegrateOptions& opts) {
    GeodesicRecord rec;
    rec.dim = m.dim;
    Vec state(2 * m.dim);
    state.head(m.dim) = p;
    state.tail(m.dim) = v;
    PiecewiseField f = phase_field(m);
    rec.trajectory = integrate_filippov(f, state, s_from, s_to, opts);
    if (!rec.trajectory.segments.empty()) {
        rec.norm_trace = tangent_norm(m, rec);
        if (m.signature == Signature::lorentzian)
            rec.character = classify_norm_samples(rec.norm_trace.value, 1e-8);
    }
    return rec;
}

// --- Hartman-Wintner family ----------------------------------------------------

namespace {

// (1 - (1-u^2)^lambda) / u^2, continuously extended by lambda at u=0.
double shrink_ratio(double u, double lambda) {
    const double u2 = u * u;
    if (u2 < 1e-300) return lambda;
    return -std::expm1(lambda * std::log1p(-u2)) / u2;
}

}  // namespace

double HWFamily::turning_x() const { return std::pow(eps, 1.0 / lambda); }

HWFamily hw_geodesic_family(double lambda, double eps, int direction) {
    if (!(lambda > 1.0 && lambda < 2.0))
        throw BadParameter("hw_geodesic_family: lambda must lie in (1,2)");
    if (!(eps > 0.0 && eps < 1.0))
        throw BadParameter("hw_geodesic_family: eps must lie in (0,1)");
    if (direction != 1 && direction != -1)
        throw BadParameter("hw_geodesic_family: direction must be +-1");

    HWFamily fam;
    fam.lambda = lambda;
    fam.eps = eps;
    fam.direction = direction;
    fam.c = std::sqrt(1.0 - eps);

    const double X = fam.turning_x();
    // With x = X(1-u^2):  eps - x^lambda = eps * u^2 * shrink_ratio(u),
    //                     1 - x^lambda  = 1 - eps (1-u^2)^lambda,
    // so ds/du and dy/du below are smooth on all of [0,1].
    auto x_pow_lambda = [eps, lambda](double u) {
        return eps * std::pow(1.0 - u * u, lambda);
    };
    auto g_s = [=](double u) {
        const double one_minus = 1.0 - x_pow_lambda(u);
        return 2.0 * X * std::sqrt(one_minus / (eps * shrink_ratio(u, lambda)));
    };
    auto g_y = [=, c = fam.c](double u) {
        const double one_minus = 1.0 - x_pow_lambda(u);
        return 2.0 * X * c / std::sqrt(one_minus * eps * shrink_ratio(u, lambda));
    };

    const int M = 2048;
    fam.u_grid.resize(M + 1);
    fam.ds_du.resize(M + 1);
    fam.dy_du.resize(M + 1);
    for (int i = 0; i <= M; ++i) {
        const double u = double(i) / M;
        fam.u_grid[i] = u;
        fam.ds_du[i] = g_s(u);
        fam.dy_du[i] = g_y(u);
    }
    // Cumulative tables from the start of the curve (u=1) toward the turning
    // point (u=0): s_of_u[i] = integral over [u_i, 1] of g_s.
    fam.s_of_u.assign(M + 1, 0.0);
    fam.y_of_u.assign(M + 1, 0.0);
    for (int i = M - 1; i >= 0; --i) {
        const double a = fam.u_grid[i], b = fam.u_grid[i + 1];
        fam.s_of_u[i] = fam.s_of_u[i + 1] + integrate_gk15(g_s, a, b, 1e-15, 1e-13).value;
        fam.y_of_u[i] = fam.y_of_u[i + 1] + integrate_gk15(g_y, a, b, 1e-15, 1e-13).value;
    }
    fam.s0 = fam.s_of_u[0];
    fam.y1 = fam.y_of_u[0];
    return fam;
}

namespace {

// Cubic Hermite value on [a,b] with endpoint values/derivatives.
double hermite(double t, double a, double b, double fa, double fb, double dfa,
               double dfb) {
    const double h = b - a;
    const double th = (t - a) / h;
    const double t2 = th * th, t3 = t2 * th;
    return fa * (2 * t3 - 3 * t2 + 1) + fb * (-2 * t3 + 3 * t2) +
           h * (dfa * (t3 - 2 * t2 + th) + dfb * (t3 - t2));
}

double hermite_deriv(double t, double a, double b, double fa, double fb,
                     double dfa, double dfb) {
    const double h = b - a;
    const double th = (t - a) / h;
    const double t2 = th * th;
    return (fa * (6 * t2 - 6 * th) + fb * (-6 * t2 + 6 * th)) / h +
           dfa * (3 * t2 - 4 * th + 1) + dfb * (3 * t2 - 2 * th);
}

}  // namespace

Vec HWFamily::position(double s) const {
    const double X = turning_x();
    double y_reflect = 0.0;
    bool mirrored = false;
    s = std::clamp(s, 0.0, 2.0 * s0);
    if (s > s0) {
        s = 2.0 * s0 - s;
        mirrored = true;
        y_reflect = 2.0 * y1;
    }
    // locate the bracket: s_of_u decreases from s0 (at u=0) to 0 (at u=1)
    int lo = 0, hi = static_cast<int>(u_grid.size()) - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (s_of_u[mid] >= s)
            lo = mid;
        else
            hi = mid;
    }
    const double a = u_grid[lo], b = u_grid[hi];
    // Newton on the Hermite model of s(u) (monotone decreasing in u).
    double u = 0.5 * (a + b);
    for (int it = 0; it < 60; ++it) {
        const double sv = hermite(u, a, b, s_of_u[lo], s_of_u[hi], -ds_du[lo], -ds_du[hi]);
        const double dv =
            hermite_deriv(u, a, b, s_of_u[lo], s_of_u[hi], -ds_du[lo], -ds_du[hi]);
        const double err = sv - s;
        if (std::abs(err) < 1e-15 * (1.0 + s0)) break;
        double step = dv != 0.0 ? -err / dv : 0.0;
        double un = u + step;
        if (!(un > a && un < b) || step == 0.0) {
            // bisection fallback against the Hermite model
            un = (sv > s) ? 0.5 * (u + b) : 0.5 * (u + a);
        }
        if (un == u) break;
        u = un;
    }
    const double x = X * (1.0 - u * u);
    const double y = hermite(u, a, b, y_of_u[lo], y_of_u[hi], -dy_du[lo], -dy_du[hi]);
    Vec out(2);
    out[0] = direction * x;
    out[1] = mirrored ? y_reflect - y : y;
    return out;
}

Vec HWFamily::velocity(double s) const {
    s = std::clamp(s, 0.0, 2.0 * s0);
    const bool after_turn = s > s0;
    const Vec pos = position(s);
    const double absx = std::abs(pos[0]);
    const double h = 1.0 - std::pow(absx, lambda);
    const double rad = std::max(0.0, 1.0 - c * c / h);
    double xdot = std::sqrt(rad) * direction;
    if (after_turn) xdot = -xdot;
    Vec out(2);
    out[0] = xdot;
    out[1] = c / h;
    return out;
}

}  // namespace filigeo
