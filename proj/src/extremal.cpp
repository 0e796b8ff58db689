#include "filigeo/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "filigeo/util.hpp"

namespace filigeo {

Polyline straight_polyline(const Vec& p, const Vec& q, int n_segments) {
    if (n_segments < 1) throw BadParameter("straight_polyline: need >= 1 segment");
    Polyline c;
    c.nodes.reserve(n_segments + 1);
    for (int i = 0; i <= n_segments; ++i) {
        const double t = double(i) / n_segments;
        c.nodes.push_back(p + t * (q - p));
    }
    return c;
}

Polyline bent_polyline(const Vec& p, const Vec& q, int n_segments, double amplitude,
                       int i, int j) {
    Polyline c = straight_polyline(p, q, n_segments);
    const Vec chord = q - p;
    Vec normal = Vec::Zero(p.size());
    // in-plane unit normal of the chord within the (i,j) plane
    const double nx = -chord[j], ny = chord[i];
    const double nn = std::hypot(nx, ny);
    if (nn < 1e-14) throw BadParameter("bent_polyline: chord degenerate in bending plane");
    normal[i] = nx / nn;
    normal[j] = ny / nn;
    for (int k = 0; k <= n_segments; ++k) {
        const double t = double(k) / n_segments;
        c.nodes[k] += amplitude * std::sin(M_PI * t) * normal;
    }
    return c;
}

namespace {

Side side_of_mid(const PiecewiseMetric& m, const Vec& mid) {
    return m.level(mid) >= 0 ? Side::plus : Side::minus;
}

}  // namespace

double curve_length(const PiecewiseMetric& m, const Polyline& c) {
    if (c.nodes.size() < 2) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i + 1 < c.nodes.size(); ++i) {
        const Vec d = c.nodes[i + 1] - c.nodes[i];
        if (d.norm() == 0.0) continue;
        const Vec mid = 0.5 * (c.nodes[i] + c.nodes[i + 1]);
        const Mat g = eval_metric(m, mid, side_of_mid(m, mid)).g;
        const double q = d.dot(g * d);
        if (m.signature == Signature::riemannian) {
            total += std::sqrt(std::max(0.0, q));
        } else {
            if (q > 1e-12 * d.squaredNorm())
                throw NonCausalSegment("curve_length: spacelike segment in Lorentzian mode");
            total += std::sqrt(std::max(0.0, -q));
        }
    }
    return total;
}

double polyline_energy(const PiecewiseMetric& m, const Polyline& c) {
    const double dt = c.dt();
    double e = 0.0;
    for (size_t i = 0; i + 1 < c.nodes.size(); ++i) {
        const Vec d = c.nodes[i + 1] - c.nodes[i];
        const Vec mid = 0.5 * (c.nodes[i] + c.nodes[i + 1]);
        const Mat g = eval_metric(m, mid, side_of_mid(m, mid)).g;
        e += d.dot(g * d) / (2.0 * dt);
    }
    return e;
}

std::vector<Vec> polyline_energy_gradient(const PiecewiseMetric& m, const Polyline& c) {
    const int n = m.dim;
    const double dt = c.dt();
    std::vector<Vec> grad(c.nodes.size(), Vec::Zero(n));
    for (size_t i = 0; i + 1 < c.nodes.size(); ++i) {
        const Vec d = c.nodes[i + 1] - c.nodes[i];
        const Vec mid = 0.5 * (c.nodes[i] + c.nodes[i + 1]);
        const MetricSample s = eval_metric(m, mid, side_of_mid(m, mid));
        const Vec gd = s.g * d;
        Vec dgq(n);  // d_a g_jk D^j D^k
        for (int a = 0; a < n; ++a) dgq[a] = d.dot(s.dg[a] * d);
        grad[i] += (0.5 * dgq - 2.0 * gd) / (2.0 * dt);
        grad[i + 1] += (0.5 * dgq + 2.0 * gd) / (2.0 * dt);
    }
    grad.front().setZero();  // endpoints fixed
    grad.back().setZero();
    return grad;
}

namespace {

double grad_inf_norm(const std::vector<Vec>& g) {
    double m = 0.0;
    for (const auto& v : g) m = std::max(m, v.lpNorm<Eigen::Infinity>());
    return m;
}

double safe_energy(const PiecewiseMetric& m, const Polyline& c) {
    try {
        return polyline_energy(m, c);
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

// Nonlinear conjugate gradient (Polak-Ribiere+) with Armijo backtracking.
// Returns true when the gradient norm target was met.
bool descend(const PiecewiseMetric& m, Polyline& c, const MinimizeOptions& opts) {
    auto grad = polyline_energy_gradient(m, c);
    double e = safe_energy(m, c);
    if (!std::isfinite(e)) return false;
    std::vector<Vec> dir(grad.size());
    for (size_t k = 0; k < grad.size(); ++k) dir[k] = -grad[k];
    double alpha = 1e-2;
    const int n_free = static_cast<int>(c.nodes.size()) - 2;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (grad_inf_norm(grad) < opts.grad_tol) return true;

        double slope = 0.0;
        for (size_t k = 0; k < grad.size(); ++k) slope += grad[k].dot(dir[k]);
        if (slope >= 0.0) {  // reset to steepest descent
            for (size_t k = 0; k < grad.size(); ++k) dir[k] = -grad[k];
            slope = 0.0;
            for (size_t k = 0; k < grad.size(); ++k) slope -= grad[k].squaredNorm();
            if (slope == 0.0) return true;
        }

        // backtracking Armijo
        Polyline trial = c;
        double a = std::max(alpha * 2.0, 1e-8);
        double e_new = std::numeric_limits<double>::infinity();
        for (int bt = 0; bt < 60; ++bt) {
            for (size_t k = 1; k + 1 < c.nodes.size(); ++k)
                trial.nodes[k] = c.nodes[k] + a * dir[k];
            e_new = safe_energy(m, trial);
            if (e_new <= e + 1e-4 * a * slope) break;
            a *= 0.5;
        }
        if (!(e_new < e)) {  // stuck: restart once with steepest descent
            bool was_sd = true;
            for (size_t k = 0; k < grad.size(); ++k)
                if ((dir[k] + grad[k]).norm() > 1e-14) was_sd = false;
            if (was_sd) return grad_inf_norm(grad) < opts.grad_tol * 100;
            for (size_t k = 0; k < grad.size(); ++k) dir[k] = -grad[k];
            continue;
        }
        alpha = a;
        c = trial;
        e = e_new;

        auto grad_new = polyline_energy_gradient(m, c);
        // Polak-Ribiere+ coefficient
        double num = 0.0, den = 0.0;
        for (size_t k = 0; k < grad.size(); ++k) {
            num += grad_new[k].dot(grad_new[k] - grad[k]);
            den += grad[k].squaredNorm();
        }
        double beta = den > 0 ? std::max(0.0, num / den) : 0.0;
        if (iter % std::max(10, 2 * n_free) == 0) beta = 0.0;
        for (size_t k = 0; k < grad.size(); ++k) dir[k] = -grad_new[k] + beta * dir[k];
        grad = std::move(grad_new);
    }
    return grad_inf_norm(grad) < opts.grad_tol;
}

}  // namespace

Polyline minimize_bvp(const PiecewiseMetric& m, const Vec& p, const Vec& q,
                      int n_segments, const MinimizeOptions& opts) {
    if (m.signature != Signature::riemannian)
        throw BadParameter("minimize_bvp: Riemannian metrics only");
    if ((q - p).norm() == 0.0) return straight_polyline(p, q, std::max(n_segments, 1));

    std::vector<Polyline> seeds = opts.seeds;
    if (seeds.empty()) {
        const double amp = 0.25 * (q - p).norm();
        seeds.push_back(straight_polyline(p, q, n_segments));
        seeds.push_back(bent_polyline(p, q, n_segments, amp));
        seeds.push_back(bent_polyline(p, q, n_segments, -amp));
    }

    bool any = false;
    Polyline best;
    double best_energy = std::numeric_limits<double>::infinity();
    for (const auto& seed : seeds) {
        Polyline c = seed;
        if (!descend(m, c, opts)) continue;
        const double e = safe_energy(m, c);
        if (e < best_energy) {
            best_energy = e;
            best = c;
            any = true;
        }
    }
    if (!any) throw NoConvergence("minimize_bvp: no seed reached the gradient tolerance");
    return best;
}

// --- shooting ------------------------------------------------------------------

namespace {

struct Shot {
    GeodesicRecord rec;
    double best_s = 0.0;
    double best_miss = std::numeric_limits<double>::infinity();
};

Shot shoot_and_scan(const PiecewiseMetric& m, const Vec& p, const Vec& v,
                    const Vec& q, double total_s) {
    Shot shot;
    IntegrateOptions opts = shoot_defaults();
    shot.rec = shoot_geodesic(m, p, v, 0.0, total_s, opts);
    if (shot.rec.trajectory.segments.empty()) return shot;
    const auto samples = shot.rec.trajectory.sample(400);
    for (const auto& [s, full] : samples) {
        const double miss = (full.head(m.dim) - q).norm();
        if (miss < shot.best_miss) {
            shot.best_miss = miss;
            shot.best_s = s;
        }
    }
    return shot;
}

// Unit-speed direction from chart parameters.
//   Riemannian dim 2: angle -> g-normalized (cos, sin).
//   Lorentzian dim 3: (X, Y) -> (T, X, Y) with g(v,v) = -1 at p.
Vec chart_direction(const PiecewiseMetric& m, const Vec& p, const Vec& params) {
    if (m.signature == Signature::riemannian) {
        Vec v(2);
        v << std::cos(params[0]), std::sin(params[0]);
        const Mat g = eval_metric(m, p, side_of_mid(m, p)).g;
        return v / std::sqrt(v.dot(g * v));
    }
    const Mat g = eval_metric(m, p, side_of_mid(m, p)).g;
    Vec v(3);
    v << 0.0, params[0], params[1];
    const double spatial = v.dot(g * v);
    Vec t_axis = m.time_axis ? m.time_axis(p) : (Vec(3) << 1, 0, 0).finished();
    const double gtt = t_axis.dot(g * t_axis);  // negative
    // g(v + T t, .) with cross terms zero for the zoo metrics
    const double T = std::sqrt((1.0 + spatial) / (-gtt));
    return v + T * t_axis;
}

}  // namespace

BvpSolutionSet geodesic_bvp_shooting(const PiecewiseMetric& m, const Vec& p,
                                     const Vec& q, double total_s, int angle_grid,
                                     const ShootingOptions& opts) {
    if (angle_grid < 4) throw BadParameter("geodesic_bvp_shooting: grid too coarse");
    const bool riem = m.signature == Signature::riemannian;
    if ((riem && m.dim != 2) || (!riem && m.dim != 3))
        throw BadParameter(
            "geodesic_bvp_shooting: direction charts cover Riemannian dim 2 "
            "and Lorentzian dim 3");
    const int n_params = riem ? 1 : 2;
    const double capture = opts.capture_factor * std::max((q - p).norm(), 1e-6);

    // chart grid
    std::vector<Vec> grid;
    if (riem) {
        for (int k = 0; k < angle_grid; ++k)
            grid.push_back(Vec::Constant(1, 2.0 * M_PI * k / angle_grid));
    } else {
        for (int i = 0; i < angle_grid; ++i)
            for (int j = 0; j < angle_grid; ++j) {
                Vec c(2);
                c << -opts.direction_span + 2.0 * opts.direction_span * i / (angle_grid - 1),
                    -opts.direction_span + 2.0 * opts.direction_span * j / (angle_grid - 1);
                grid.push_back(c);
            }
    }

    std::vector<double> misses(grid.size());
    std::vector<double> arrivals(grid.size());
    parallel_for(static_cast<int>(grid.size()), [&](int i) {
        try {
            Shot s = shoot_and_scan(m, p, chart_direction(m, p, grid[i]), q, total_s);
            misses[i] = s.best_miss;
            arrivals[i] = s.best_s;
        } catch (const Error&) {
            misses[i] = std::numeric_limits<double>::infinity();
            arrivals[i] = 0.0;
        }
    });

    // local minima of the gridwise miss below the capture radius
    std::vector<int> candidates;
    if (riem) {
        const int n = static_cast<int>(grid.size());
        for (int i = 0; i < n; ++i) {
            const double prev = misses[(i + n - 1) % n], next = misses[(i + 1) % n];
            if (misses[i] < capture && misses[i] <= prev && misses[i] <= next)
                candidates.push_back(i);
        }
    } else {
        const int n = angle_grid;
        auto at = [&](int i, int j) { return misses[i * n + j]; };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (at(i, j) >= capture) continue;
                bool is_min = true;
                for (int di = -1; di <= 1 && is_min; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int ii = i + di, jj = j + dj;
                        if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
                        if (at(ii, jj) < at(i, j)) {
                            is_min = false;
                            break;
                        }
                    }
                if (is_min) candidates.push_back(i * n + j);
            }
    }

    // Newton refinement on residual(params, s) = gamma(s) - q
    struct Refined {
        Vec params;
        Vec direction;
        double s = 0.0, miss = std::numeric_limits<double>::infinity();
    };
    std::vector<Refined> refined(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), [&](int ci) {
        const int idx = candidates[ci];
        Vec params = grid[idx];
        double s = std::max(arrivals[idx], 1e-3 * total_s);
        Refined r;
        const double fd = 1e-7;
        for (int it = 0; it < opts.max_newton; ++it) {
            Shot base;
            try {
                base = shoot_and_scan(m, p, chart_direction(m, p, params), q, total_s);
            } catch (const Error&) {
                break;
            }
            if (base.rec.trajectory.segments.empty()) break;
            s = std::clamp(s, 1e-6, base.rec.s_end());
            const Vec res = base.rec.position(s) - q;
            const double miss = res.norm();
            if (miss < r.miss) {
                r.miss = miss;
                r.params = params;
                r.s = s;
                r.direction = chart_direction(m, p, params);
            }
            if (miss < opts.bvp_tol) break;

            Mat J(m.dim, n_params + 1);
            for (int c = 0; c < n_params; ++c) {
                Vec pp = params;
                pp[c] += fd;
                try {
                    auto pert = shoot_geodesic(m, p, chart_direction(m, p, pp), 0.0,
                                               std::min(total_s, s * 1.5 + 0.1));
                    J.col(c) = (pert.position(s) - base.rec.position(s)) / fd;
                } catch (const Error&) {
                    J.col(c).setZero();
                }
            }
            J.col(n_params) = base.rec.velocity(s);
            const Vec delta =
                J.colPivHouseholderQr().solve(Vec(-res));
            double damp = 1.0;
            if (delta.norm() > 0.5) damp = 0.5 / delta.norm();
            for (int c = 0; c < n_params; ++c) params[c] += damp * delta[c];
            s += damp * delta[n_params];
        }
        refined[ci] = r;
    });

    // keep converged, dedup by initial direction
    std::sort(refined.begin(), refined.end(),
              [](const Refined& a, const Refined& b) { return a.miss < b.miss; });
    BvpSolutionSet out;
    out.dedup_radius = opts.dedup_radius;
    for (const auto& r : refined) {
        if (r.miss > opts.bvp_tol) continue;
        bool dup = false;
        for (const auto& kept : out.solutions)
            if ((kept.direction - r.direction).norm() < opts.dedup_radius) {
                dup = true;
                break;
            }
        if (dup) continue;
        out.solutions.push_back({r.direction, r.s, r.miss, r.s});
    }
    return out;
}

// --- du Bois-Reymond residual ---------------------------------------------------

namespace {

// Catmull-Rom interpolation through four consecutive nodes.
Vec catmull_rom(const Vec& p0, const Vec& p1, const Vec& p2, const Vec& p3, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                  (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

}  // namespace

DbrResidual dbr_residual(const PiecewiseMetric& m, const Polyline& c) {
    if (m.signature != Signature::riemannian)
        throw BadParameter(
            "dbr_residual: Riemannian metrics only (the variation argument "
            "needs a definite length integrand)");
    const int n = m.dim;
    const int nseg = c.segment_count();
    if (nseg < 8) throw BadParameter("dbr_residual: need at least 8 segments");

    // Guard: the trick needs g in C^1 along the curve.
    if (!m.c1_across_interface) {
        for (const auto& node : c.nodes)
            if (std::abs(m.level(node)) < 1e-8)
                throw InterfaceOnCurve(
                    "dbr_residual: curve touches the interface of a non-C^1 metric");
    }

    // cumulative g-arclength of the polyline
    std::vector<double> cum(nseg + 1, 0.0);
    for (int i = 0; i < nseg; ++i) {
        const Vec d = c.nodes[i + 1] - c.nodes[i];
        const Vec mid = 0.5 * (c.nodes[i] + c.nodes[i + 1]);
        const Mat g = eval_metric(m, mid, side_of_mid(m, mid)).g;
        cum[i + 1] = cum[i] + std::sqrt(std::max(0.0, d.dot(g * d)));
    }
    const double L = cum.back();
    if (L <= 0.0) throw BadParameter("dbr_residual: degenerate curve");

    // resample to uniform arclength, oversampled 4x (Catmull-Rom)
    const int K = 4 * nseg;
    const double hs = L / K;
    std::vector<Vec> pos(K + 1);
    for (int k = 0; k <= K; ++k) {
        const double s = k * hs;
        int seg = int(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin()) - 1;
        seg = std::clamp(seg, 0, nseg - 1);
        const double frac = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        const Vec& p0 = c.nodes[std::max(seg - 1, 0)];
        const Vec& p1 = c.nodes[seg];
        const Vec& p2 = c.nodes[seg + 1];
        const Vec& p3 = c.nodes[std::min(seg + 2, nseg)];
        pos[k] = catmull_rom(p0, p1, p2, p3, frac);
    }

    // 4th-order central differences for the velocity on the arclength grid
    auto vel = [&](int k) {
        return Vec((-pos[k + 2] + 8.0 * pos[k + 1] - 8.0 * pos[k - 1] + pos[k - 2]) /
                   (12.0 * hs));
    };

    // integrand F_{pos,i} = (1/2F) d_i g_jk v^j v^k with F = sqrt(g(v,v))
    std::vector<Vec> fpos(K + 1, Vec::Zero(n));
    std::vector<Vec> fvel(K + 1, Vec::Zero(n));
    for (int k = 2; k <= K - 2; ++k) {
        const Vec v = vel(k);
        const MetricSample smp = eval_metric(m, pos[k], side_of_mid(m, pos[k]));
        const double F = std::sqrt(std::max(1e-300, v.dot(smp.g * v)));
        for (int i = 0; i < n; ++i) fpos[k][i] = 0.5 * v.dot(smp.dg[i] * v) / F;
        fvel[k] = smp.g * v / F;
    }
    // edge copies keep the Simpson sum defined; they are excluded from stats
    fpos[0] = fpos[1] = fpos[2];
    fpos[K] = fpos[K - 1] = fpos[K - 2];

    // cumulative integral of fpos: per-panel cubic rule (4th order uniformly,
    // so the residual statistic is not polluted by quadrature sawtooth)
    std::vector<Vec> integral(K + 1, Vec::Zero(n));
    for (int k = 1; k <= K; ++k) {
        if (k >= 2 && k + 1 <= K)
            integral[k] = integral[k - 1] +
                          (hs / 24.0) * (-fpos[k - 2] + 13.0 * fpos[k - 1] +
                                         13.0 * fpos[k] - fpos[k + 1]);
        else
            integral[k] = integral[k - 1] + (hs / 2.0) * (fpos[k - 1] + fpos[k]);
    }

    DbrResidual out;
    out.series.assign(n, {});
    const int lo = 4, hi = K - 4;
    for (int k = lo; k <= hi; ++k) {
        out.t.push_back(k * hs);
        const Vec r = fvel[k] - integral[k];
        for (int i = 0; i < n; ++i) out.series[i].push_back(r[i]);
    }
    out.deviation = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto& s = out.series[i];
        const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        out.deviation[i] = std::sqrt(var / s.size());
    }
    return out;
}

}  // namespace filigeo
