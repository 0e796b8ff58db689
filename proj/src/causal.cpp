#include "filigeo/causal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace filigeo {

const char* to_string(ReachMode m) {
    return m == ReachMode::causal ? "causal" : "timelike";
}

ConeSample cone_sample(const PiecewiseMetric& m, const Vec& x) {
    if (m.signature != Signature::lorentzian)
        throw BadParameter("cone_sample: Lorentzian metrics only");
    ConeSample cs;
    cs.point = x;
    cs.g = eval_metric(m, x).g;
    cs.time_axis = m.time_axis ? m.time_axis(x) : Vec::Unit(m.dim, 0);
    return cs;
}

// --- reachability ---------------------------------------------------------------

Vec ReachabilitySet::vertex(int i0, int i1) const {
    Vec v(2);
    v << grid.min0 + i0 * grid.h, grid.min1 + i1 * grid.h;
    return v;
}

bool ReachabilitySet::at(const Vec& p) const {
    const int i0 = static_cast<int>(std::lround((p[0] - grid.min0) / grid.h));
    const int i1 = static_cast<int>(std::lround((p[1] - grid.min1) / grid.h));
    if (i0 < 0 || i1 < 0 || i0 >= n0 || i1 >= n1) return false;
    return at_index(i0, i1);
}

int ReachabilitySet::count() const {
    int c = 0;
    for (auto v : reached) c += v != 0;
    return c;
}

nlohmann::json ReachabilitySet::metadata() const {
    return nlohmann::json{
        {"h", grid.h},
        {"K", slack_K},
        {"neighbor_radius", neighbor_radius},
        {"mode", to_string(mode)},
        {"source", {grid.min0 + src0 * grid.h, grid.min1 + src1 * grid.h}},
        {"bounds", {grid.min0, grid.max0, grid.min1, grid.max1}},
        {"reached", count()},
        {"frontier_cells", frontier.size()}};
}

void ReachabilitySet::write_pgm(std::ostream& os) const {
    os << "P2\n" << n1 << " " << n0 << "\n255\n";
    for (int i0 = n0 - 1; i0 >= 0; --i0) {
        for (int i1 = 0; i1 < n1; ++i1) os << (at_index(i0, i1) ? 255 : 0) << ' ';
        os << '\n';
    }
}

void ReachabilitySet::write_csv(std::ostream& os) const {
    os << "x0,x1,reached\n";
    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1) {
            const Vec v = vertex(i0, i1);
            os << v[0] << ',' << v[1] << ',' << int(at_index(i0, i1)) << '\n';
        }
}

namespace {

struct ChordTest {
    const PiecewiseMetric& m;
    double slack;

    // Admissibility of the chord from a to a+d; g at the midpoint.
    bool admissible(const Vec& a, const Vec& d, ReachMode mode) const {
        const Vec mid = a + 0.5 * d;
        if (!m.domain(mid)) return false;
        MetricSample s;
        try {
            s = eval_metric(m, mid);
        } catch (const Error&) {
            return false;
        }
        const Vec t_axis = m.time_axis ? m.time_axis(mid) : Vec::Unit(m.dim, 0);
        if (d.dot(s.g * t_axis) >= 0.0) return false;  // not future-directed
        const double q = d.dot(s.g * d);
        return mode == ReachMode::causal ? q <= slack : q <= -slack;
    }
};

}  // namespace

ReachabilitySet grid_reachability(const PiecewiseMetric& m, const Vec& source,
                                  const GridSpec& spec, ReachMode mode,
                                  const ReachOptions& opts) {
    if (m.dim != 2 || m.signature != Signature::lorentzian)
        throw BadParameter("grid_reachability: 2d Lorentzian metrics only");
    if (!(spec.h > 0)) throw BadParameter("grid_reachability: h must be positive");

    ReachabilitySet rs;
    const double h = spec.h;
    // snap bounds outward onto the lattice anchored at 0
    const long lo0 = std::lround(std::floor(spec.min0 / h));
    const long hi0 = std::lround(std::ceil(spec.max0 / h));
    const long lo1 = std::lround(std::floor(spec.min1 / h));
    const long hi1 = std::lround(std::ceil(spec.max1 / h));
    rs.grid = {lo0 * h, hi0 * h, lo1 * h, hi1 * h, h};
    rs.n0 = static_cast<int>(hi0 - lo0) + 1;
    rs.n1 = static_cast<int>(hi1 - lo1) + 1;
    rs.mode = mode;
    rs.slack_K = opts.slack_K;
    rs.neighbor_radius = opts.neighbor_radius;
    rs.reached.assign(static_cast<size_t>(rs.n0) * rs.n1, 0);

    rs.src0 = static_cast<int>(std::lround((source[0] - rs.grid.min0) / h));
    rs.src1 = static_cast<int>(std::lround((source[1] - rs.grid.min1) / h));
    if (rs.src0 < 0 || rs.src1 < 0 || rs.src0 >= rs.n0 || rs.src1 >= rs.n1)
        throw BadParameter("grid_reachability: source outside grid");

    const int R = opts.neighbor_radius;
    std::vector<std::pair<int, int>> offsets;
    for (int di = -R; di <= R; ++di)
        for (int dj = -R; dj <= R; ++dj)
            if (di != 0 || dj != 0) offsets.emplace_back(di, dj);

    const ChordTest test{m, opts.slack_K * h * h};

    rs.reached[rs.index(rs.src0, rs.src1)] = 1;
    std::deque<std::pair<int, int>> queue{{rs.src0, rs.src1}};
    while (!queue.empty()) {
        const auto [i0, i1] = queue.front();
        queue.pop_front();
        const Vec a = rs.vertex(i0, i1);
        if (!m.domain(a)) continue;
        int admissible_dirs = 0;
        for (const auto& [di, dj] : offsets) {
            Vec d(2);
            d << di * h, dj * h;
            // count cone resolution regardless of grid clipping
            const bool ok = test.admissible(a, d, mode);
            if (ok) ++admissible_dirs;
            if (!ok) continue;
            const int j0 = i0 + di, j1 = i1 + dj;
            if (j0 < 0 || j1 < 0 || j0 >= rs.n0 || j1 >= rs.n1) continue;
            if (rs.reached[rs.index(j0, j1)]) continue;
            if (!m.domain(rs.vertex(j0, j1))) continue;
            rs.reached[rs.index(j0, j1)] = 1;
            queue.emplace_back(j0, j1);
        }
        if (admissible_dirs < 8)
            throw ResolutionTooCoarse(
                "grid_reachability: fewer than 8 admissible neighbor directions");
    }

    for (int i0 = 0; i0 < rs.n0; ++i0)
        for (int i1 = 0; i1 < rs.n1; ++i1) {
            if (!rs.at_index(i0, i1)) continue;
            bool edge = false;
            for (int di = -1; di <= 1 && !edge; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int j0 = i0 + di, j1 = i1 + dj;
                    if (j0 < 0 || j1 < 0 || j0 >= rs.n0 || j1 >= rs.n1) continue;
                    if (!rs.at_index(j0, j1)) {
                        edge = true;
                        break;
                    }
                }
            if (edge) rs.frontier.emplace_back(i0, i1);
        }
    return rs;
}

// --- causal character -----------------------------------------------------------

CharacterReport causal_character(const PiecewiseMetric& m, const GeodesicRecord& rec,
                                 double null_tol) {
    if (m.signature != Signature::lorentzian)
        throw BadParameter("causal_character: Lorentzian metrics only");
    CharacterReport rep;
    rep.series = rec.norm_trace.value;
    rep.verdict = classify_norm_samples(rep.series, null_tol);
    return rep;
}

CharacterReport causal_character(const PiecewiseMetric& m, const Polyline& c,
                                 double null_tol) {
    if (m.signature != Signature::lorentzian)
        throw BadParameter("causal_character: Lorentzian metrics only");
    CharacterReport rep;
    for (int i = 0; i + 1 < static_cast<int>(c.nodes.size()); ++i) {
        const Vec d = c.nodes[i + 1] - c.nodes[i];
        const double e2 = d.squaredNorm();
        if (e2 == 0.0) continue;
        const Vec mid = 0.5 * (c.nodes[i] + c.nodes[i + 1]);
        const Mat g = eval_metric(m, mid).g;
        rep.series.push_back(d.dot(g * d) / e2);
    }
    rep.verdict = classify_norm_samples(rep.series, null_tol);
    return rep;
}

// --- maximizer ------------------------------------------------------------------

namespace {

// Per-segment Lorentzian length; -1 on a cone violation.
double segment_length(const PiecewiseMetric& m, const Vec& a, const Vec& b) {
    const Vec d = b - a;
    if (d.norm() == 0.0) return 0.0;
    const Vec mid = 0.5 * (a + b);
    MetricSample s;
    try {
        s = eval_metric(m, mid);
    } catch (const Error&) {
        return -1.0;
    }
    const Vec t_axis = m.time_axis ? m.time_axis(mid) : Vec::Unit(a.size(), 0);
    if (d.dot(s.g * t_axis) >= 0.0) return -1.0;
    const double q = d.dot(s.g * d);
    if (q > 0.0) return -1.0;
    return std::sqrt(-q);
}

// Longest causal path to q in the reachability DAG (vertices in lexicographic
// order; admissible chords never decrease it).
Polyline longest_path_seed(const PiecewiseMetric& m, const ReachabilitySet& rs,
                           const Vec& q, const ReachOptions& opts) {
    const int R = opts.neighbor_radius;
    const double h = rs.grid.h;
    const ChordTest test{m, opts.slack_K * h * h};
    const int n = rs.n0 * rs.n1;
    std::vector<double> best(n, -std::numeric_limits<double>::infinity());
    std::vector<int> pred(n, -1);
    best[rs.index(rs.src0, rs.src1)] = 0.0;

    for (int i0 = 0; i0 < rs.n0; ++i0)
        for (int i1 = 0; i1 < rs.n1; ++i1) {
            const int from = rs.index(i0, i1);
            if (!std::isfinite(best[from]) || !rs.reached[from]) continue;
            const Vec a = rs.vertex(i0, i1);
            for (int di = 0; di <= R; ++di)
                for (int dj = -R; dj <= R; ++dj) {
                    if (di == 0 && dj <= 0) continue;  // lex-forward edges only
                    const int j0 = i0 + di, j1 = i1 + dj;
                    if (j0 < 0 || j1 < 0 || j0 >= rs.n0 || j1 >= rs.n1) continue;
                    const int to = rs.index(j0, j1);
                    if (!rs.reached[to]) continue;
                    Vec d(2);
                    d << di * h, dj * h;
                    if (!test.admissible(a, d, ReachMode::causal)) continue;
                    const double len = segment_length(m, a, rs.vertex(j0, j1));
                    const double w = len < 0.0 ? 0.0 : len;
                    if (best[from] + w > best[to]) {
                        best[to] = best[from] + w;
                        pred[to] = from;
                    }
                }
        }

    const int q0 = static_cast<int>(std::lround((q[0] - rs.grid.min0) / h));
    const int q1 = static_cast<int>(std::lround((q[1] - rs.grid.min1) / h));
    const int target = rs.index(q0, q1);
    if (q0 < 0 || q1 < 0 || q0 >= rs.n0 || q1 >= rs.n1 || !std::isfinite(best[target]))
        throw NotCausallyRelated("maximize_causal_bvp: q not in the causal future of p");

    Polyline path;
    for (int at = target; at != -1; at = pred[at])
        path.nodes.push_back(rs.vertex(at / rs.n1, at % rs.n1));
    std::reverse(path.nodes.begin(), path.nodes.end());
    return path;
}

// Resample a polygonal path to n segments by cumulative Euclidean length.
Polyline resample(const Polyline& path, int n_segments) {
    std::vector<double> cum(path.nodes.size(), 0.0);
    for (size_t i = 1; i < path.nodes.size(); ++i)
        cum[i] = cum[i - 1] + (path.nodes[i] - path.nodes[i - 1]).norm();
    const double L = cum.back();
    Polyline out;
    for (int k = 0; k <= n_segments; ++k) {
        const double s = L * k / n_segments;
        size_t seg = std::upper_bound(cum.begin(), cum.end(), s) - cum.begin();
        seg = std::clamp(seg, size_t(1), path.nodes.size() - 1) - 1;
        const double denom = cum[seg + 1] - cum[seg];
        const double frac = denom > 0 ? (s - cum[seg]) / denom : 0.0;
        out.nodes.push_back(path.nodes[seg] +
                            frac * (path.nodes[seg + 1] - path.nodes[seg]));
    }
    out.nodes.front() = path.nodes.front();
    out.nodes.back() = path.nodes.back();
    return out;
}

// Lift the time coordinate of the later node until the segment re-enters the
// cone (the scalar feasibility restoration of the ascent).
bool repair_segment(const PiecewiseMetric& m, const Vec& a, Vec& b, double h) {
    for (int it = 0; it < 60; ++it) {
        if (segment_length(m, a, b) >= 0.0) return true;
        const Vec mid = 0.5 * (a + b);
        Vec t_axis;
        try {
            t_axis = m.time_axis ? m.time_axis(mid) : Vec::Unit(a.size(), 0);
        } catch (const Error&) {
            return false;
        }
        b += h * t_axis;
    }
    return segment_length(m, a, b) >= 0.0;
}

}  // namespace

MaximizerResult maximize_causal_bvp(const PiecewiseMetric& m, const Vec& p,
                                    const Vec& q, const MaximizeOptions& opts) {
    if (m.signature != Signature::lorentzian)
        throw BadParameter("maximize_causal_bvp: Lorentzian metrics only");

    Polyline seed;
    double step0 = opts.step0;
    if (m.dim == 2) {
        GridSpec spec = opts.seed_grid;
        if (!(spec.h > 0)) {
            const double pad = 0.25 * (q - p).norm() + 1e-3;
            spec.min0 = std::min(p[0], q[0]) - pad;
            spec.max0 = std::max(p[0], q[0]) + pad;
            spec.min1 = std::min(p[1], q[1]) - pad;
            spec.max1 = std::max(p[1], q[1]) + pad;
            spec.h = (spec.max0 - spec.min0) / 96.0;
        }
        auto rs = grid_reachability(m, p, spec, ReachMode::causal, opts.reach);
        if (!rs.at(q))
            throw NotCausallyRelated("maximize_causal_bvp: q not causal-reachable");
        seed = resample(longest_path_seed(m, rs, q, opts.reach), opts.n_segments);
        if (step0 <= 0) step0 = 0.5 * spec.h;
    } else {
        seed = straight_polyline(p, q, opts.n_segments);
        for (int i = 0; i + 1 <= seed.segment_count(); ++i)
            if (segment_length(m, seed.nodes[i], seed.nodes[i + 1]) < 0.0)
                throw NotCausallyRelated(
                    "maximize_causal_bvp: straight chord not causal (no 3d grid seed)");
        if (step0 <= 0) step0 = 0.05 * (q - p).norm() / opts.n_segments;
    }
    seed.nodes.front() = p;
    seed.nodes.back() = q;

    // restore feasibility after resampling
    for (size_t i = 1; i < seed.nodes.size() - 1; ++i)
        repair_segment(m, seed.nodes[i - 1], seed.nodes[i], 0.25 * step0);

    auto total_length = [&](const std::vector<Vec>& nodes) {
        double L = 0.0;
        for (size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double l = segment_length(m, nodes[i], nodes[i + 1]);
            if (l < 0.0) return -1.0;
            L += l;
        }
        return L;
    };

    std::vector<Vec> nodes = seed.nodes;
    const int n_inner = static_cast<int>(nodes.size()) - 2;
    double step = step0;
    const int dim = m.dim;
    const int N = static_cast<int>(nodes.size()) - 1;
    for (int sweep = 0; sweep < opts.max_sweeps && step > opts.step_min; ++sweep) {
        bool improved = false;
        for (int k = 1; k <= n_inner; ++k) {
            const double before = segment_length(m, nodes[k - 1], nodes[k]) +
                                  segment_length(m, nodes[k], nodes[k + 1]);
            for (int d = 0; d < dim; ++d)
                for (double sgn : {1.0, -1.0}) {
                    Vec trial = nodes[k];
                    trial[d] += sgn * step;
                    const double l1 = segment_length(m, nodes[k - 1], trial);
                    if (l1 < 0.0) continue;
                    const double l2 = segment_length(m, trial, nodes[k + 1]);
                    if (l2 < 0.0) continue;
                    if (l1 + l2 > before + 1e-14) {
                        nodes[k] = trial;
                        improved = true;
                        goto next_node;
                    }
                }
        next_node:;
        }
        // Collective bump moves: coordinate-wise ascent cannot leave the
        // gamma_0-type saddle (per-node gain |x|^a is beaten by the quadratic
        // chord cost; a joint bend wins for arbitrarily small amplitude).
        {
            const double base = total_length(nodes);
            if (base >= 0.0) {
                for (int d = 0; d < dim; ++d)
                    for (double sgn : {1.0, -1.0}) {
                        std::vector<Vec> trial = nodes;
                        for (int k = 1; k <= n_inner; ++k)
                            trial[k][d] += sgn * step * std::sin(M_PI * k / N);
                        const double lt = total_length(trial);
                        if (lt > base + 1e-14) {
                            nodes = std::move(trial);
                            improved = true;
                        }
                    }
            }
        }
        if (!improved) step *= 0.5;
    }

    MaximizerResult out;
    out.curve.nodes = std::move(nodes);
    out.length = total_length(out.curve.nodes);
    return out;
}

HwLorentzianLengths hw_lorentzian_lengths(double lambda, double eps) {
    auto fam = hw_geodesic_family(lambda, eps);
    HwLorentzianLengths out;
    out.s0 = fam.s0;
    out.y1 = fam.y1;
    out.L_gamma_pm = 2.0 * fam.s0;
    const double l0_sq = 8.0 * fam.s0 * fam.s0 - 4.0 * fam.y1 * fam.y1;
    if (l0_sq <= 0.0)
        throw Error("hw_lorentzian_lengths: gamma_0 direction not timelike here");
    out.L_gamma0 = std::sqrt(l0_sq);
    if (!(out.L_gamma0 < out.L_gamma_pm))
        throw Error("hw_lorentzian_lengths: L(gamma_0) < 2 s0 violated at these parameters");
    return out;
}

}  // namespace filigeo
