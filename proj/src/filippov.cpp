#include "filigeo/filippov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace filigeo {

const char* to_string(HitKind k) {
    switch (k) {
        case HitKind::CrossUp: return "cross-up";
        case HitKind::CrossDown: return "cross-down";
        case HitKind::Sliding: return "sliding";
        case HitKind::Repulsive: return "repulsive";
        default: return "tangential";
    }
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::Completed: return "completed";
        case Termination::DomainExit: return "domain-exit";
        case Termination::RepulsiveStop: return "repulsive-stop";
        case Termination::SlidingExit: return "sliding-exit";
        default: return "step-failure";
    }
}

HitKind classify_interface_hit(double fn_minus, double fn_plus, double tol) {
    if (std::abs(fn_minus) <= tol || std::abs(fn_plus) <= tol)
        return HitKind::Tangential;
    if (fn_minus > tol && fn_plus > tol) return HitKind::CrossUp;
    if (fn_minus < -tol && fn_plus < -tol) return HitKind::CrossDown;
    if (fn_minus < -tol && fn_plus > tol) return HitKind::Repulsive;
    return HitKind::Sliding;  // fn_minus > tol, fn_plus < -tol
}

// --- hull --------------------------------------------------------------------

namespace {

// Andrew monotone chain; returns hull vertices in counterclockwise order.
std::vector<Vec> hull2d(std::vector<Vec> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec& a, const Vec& b) { return (a - b).norm() == 0; }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n <= 2) return pts;
    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vec> h(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (int i = n - 2, lo = k + 1; i >= 0; --i) {
        while (k >= lo && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

// Fixed direction set for support-function queries in dimension d.
std::vector<Vec> probe_directions(int d) {
    std::vector<Vec> dirs;
    for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e[i] = 1.0;
        dirs.push_back(e);
        dirs.push_back(-e);
    }
    std::mt19937_64 rng(0x517cc1b727220a95ull);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 32 * d; ++k) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v[i] = u(rng);
        const double n = v.norm();
        if (n > 1e-8) dirs.push_back(v / n);
    }
    return dirs;
}

}  // namespace

double HullApproximation::support(const Vec& direction) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) best = std::max(best, s.dot(direction));
    return best;
}

bool HullApproximation::contains(const Vec& p, double tol) const {
    if (samples.empty()) return false;
    const int d = static_cast<int>(p.size());
    if (d == 1) {
        auto iv = component_interval(0);
        return p[0] >= iv[0] - tol && p[0] <= iv[1] + tol;
    }
    for (const auto& u : probe_directions(d))
        if (p.dot(u) > support(u) + tol) return false;
    return true;
}

double HullApproximation::diameter() const {
    const auto& pts = vertices.empty() ? samples : vertices;
    double best = 0.0;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
            best = std::max(best, (pts[i] - pts[j]).norm());
    return best;
}

std::array<double, 2> HullApproximation::component_interval(int k) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : samples) {
        lo = std::min(lo, s[k]);
        hi = std::max(hi, s[k]);
    }
    return {lo, hi};
}

HullApproximation filippov_hull(const PiecewiseField& f, const Vec& x,
                                double delta, int n_samples,
                                std::uint64_t seed) {
    if (delta <= 0) throw BadParameter("filippov_hull: delta must be positive");
    if (n_samples < f.dim + 1)
        throw BadParameter("filippov_hull: need at least dim+1 samples");
    HullApproximation hull;
    hull.center = x;
    hull.radius = delta;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int d = f.dim;
    int accepted = 0;
    int tries = 0;
    while (accepted < n_samples && tries < 100 * n_samples) {
        ++tries;
        Vec dir(d);
        for (int i = 0; i < d; ++i) dir[i] = gauss(rng);
        const double nrm = dir.norm();
        if (nrm < 1e-12) continue;
        const double r = delta * std::pow(unif(rng), 1.0 / d);
        Vec p = x + (r / nrm) * dir;
        if (f.domain && !f.domain(p)) continue;
        const double phi = f.level(p);
        if (phi == 0.0) continue;  // exclude the null set {phi=0}
        hull.samples.push_back(f.eval(p, phi > 0 ? Side::plus : Side::minus));
        ++accepted;
    }
    // Deduplicate sampled values (piecewise-constant fields collapse hard).
    std::vector<Vec> uniq;
    for (const auto& s : hull.samples) {
        bool dup = false;
        for (const auto& v : uniq)
            if ((v - s).norm() <= 1e-13 * (1.0 + v.norm())) {
                dup = true;
                break;
            }
        if (!dup) uniq.push_back(s);
    }
    hull.samples = std::move(uniq);

    if (d == 1) {
        auto iv = hull.component_interval(0);
        hull.vertices = {Vec::Constant(1, iv[0]), Vec::Constant(1, iv[1])};
    } else if (d == 2) {
        hull.vertices = hull2d(hull.samples);
    } else {
        hull.vertices = hull.samples;  // support-function representation
    }
    return hull;
}

Vec sliding_field(const PiecewiseField& f, const Vec& x) {
    auto [fm, fp] = f.normal_components(x);
    if (classify_interface_hit(fm, fp, 1e-9) != HitKind::Sliding)
        throw NotSliding("sliding_field: normal components not in the sliding configuration");
    const double alpha = fm / (fm - fp);
    return alpha * f.f_plus(x) + (1.0 - alpha) * f.f_minus(x);
}

// --- Dormand-Prince 5(4) with dense output -----------------------------------

namespace {

struct Dopri5Step {
    Vec y1;        // state at the end of the step
    Vec k1, k7;    // slopes at both ends (k7 feeds FSAL)
    DenseSegment seg;
    double err = 0.0;
    bool finite = true;
};

constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                 A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double D1 = -12715105075.0 / 11282082432.0;
constexpr double D3 = 87487479700.0 / 32700410799.0;
constexpr double D4 = -10690763975.0 / 1880347072.0;
constexpr double D5 = 701980252875.0 / 199316789632.0;
constexpr double D6 = -1453857185.0 / 822651844.0;
constexpr double D7 = 69997945.0 / 29380423.0;

using Rhs = std::function<Vec(const Vec&)>;

Dopri5Step dopri5_step(const Rhs& rhs, double t, const Vec& y, const Vec& k1,
                       double h, double rtol, double atol, Side side) {
    Dopri5Step out;
    out.k1 = k1;
    const Vec k2 = rhs(y + h * (A21 * k1));
    const Vec k3 = rhs(y + h * (A31 * k1 + A32 * k2));
    const Vec k4 = rhs(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    const Vec k5 = rhs(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    const Vec k6 = rhs(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    out.y1 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    out.k7 = rhs(out.y1);
    const Vec e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * out.k7);

    if (!out.y1.allFinite() || !e.allFinite() || !out.k7.allFinite()) {
        out.finite = false;
        out.err = std::numeric_limits<double>::infinity();
        return out;
    }
    double acc = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(out.y1[i]));
        const double q = e[i] / sc;
        acc += q * q;
    }
    out.err = std::sqrt(acc / y.size());

    DenseSegment& s = out.seg;
    s.t0 = t;
    s.t1 = t + h;
    s.p0 = t;
    s.dt = h;
    s.side = side;
    const Vec ydiff = out.y1 - y;
    const Vec bspl = h * k1 - ydiff;
    s.r1 = y;
    s.r2 = ydiff;
    s.r3 = bspl;
    s.r4 = ydiff - h * out.k7 - bspl;
    s.r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * out.k7);
    return out;
}

}  // namespace

// --- trajectory --------------------------------------------------------------

Vec Trajectory::state(double t) const {
    if (segments.empty()) throw Error("Trajectory::state: empty trajectory");
    t = std::clamp(t, t_begin, t_end);
    int lo = 0, hi = static_cast<int>(segments.size()) - 1;
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (segments[mid].t1 < t)
            lo = mid + 1;
        else
            hi = mid;
    }
    return segments[lo].eval(t);
}

Vec Trajectory::final_state() const {
    if (segments.empty()) throw Error("Trajectory::final_state: empty trajectory");
    return segments.back().eval(segments.back().t1);
}

Side Trajectory::side_at(double t) const {
    if (segments.empty()) throw Error("Trajectory::side_at: empty trajectory");
    t = std::clamp(t, t_begin, t_end);
    for (const auto& s : segments)
        if (t <= s.t1) return s.side;
    return segments.back().side;
}

std::vector<std::pair<double, Vec>> Trajectory::sample(int n) const {
    n = std::max(n, 1);
    std::vector<std::pair<double, Vec>> out;
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double t = t_begin + (t_end - t_begin) * i / n;
        out.emplace_back(t, state(t));
    }
    return out;
}

// --- event-driven integration --------------------------------------------------

namespace {

// Deadbanded sign category of the level value.
int sign_cat(double phi) {
    if (phi > kOnSurfaceTol) return 1;
    if (phi < -kOnSurfaceTol) return -1;
    return 0;
}

struct EventLoc {
    double t;
    Vec x;
};

// Bisect phi(seg(t)) = 0 over [ta, tb] (phi changes strict sign) down to tol.
EventLoc bisect_zero(const PiecewiseField& f, const DenseSegment& seg,
                     double ta, double tb, double phia, double tol) {
    while (tb - ta > tol) {
        const double tm = 0.5 * (ta + tb);
        const double pm = f.level(seg.eval(tm));
        if ((pm > 0) == (phia > 0)) {
            ta = tm;
            phia = pm;
        } else {
            tb = tm;
        }
    }
    const double te = 0.5 * (ta + tb);
    return {te, seg.eval(te)};
}

// Bisect the domain-membership predicate: first parameter beyond which the
// dense state leaves the domain.
EventLoc bisect_domain_exit(const PiecewiseField& f, const DenseSegment& seg,
                            double ta, double tb, double tol) {
    while (tb - ta > tol) {
        const double tm = 0.5 * (ta + tb);
        if (f.in_domain(seg.eval(tm)))
            ta = tm;
        else
            tb = tm;
    }
    return {ta, seg.eval(ta)};
}

// Newton projection of x onto {level=0}; the displacement is O(|phi|).
Vec project_to_level(const PiecewiseField& f, Vec x) {
    for (int it = 0; it < 3; ++it) {
        const double phi = f.level(x);
        if (std::abs(phi) <= 1e-15) break;
        const Vec g = f.level_grad(x);
        const double g2 = g.squaredNorm();
        if (g2 == 0.0) break;
        x -= (phi / g2) * g;
    }
    return x;
}

enum class ScanOutcome { Clean, Interrupted, Terminated };

class FilippovIntegrator {
  public:
    FilippovIntegrator(const PiecewiseField& f, const IntegrateOptions& opts,
                       double t0, double t1)
        : f_(f), opts_(opts), t0_(t0), t1_(t1) {
        max_step_ = opts.max_step > 0 ? opts.max_step : (t1 - t0) / 8.0;
        if (max_step_ <= 0) max_step_ = 1.0;
    }

    Trajectory run(const Vec& x0) {
        traj_.t_begin = t0_;
        traj_.t_requested = t1_;
        if (!f_.in_domain(x0))
            throw OutsideDomain("integrate_filippov: initial state outside domain");

        t_ = t0_;
        x_ = x0;
        window_start_ = t0_;
        events_in_window_ = 0;

        if (!start_states()) return traj_;  // repulsive / undecidable start

        h_ = opts_.initial_step > 0 ? opts_.initial_step : suggest_h0();
        while (t_ < t1_ - 1e-14 * std::max(1.0, std::abs(t1_))) {
            const bool ok = sliding_ ? advance_sliding() : advance_branch();
            if (!ok) return traj_;
        }
        finish(Termination::Completed, t1_);
        return traj_;
    }

  private:
    // Chooses the starting mode/branch.  Returns false when integration
    // cannot proceed (repulsive or undecidable tangential start).
    bool start_states() {
        const double phi = f_.level(x_);
        const int cat = sign_cat(phi);
        if (cat != 0) {
            side_ = cat > 0 ? Side::plus : Side::minus;
            return true;
        }
        auto [fm, fp] = f_.normal_components(x_);
        const HitKind kind = classify_interface_hit(fm, fp, opts_.classify_tol);
        switch (kind) {
            case HitKind::CrossUp:
                record_event(t0_, x_, fm, fp, kind);
                side_ = Side::plus;
                return true;
            case HitKind::CrossDown:
                record_event(t0_, x_, fm, fp, kind);
                side_ = Side::minus;
                return true;
            case HitKind::Sliding:
                record_event(t0_, x_, fm, fp, kind);
                sliding_ = true;
                return true;
            case HitKind::Repulsive:
                record_event(t0_, x_, fm, fp, kind);
                traj_.continuations = {{Side::minus, x_}, {Side::plus, x_}};
                finish(Termination::RepulsiveStop, t0_);
                return false;
            default:
                return resolve_tangential(t0_, x_, fm, fp);
        }
    }

    double suggest_h0() const {
        Vec k;
        try {
            k = f_.eval(x_, sliding_ ? Side::plus : side_);
        } catch (const Error&) {
            return max_step_ / 64.0;
        }
        const double scale = (1.0 + x_.norm()) / (1.0 + k.norm());
        return std::min(max_step_, 0.01 * scale);
    }

    void record_event(double t, const Vec& x, double fm, double fp, HitKind kind) {
        traj_.events.push_back({t, x, fm, fp, kind});
        if (t - window_start_ > max_step_) {
            window_start_ = t;
            events_in_window_ = 1;
        } else {
            ++events_in_window_;
        }
    }

    void finish(Termination why, double t_end) {
        traj_.termination = why;
        traj_.t_end = t_end;
    }

    // Applies the tangential policy at (t, x).  Returns true when a
    // continuation branch was selected.
    bool resolve_tangential(double t, const Vec& x, double fm, double fp,
                            bool event_recorded = false) {
        const Vec vm = f_.f_minus(x);
        const Vec vp = f_.f_plus(x);
        const double scale = 1.0 + std::max(vm.norm(), vp.norm());
        if ((vp - vm).norm() <= 1e-9 * scale) {
            // Field continuous across N here: integrate classically on the
            // hinted branch (covers interfaces that are totally geodesic).
            side_ = opts_.side_hint;
            sliding_ = false;
            return true;
        }
        // Curvature probe: the normal component a flow-step downstream is the
        // finite-difference d/dt of fN along each one-sided flow, i.e. the
        // second derivative of level(x(t)).  A positive signal on the plus
        // flow (resp. negative on the minus flow) means that flow departs N.
        const double tau = std::max(std::sqrt(opts_.event_tol), 1e-4);
        double curve_p = 0.0, curve_m = 0.0;
        try {
            curve_p = f_.normal_components(x + tau * vp).second;
        } catch (const Error&) {
        }
        try {
            curve_m = f_.normal_components(x + tau * vm).first;
        } catch (const Error&) {
        }
        if (curve_p > opts_.classify_tol) {
            side_ = Side::plus;
            sliding_ = false;
            return true;
        }
        if (curve_m < -opts_.classify_tol) {
            side_ = Side::minus;
            sliding_ = false;
            return true;
        }
        if (!event_recorded) record_event(t, x, fm, fp, HitKind::Tangential);
        finish(Termination::SlidingExit, t);
        return false;
    }

    // Handles a located interface hit.  Returns false when integration stops.
    bool handle_event(double te, const Vec& xe_raw) {
        const Vec xe = project_to_level(f_, xe_raw);
        auto [fm, fp] = f_.normal_components(xe);
        const HitKind kind = classify_interface_hit(fm, fp, opts_.classify_tol);
        if (kind != HitKind::Tangential) record_event(te, xe, fm, fp, kind);

        if (events_in_window_ > opts_.chatter_limit) {
            // Chattering guard: alternating crossings at event-tolerance scale
            // indicate an attractive surface; fall back to sliding dynamics.
            if (fm > 0 && fp < 0) {
                t_ = te;
                x_ = xe;
                sliding_ = true;
                return true;
            }
            finish(Termination::StepFailure, te);
            return false;
        }

        t_ = te;
        x_ = xe;
        switch (kind) {
            case HitKind::CrossUp:
                side_ = Side::plus;  // restart with identical state: C^1-matching
                return true;
            case HitKind::CrossDown:
                side_ = Side::minus;
                return true;
            case HitKind::Sliding:
                sliding_ = true;
                return true;
            case HitKind::Repulsive:
                traj_.continuations = {{Side::minus, xe}, {Side::plus, xe}};
                finish(Termination::RepulsiveStop, te);
                return false;
            default:
                return resolve_tangential(te, xe, fm, fp);
        }
    }

    // Pushes seg (possibly truncated to [seg.t0, t_hi]) onto the trajectory.
    void push_segment(DenseSegment seg, double t_hi) {
        seg.t1 = t_hi;
        if (seg.t1 > seg.t0) traj_.segments.push_back(std::move(seg));
    }

    // Re-integrates [p0, te] as a single clean step so the stored dense piece
    // ends exactly at the restart state (the original step's stages straddled
    // the interface, degrading its dense output there).  Returns the state at
    // te and pushes the replacement segment.
    Vec truncate_by_substep(const Rhs& rhs, const Dopri5Step& step, double te) {
        const DenseSegment& seg = step.seg;
        if (te <= seg.p0) return seg.r1;
        if (te >= seg.p0 + seg.dt) {
            push_segment(seg, seg.p0 + seg.dt);
            return step.y1;
        }
        Dopri5Step sub = dopri5_step(rhs, seg.p0, seg.r1, step.k1, te - seg.p0,
                                     opts_.rtol, opts_.atol, seg.side);
        if (!sub.finite) {  // fall back to the original dense output
            DenseSegment tr = seg;
            push_segment(tr, te);
            return seg.eval(te);
        }
        push_segment(sub.seg, te);
        return sub.y1;
    }

    // Scans an accepted segment for interface events or domain exit.
    ScanOutcome postprocess_segment(const Rhs& rhs, const Dopri5Step& step) {
        const DenseSegment& seg = step.seg;
        const int n_scan = 8;
        const double t_hi = seg.p0 + seg.dt;

        double ta = seg.t0;
        double phia = f_.level(seg.eval(ta));
        int cata = sign_cat(phia);
        for (int i = 1; i <= n_scan; ++i) {
            const double tb = seg.t0 + (t_hi - seg.t0) * i / n_scan;
            const Vec xb = seg.eval(tb);
            if (!f_.in_domain(xb)) {
                EventLoc exit = bisect_domain_exit(f_, seg, ta, tb, opts_.event_tol);
                const Vec xe = truncate_by_substep(rhs, step, exit.t);
                finish(Termination::DomainExit, exit.t);
                return ScanOutcome::Terminated;
            }
            const double phib = f_.level(xb);
            const int catb = sign_cat(phib);
            if (cata * catb < 0) {
                EventLoc ev = bisect_zero(f_, seg, ta, tb, phia, opts_.event_tol);
                const Vec xe = truncate_by_substep(rhs, step, ev.t);
                return handle_event(ev.t, xe) ? ScanOutcome::Interrupted
                                              : ScanOutcome::Terminated;
            }
            if (cata != 0 && catb == 0) {
                // Arrived on the interface without fully crossing in this step.
                const Vec xe = truncate_by_substep(rhs, step, tb);
                return handle_event(tb, xe) ? ScanOutcome::Interrupted
                                            : ScanOutcome::Terminated;
            }
            if (cata == 0 && catb != 0) {
                const int side_sign = side_ == Side::plus ? 1 : -1;
                if (catb != side_sign) {
                    // Left the deadband on the unexpected side: the crossing
                    // happened inside the band; classify and relabel here.
                    const Vec xe = truncate_by_substep(rhs, step, ta);
                    return handle_event(ta, xe) ? ScanOutcome::Interrupted
                                                : ScanOutcome::Terminated;
                }
            }
            ta = tb;
            phia = phib;
            cata = catb;
        }
        // Clean segment.
        push_segment(seg, t_hi);
        t_ = t_hi;
        x_ = step.y1;
        return ScanOutcome::Clean;
    }

    bool advance_branch() {
        Rhs rhs = [&](const Vec& y) -> Vec {
            try {
                return f_.eval(y, side_);
            } catch (const Error&) {
                return Vec::Constant(y.size(), std::numeric_limits<double>::quiet_NaN());
            }
        };
        Vec k1 = rhs(x_);
        int rejects = 0;
        while (t_ < t1_ - 1e-14 * std::max(1.0, std::abs(t1_))) {
            double h = std::min({h_, max_step_, t1_ - t_});
            if (h < 1e-15 * std::max(1.0, std::abs(t_))) {
                finish(Termination::StepFailure, t_);
                return false;
            }
            if (!k1.allFinite()) {
                finish(f_.in_domain(x_) ? Termination::StepFailure : Termination::DomainExit, t_);
                return false;
            }
            Dopri5Step step = dopri5_step(rhs, t_, x_, k1, h, opts_.rtol, opts_.atol, side_);
            if (!step.finite || step.err > 1.0) {
                h_ = h * std::max(0.1, 0.9 * std::pow(std::max(step.err, 1e-10), -0.2));
                if (!step.finite) h_ = h * 0.25;
                if (++rejects > 200) {
                    finish(Termination::StepFailure, t_);
                    return false;
                }
                continue;
            }
            rejects = 0;
            switch (postprocess_segment(rhs, step)) {
                case ScanOutcome::Terminated:
                    return false;
                case ScanOutcome::Interrupted:
                    // Mode or branch may have changed; restart stepping.
                    h_ = std::min(h_, std::max(step.seg.dt * 0.5, opts_.event_tol));
                    return true;
                case ScanOutcome::Clean:
                    k1 = step.k7;  // FSAL
                    h_ = h * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(step.err, 1e-10), -0.2)));
                    break;
            }
        }
        finish(Termination::Completed, t1_);
        return false;  // run() returns; termination already set
    }

    bool advance_sliding() {
        Rhs rhs = [&](const Vec& y) -> Vec {
            auto [fm, fp] = f_.normal_components(y);
            const double denom = fm - fp;
            const double alpha = std::abs(denom) > 1e-300 ? fm / denom : 0.5;
            return alpha * f_.f_plus(y) + (1.0 - alpha) * f_.f_minus(y);
        };
        Vec k1 = rhs(x_);
        int rejects = 0;
        while (t_ < t1_ - 1e-14 * std::max(1.0, std::abs(t1_))) {
            double h = std::min({h_, max_step_, t1_ - t_});
            if (h < 1e-15 * std::max(1.0, std::abs(t_))) {
                finish(Termination::StepFailure, t_);
                return false;
            }
            Dopri5Step step = dopri5_step(rhs, t_, x_, k1, h, opts_.rtol, opts_.atol,
                                          Side::on_interface);
            if (!step.finite || step.err > 1.0) {
                h_ = h * std::max(0.1, 0.9 * std::pow(std::max(step.err, 1e-10), -0.2));
                if (!step.finite) h_ = h * 0.25;
                if (++rejects > 200) {
                    finish(Termination::StepFailure, t_);
                    return false;
                }
                continue;
            }
            rejects = 0;
            const DenseSegment& seg = step.seg;
            if (!f_.in_domain(step.y1)) {
                finish(Termination::DomainExit, t_);
                return false;
            }

            // Scan for the sliding-exit switch inside the step: the first
            // dense sample whose classification leaves the sliding quadrant.
            auto sliding_at = [&](double t) {
                auto [fm, fp] = f_.normal_components(seg.eval(t));
                return classify_interface_hit(fm, fp, opts_.classify_tol) ==
                       HitKind::Sliding;
            };
            const double t_hi = seg.p0 + seg.dt;
            double exit_t = -1.0;
            double ta = seg.t0;
            const int n_scan = 8;
            for (int i = 1; i <= n_scan; ++i) {
                const double tb = seg.t0 + (t_hi - seg.t0) * i / n_scan;
                if (!sliding_at(tb)) {
                    // bisect the classification switch to event tolerance
                    double lo = ta, hi = tb;
                    while (hi - lo > opts_.event_tol) {
                        const double tm = 0.5 * (lo + hi);
                        (sliding_at(tm) ? lo : hi) = tm;
                    }
                    exit_t = hi;
                    break;
                }
                ta = tb;
            }

            if (exit_t >= 0.0) {
                push_segment(seg, exit_t);
                t_ = exit_t;
                x_ = project_to_level(f_, seg.eval(exit_t));
                auto [fm, fp] = f_.normal_components(x_);
                const HitKind kind = classify_interface_hit(fm, fp, opts_.classify_tol);
                sliding_ = false;
                record_event(t_, x_, fm, fp, kind);
                switch (kind) {
                    case HitKind::CrossUp:
                        side_ = Side::plus;
                        return true;
                    case HitKind::CrossDown:
                        side_ = Side::minus;
                        return true;
                    case HitKind::Repulsive:
                        traj_.continuations = {{Side::minus, x_}, {Side::plus, x_}};
                        finish(Termination::RepulsiveStop, t_);
                        return false;
                    case HitKind::Sliding:  // wobble at the band edge: resume
                        sliding_ = true;
                        return true;
                    default:
                        return resolve_tangential(t_, x_, fm, fp,
                                                  /*event_recorded=*/true);
                }
            }

            push_segment(seg, t_hi);
            t_ = t_hi;
            x_ = project_to_level(f_, step.y1);  // keep the state pinned to N
            k1 = rhs(x_);
            h_ = h * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(step.err, 1e-10), -0.2)));
        }
        finish(Termination::Completed, t1_);
        return false;
    }

    const PiecewiseField& f_;
    IntegrateOptions opts_;
    double t0_, t1_, max_step_;
    Trajectory traj_;
    double t_ = 0.0;
    Vec x_;
    Side side_ = Side::plus;
    bool sliding_ = false;
    double h_ = 0.0;
    double window_start_ = 0.0;
    int events_in_window_ = 0;
};

}  // namespace

Trajectory integrate_filippov(const PiecewiseField& f, const Vec& x0, double t0,
                              double t1, const IntegrateOptions& opts) {
    if (!(t1 > t0)) throw BadParameter("integrate_filippov: need t1 > t0");
    FilippovIntegrator integ(f, opts, t0, t1);
    return integ.run(x0);
}

}  // namespace filigeo
