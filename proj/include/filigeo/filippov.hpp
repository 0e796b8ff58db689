#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "filigeo/core.hpp"

namespace filigeo {

// A vector field smooth on each side of the zero set of `level`, with
// one-sided extensions evaluable up to (and slightly past) the interface.
struct PiecewiseField {
    int dim = 1;
    std::function<Vec(const Vec&)> f_minus;
    std::function<Vec(const Vec&)> f_plus;
    std::function<double(const Vec&)> level;
    std::function<Vec(const Vec&)> level_grad;
    std::function<bool(const Vec&)> domain;  // optional hard walls

    Vec eval(const Vec& x, Side side) const {
        return side == Side::minus ? f_minus(x) : f_plus(x);
    }
    bool in_domain(const Vec& x) const { return !domain || domain(x); }
    // Unit normal of {level=0} pointing from the minus to the plus side.
    Vec unit_normal(const Vec& x) const {
        Vec g = level_grad(x);
        const double n = g.norm();
        if (n == 0.0) throw Error("PiecewiseField: level gradient vanished on interface");
        return g / n;
    }
    // One-sided normal components (f_minus . n, f_plus . n) at x on N.
    std::pair<double, double> normal_components(const Vec& x) const {
        const Vec n = unit_normal(x);
        return {f_minus(x).dot(n), f_plus(x).dot(n)};
    }
};

// Interface-hit taxonomy by the signs of the one-sided normal components.
enum class HitKind { CrossUp, CrossDown, Sliding, Repulsive, Tangential };

const char* to_string(HitKind k);

// Sign table (tol-deadbanded):
//   |fn_minus| <= tol or |fn_plus| <= tol  -> Tangential
//   both > tol                             -> CrossUp
//   both < -tol                            -> CrossDown
//   fn_minus < -tol < tol < fn_plus        -> Repulsive
//   fn_plus < -tol < tol < fn_minus        -> Sliding
HitKind classify_interface_hit(double fn_minus, double fn_plus, double tol);

// Sampled essential-convex-hull approximation of the field values near x.
// Samples on the ball B(x,delta) exclude the interface itself (a null set for
// the hull; for piecewise-continuous fields the hull on N equals
// co{f_minus(x), f_plus(x)}).
struct HullApproximation {
    Vec center;
    double radius = 0.0;
    std::vector<Vec> samples;   // deduplicated sampled field values
    std::vector<Vec> vertices;  // exact hull vertices for dim <= 2, else = samples

    double support(const Vec& direction) const;
    bool contains(const Vec& p, double tol) const;
    double diameter() const;
    // Exact projection of the hull onto coordinate k: [min, max].
    std::array<double, 2> component_interval(int k) const;
};

HullApproximation filippov_hull(const PiecewiseField& f, const Vec& x,
                                double delta, int n_samples,
                                std::uint64_t seed = 0x9e3779b97f4a7c15ull);

// Filippov convex combination alpha*f_plus + (1-alpha)*f_minus with vanishing
// normal component, alpha = fn_minus / (fn_minus - fn_plus).  Requires the
// sliding sign configuration at x.
Vec sliding_field(const PiecewiseField& f, const Vec& x);

struct InterfaceEvent {
    double t = 0.0;
    Vec x;
    double fn_minus = 0.0;
    double fn_plus = 0.0;
    HitKind kind = HitKind::Tangential;
};

enum class Termination { Completed, DomainExit, RepulsiveStop, SlidingExit, StepFailure };

const char* to_string(Termination t);

// One accepted integrator step with its quartic dense-output polynomial.
// [t0, t1] is the valid range; the polynomial is anchored at p0 with width dt
// (t1 < p0 + dt when the step was truncated by an event).
struct DenseSegment {
    double t0 = 0.0, t1 = 0.0;
    double p0 = 0.0, dt = 0.0;
    Side side = Side::plus;
    Vec r1, r2, r3, r4, r5;  // dense-output coefficients

    Vec eval(double t) const {
        const double th = (t - p0) / dt;
        return r1 + th * (r2 + (1.0 - th) * (r3 + th * (r4 + (1.0 - th) * r5)));
    }
};

struct Trajectory {
    std::vector<DenseSegment> segments;
    std::vector<InterfaceEvent> events;
    double t_begin = 0.0;
    double t_end = 0.0;            // parameter actually reached
    double t_requested = 0.0;
    Termination termination = Termination::Completed;
    // Both admissible restarts after a repulsive stop: (side, state).
    std::vector<std::pair<Side, Vec>> continuations;

    bool completed() const { return termination == Termination::Completed; }
    Vec state(double t) const;     // dense-output lookup, clamped to [t_begin, t_end]
    Vec final_state() const;
    Side side_at(double t) const;
    // n+1 states at uniform parameters over [t_begin, t_end].
    std::vector<std::pair<double, Vec>> sample(int n) const;
};

struct IntegrateOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double event_tol = 1e-10;      // parameter-space event localization
    double max_step = 0.0;         // 0: (t1-t0)/8
    double initial_step = 0.0;     // 0: automatic
    double classify_tol = 1e-9;    // deadband for normal-component signs
    Side side_hint = Side::plus;   // branch when starting on the interface
    int max_events = 100000;
    int chatter_limit = 50;        // events within one max_step before the guard fires
};

// Event-driven integration of the Filippov inclusion for a piecewise-smooth
// field: adaptive Dormand-Prince 5(4) stepping inside each branch, bisection
// of the dense output for phi(x(t))=0, then the classification table decides
// crossing restart (C^1-matching: identical state, other branch), sliding
// dynamics on N, or termination.
Trajectory integrate_filippov(const PiecewiseField& f, const Vec& x0,
                              double t0, double t1,
                              const IntegrateOptions& opts = {});

}  // namespace filigeo
