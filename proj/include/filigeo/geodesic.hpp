#pragma once

#include <vector>

#include "filigeo/filippov.hpp"
#include "filigeo/metric.hpp"

namespace filigeo {

// State of the first-order geodesic system: position + velocity.
struct PhaseState {
    Vec x;
    Vec v;
};

// Phase velocity (v, -Gamma^j_{km} v^k v^m) on the requested branch.
Vec geodesic_rhs(const PiecewiseMetric& m, const PhaseState& s, Side side);

// The geodesic system as a piecewise-smooth field on 2n-dimensional phase
// space; the interface is the position-level interface lifted to phase space,
// so both one-sided normal components equal the normal velocity.
PiecewiseField phase_field(const PiecewiseMetric& m);

enum class CausalCharacter { timelike, null_like, spacelike, mixed, not_applicable };

const char* to_string(CausalCharacter c);

// Verdict from a sampled g(v,v) series: values below -tol are timelike
// witnesses, above +tol spacelike, within the band null; mixed when more than
// one class is certified.
CausalCharacter classify_norm_samples(const std::vector<double>& values, double tol);

struct NormTrace {
    std::vector<double> s;
    std::vector<double> value;  // g(gamma', gamma') at each s
    double drift = 0.0;         // max |value - value[0]|
};

struct GeodesicRecord {
    int dim = 0;
    Trajectory trajectory;  // over phase space
    NormTrace norm_trace;
    CausalCharacter character = CausalCharacter::not_applicable;

    PhaseState state(double s) const;
    Vec position(double s) const;
    Vec velocity(double s) const;
    double s_begin() const { return trajectory.t_begin; }
    double s_end() const { return trajectory.t_end; }
};

IntegrateOptions shoot_defaults();

// Integrates the Filippov geodesic flow from (p, v).  Transversal interface
// hits restart on the far branch with identical position and velocity.
GeodesicRecord shoot_geodesic(const PiecewiseMetric& m, const Vec& p, const Vec& v,
                              double s_from, double s_to,
                              const IntegrateOptions& opts = shoot_defaults());

// Semi-analytic bent geodesic of the Hartman-Wintner metric, arclength
// parametrized on [0, 2 s0], starting at the origin with velocity
// (dir*sqrt(eps), sqrt(1-eps)).  Positions come from quadrature tables of the
// first-integral reduction; the second half is the reflection at y = y1.
struct HWFamily {
    double lambda = 0.0;
    double eps = 0.0;
    int direction = 1;
    double c = 0.0;   // sqrt(1-eps), the conserved (1-|x|^lambda) y'
    double s0 = 0.0;  // parameter of the turning point
    double y1 = 0.0;  // y at the turning point

    double turning_x() const;  // eps^(1/lambda)

    Vec position(double s) const;
    Vec velocity(double s) const;

    // quadrature tables over the substitution variable u in [0,1],
    // x = turning_x * (1 - u^2); u=1 is the start, u=0 the turning point
    std::vector<double> u_grid, s_of_u, y_of_u, ds_du, dy_du;
};

HWFamily hw_geodesic_family(double lambda, double eps, int direction = 1);

// Recomputes the tangent-norm series g(gamma', gamma') along a record.
NormTrace tangent_norm(const PiecewiseMetric& m, const GeodesicRecord& rec,
                       int n_samples = 512);

}  // namespace filigeo
