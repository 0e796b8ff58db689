#pragma once

#include <optional>
#include <vector>

#include "filigeo/geodesic.hpp"
#include "filigeo/metric.hpp"

namespace filigeo {

// Discretized curve: N+1 nodes on a uniform parameter grid over [a, b].
struct Polyline {
    std::vector<Vec> nodes;
    double a = 0.0;
    double b = 1.0;

    int segment_count() const { return static_cast<int>(nodes.size()) - 1; }
    double dt() const { return (b - a) / segment_count(); }
    double param(int i) const { return a + (b - a) * i / segment_count(); }
};

Polyline straight_polyline(const Vec& p, const Vec& q, int n_segments);

// Straight polyline plus a half-sine bump of the given amplitude along the
// in-plane normal of the chord (sign selects the side); coordinates `i`, `j`
// span the bending plane.
Polyline bent_polyline(const Vec& p, const Vec& q, int n_segments, double amplitude,
                       int i = 0, int j = 1);

// Composite midpoint-rule length.  Riemannian: sum of sqrt(g(D,D)); Lorentzian:
// every segment must be causal, length is sum of sqrt(-g(D,D)).
double curve_length(const PiecewiseMetric& m, const Polyline& c);

// Discrete energy sum g(D_i,D_i)/(2 dt) and its analytic gradient with respect
// to the interior nodes (endpoints fixed).
double polyline_energy(const PiecewiseMetric& m, const Polyline& c);
std::vector<Vec> polyline_energy_gradient(const PiecewiseMetric& m, const Polyline& c);

struct MinimizeOptions {
    int max_iters = 4000;
    double grad_tol = 1e-8;
    std::vector<Polyline> seeds;  // defaults: straight + left/right bends
};

// Local minimizer of the discrete energy functional by nonlinear conjugate
// gradients with backtracking, starting from each seed; returns the best
// converged polyline.  Throws NoConvergence when no seed converges.
Polyline minimize_bvp(const PiecewiseMetric& m, const Vec& p, const Vec& q,
                      int n_segments, const MinimizeOptions& opts = {});

struct BvpSolution {
    Vec direction;       // initial unit-speed velocity
    double arrival_s;    // parameter at which the shot meets q
    double miss;         // terminal miss distance
    double length;       // curve length of the connecting geodesic
};

struct BvpSolutionSet {
    std::vector<BvpSolution> solutions;
    double dedup_radius = 1e-3;
};

struct ShootingOptions {
    double bvp_tol = 1e-9;
    double dedup_radius = 1e-3;
    double capture_factor = 0.15;  // capture radius relative to |q - p|
    int max_newton = 30;
    double direction_span = 1.5;   // Lorentzian chart half-width
};

// Multi-solution boundary-value search: scans a grid of unit-speed initial
// directions, refines promising shots by Newton on the terminal miss, and
// deduplicates by initial direction.  Riemannian metrics scan the direction
// circle (dim 2); Lorentzian metrics scan the unit-timelike hyperboloid chart
// (dim 3: v = (T, X, Y) with g(v,v) = -1).
BvpSolutionSet geodesic_bvp_shooting(const PiecewiseMetric& m, const Vec& p,
                                     const Vec& q, double total_s, int angle_grid,
                                     const ShootingOptions& opts = {});

struct DbrResidual {
    std::vector<double> t;            // arclength grid (interior stencil points)
    std::vector<std::vector<double>> series;  // per coordinate
    Vec deviation;                    // standard deviation of each series
};

// Du Bois-Reymond first-integral residual R_i(t) = F_{vel,i}(t) - int F_{pos,i}
// along an (internally arclength-reparametrized) polyline.  Requires the
// metric to be C^1 along the curve: touching the interface of a non-C^1
// metric raises InterfaceOnCurve.
DbrResidual dbr_residual(const PiecewiseMetric& m, const Polyline& c);

}  // namespace filigeo
