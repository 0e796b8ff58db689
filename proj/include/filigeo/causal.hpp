#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "filigeo/extremal.hpp"
#include "filigeo/geodesic.hpp"

namespace filigeo {

// Metric, point, and time-orientation data for cone tests at a point.
struct ConeSample {
    Vec point;
    Mat g;
    Vec time_axis;

    double norm_of(const Vec& v) const { return v.dot(g * v); }
    // +1 future-directed, -1 past-directed, 0 orthogonal to the orientation.
    int orientation_sign(const Vec& v) const {
        const double s = v.dot(g * time_axis);
        return s < 0 ? 1 : (s > 0 ? -1 : 0);
    }
    bool time_axis_timelike() const { return norm_of(time_axis) < 0.0; }
};

ConeSample cone_sample(const PiecewiseMetric& m, const Vec& x);

// Vertex lattice {k*h} clipped to the given bounds (snapped outward so the
// origin is always on the lattice).
struct GridSpec {
    double min0 = 0, max0 = 0, min1 = 0, max1 = 0;
    double h = 0;
};

enum class ReachMode { causal, timelike };

const char* to_string(ReachMode m);

struct ReachOptions {
    int neighbor_radius = 4;  // chord offsets up to R cells per axis
    double slack_K = 0.25;    // admissibility slack sigma(h) = K h^2
};

// Reachable set of a directed-graph search: vertex p connects to q iff the
// chord q-p is future-directed and g(D,D) <= K h^2 (causal mode) resp.
// <= -K h^2 (timelike mode), with g evaluated at the chord midpoint.
// Verdicts are resolution-conditional evidence, not proof; h, K and R ride
// along in the metadata.
struct ReachabilitySet {
    GridSpec grid;
    int n0 = 0, n1 = 0;
    int src0 = 0, src1 = 0;
    ReachMode mode = ReachMode::causal;
    double slack_K = 0.0;
    int neighbor_radius = 0;
    std::vector<std::uint8_t> reached;               // row-major [i0*n1+i1]
    std::vector<std::pair<int, int>> frontier;       // reached cells with an unreached neighbor

    int index(int i0, int i1) const { return i0 * n1 + i1; }
    bool at_index(int i0, int i1) const { return reached[index(i0, i1)] != 0; }
    Vec vertex(int i0, int i1) const;
    bool at(const Vec& p) const;  // nearest-vertex lookup
    int count() const;

    nlohmann::json metadata() const;
    void write_pgm(std::ostream& os) const;
    void write_csv(std::ostream& os) const;
};

ReachabilitySet grid_reachability(const PiecewiseMetric& m, const Vec& source,
                                  const GridSpec& grid, ReachMode mode,
                                  const ReachOptions& opts = {});

struct CharacterReport {
    CausalCharacter verdict = CausalCharacter::not_applicable;
    std::vector<double> series;
};

// Pointwise sign classification of g(gamma', gamma') along a record (affine
// parameter samples) or a polyline (per-segment chords, normalized by the
// squared Euclidean chord length).
CharacterReport causal_character(const PiecewiseMetric& m, const GeodesicRecord& rec,
                                 double null_tol = 1e-8);
CharacterReport causal_character(const PiecewiseMetric& m, const Polyline& c,
                                 double null_tol = 1e-8);

struct MaximizeOptions {
    int n_segments = 64;
    int max_sweeps = 600;
    double step0 = 0.0;      // 0: derived from the seed scale
    double step_min = 1e-7;
    GridSpec seed_grid;      // dim-2 seeds come from the reachability DP
    ReachOptions reach;
};

struct MaximizerResult {
    Polyline curve;
    double length = 0.0;
};

// Maximizes the discrete Lorentzian length over causal polylines from p to q:
// greedy coordinate ascent with per-segment cone feasibility, seeded by the
// longest causal path in the reachability graph (dim 2) or the straight chord
// (dim 3).  Throws NotCausallyRelated when no causal seed exists.
MaximizerResult maximize_causal_bvp(const PiecewiseMetric& m, const Vec& p,
                                    const Vec& q, const MaximizeOptions& opts = {});

struct HwLorentzianLengths {
    double s0 = 0, y1 = 0;
    double L_gamma0 = 0;   // sqrt(8 s0^2 - 4 y1^2)
    double L_gamma_pm = 0; // 2 s0
};

// Lengths of the three connecting geodesics of the Lorentzian HW example.
HwLorentzianLengths hw_lorentzian_lengths(double lambda, double eps);

}  // namespace filigeo
