#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "filigeo/causal.hpp"
#include "filigeo/filippov.hpp"
#include "filigeo/geodesic.hpp"
#include "filigeo/metric.hpp"

namespace filigeo {

// Everything a reproducible run needs.  Round-trips through JSON unchanged.
struct Manifest {
    int schema_version = 1;
    std::string experiment = "integrate";
    std::string metric_name = "hw";
    double lambda = 1.5;
    double eps = 0.25;
    double rtol = 1e-10;
    double atol = 1e-12;
    double event_tol = 1e-10;
    double grid_h = 1.0 / 128;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::string format = "csv";
    std::vector<double> x0;  // optional initial data override
    std::vector<double> v0;
    double s_end = 0.0;      // 0: metric-specific default

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
    void validate() const;  // throws ManifestError
    PiecewiseMetric build_metric() const;
    IntegrateOptions integrate_options() const;
};

// CSV columns: t, x_1..x_d, side.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int n_samples);

// One record per event: {t, point, fn_minus, fn_plus, kind}; repulsive
// continuations ride along when present.
nlohmann::json events_json(const Trajectory& traj);

// CSV columns: s, x_1..x_n, v_1..v_n, norm.
void write_geodesic_csv(std::ostream& os, const GeodesicRecord& rec, int n_samples);

// CSV columns: t, x_1..x_n (one row per node).
void write_polyline_csv(std::ostream& os, const Polyline& c);

// {lambda, eps, c, s0, y1}
nlohmann::json hw_family_json(const HWFamily& fam);

}  // namespace filigeo
