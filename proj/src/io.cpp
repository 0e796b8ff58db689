#include "filigeo/io.hpp"

#include <ostream>

#include <nlohmann/json.hpp>

namespace filigeo {

nlohmann::json Manifest::to_json() const {
    return nlohmann::json{
        {"schema_version", schema_version},
        {"experiment", experiment},
        {"metric", {{"name", metric_name}, {"lambda", lambda}, {"eps", eps}}},
        {"tolerances",
         {{"rtol", rtol}, {"atol", atol}, {"event_tol", event_tol}}},
        {"grid_h", grid_h},
        {"seed", seed},
        {"out_dir", out_dir},
        {"format", format},
        {"x0", x0},
        {"v0", v0},
        {"s_end", s_end}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
    Manifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.experiment = j.at("experiment").get<std::string>();
        const auto& metric = j.at("metric");
        m.metric_name = metric.at("name").get<std::string>();
        m.lambda = metric.value("lambda", 0.0);
        m.eps = metric.value("eps", 0.0);
        const auto& tol = j.at("tolerances");
        m.rtol = tol.at("rtol").get<double>();
        m.atol = tol.at("atol").get<double>();
        m.event_tol = tol.at("event_tol").get<double>();
        m.grid_h = j.value("grid_h", 1.0 / 128);
        m.seed = j.value("seed", std::uint64_t(1));
        m.out_dir = j.value("out_dir", std::string("."));
        m.format = j.value("format", std::string("csv"));
        m.x0 = j.value("x0", std::vector<double>{});
        m.v0 = j.value("v0", std::vector<double>{});
        m.s_end = j.value("s_end", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("manifest parse: ") + e.what());
    }
    m.validate();
    return m;
}

void Manifest::validate() const {
    if (rtol <= 0 || atol <= 0 || event_tol <= 0 || grid_h <= 0)
        throw ManifestError("manifest: tolerances and grid_h must be positive");
    if (format != "csv" && format != "json")
        throw ManifestError("manifest: format must be csv or json");
    if (x0.size() != v0.size())
        throw ManifestError("manifest: x0 and v0 must have equal length");
}

PiecewiseMetric Manifest::build_metric() const {
    if (metric_name == "hw") return hw_riemannian(lambda);
    if (metric_name == "hw-lorentzian") return hw_lorentzian(lambda);
    if (metric_name == "bubble") return bubble(lambda);
    if (metric_name == "lipschitz-corner") return lipschitz_corner();
    if (metric_name == "flat") return flat(2);
    if (metric_name == "minkowski") return flat(2, Signature::lorentzian);
    throw ManifestError("manifest: unknown metric '" + metric_name + "'");
}

IntegrateOptions Manifest::integrate_options() const {
    IntegrateOptions opts;
    opts.rtol = rtol;
    opts.atol = atol;
    opts.event_tol = event_tol;
    return opts;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int n_samples) {
    const int d = traj.segments.empty() ? 0 : static_cast<int>(traj.segments[0].r1.size());
    os << "t";
    for (int i = 0; i < d; ++i) os << ",x" << i + 1;
    os << ",side\n";
    if (d == 0) return;
    os.precision(17);
    for (const auto& [t, x] : traj.sample(n_samples)) {
        os << t;
        for (int i = 0; i < d; ++i) os << ',' << x[i];
        os << ',' << to_string(traj.side_at(t)) << '\n';
    }
}

nlohmann::json events_json(const Trajectory& traj) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : traj.events) {
        nlohmann::json point = nlohmann::json::array();
        for (int i = 0; i < e.x.size(); ++i) point.push_back(e.x[i]);
        events.push_back({{"t", e.t},
                          {"point", point},
                          {"fn_minus", e.fn_minus},
                          {"fn_plus", e.fn_plus},
                          {"kind", to_string(e.kind)}});
    }
    nlohmann::json continuations = nlohmann::json::array();
    for (const auto& [side, state] : traj.continuations) {
        nlohmann::json st = nlohmann::json::array();
        for (int i = 0; i < state.size(); ++i) st.push_back(state[i]);
        continuations.push_back({{"side", to_string(side)}, {"state", st}});
    }
    return nlohmann::json{{"events", events},
                          {"termination", to_string(traj.termination)},
                          {"continuations", continuations}};
}

void write_geodesic_csv(std::ostream& os, const GeodesicRecord& rec, int n_samples) {
    const int n = rec.dim;
    os << "s";
    for (int i = 0; i < n; ++i) os << ",x" << i + 1;
    for (int i = 0; i < n; ++i) os << ",v" << i + 1;
    os << ",norm\n";
    os.precision(17);
    for (const auto& [s, full] : rec.trajectory.sample(n_samples)) {
        os << s;
        for (int i = 0; i < 2 * n; ++i) os << ',' << full[i];
        // nearest recorded norm sample
        double val = 0.0;
        if (!rec.norm_trace.s.empty()) {
            const auto it = std::lower_bound(rec.norm_trace.s.begin(),
                                             rec.norm_trace.s.end(), s);
            const size_t k = std::min<size_t>(it - rec.norm_trace.s.begin(),
                                              rec.norm_trace.s.size() - 1);
            val = rec.norm_trace.value[k];
        }
        os << ',' << val << '\n';
    }
}

void write_polyline_csv(std::ostream& os, const Polyline& c) {
    const int n = c.nodes.empty() ? 0 : static_cast<int>(c.nodes.front().size());
    os << "t";
    for (int i = 0; i < n; ++i) os << ",x" << i + 1;
    os << '\n';
    os.precision(17);
    for (size_t k = 0; k < c.nodes.size(); ++k) {
        os << c.param(static_cast<int>(k));
        for (int i = 0; i < n; ++i) os << ',' << c.nodes[k][i];
        os << '\n';
    }
}

nlohmann::json hw_family_json(const HWFamily& fam) {
    return nlohmann::json{{"lambda", fam.lambda},
                          {"eps", fam.eps},
                          {"c", fam.c},
                          {"s0", fam.s0},
                          {"y1", fam.y1}};
}

}  // namespace filigeo
