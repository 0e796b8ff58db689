#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "filigeo/experiments.hpp"
#include "filigeo/extremal.hpp"
#include "filigeo/io.hpp"

namespace fs = std::filesystem;
using namespace filigeo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRepulsive = 3;
constexpr int kExitDomainExit = 4;
constexpr int kExitStepFailure = 5;
constexpr int kExitSlidingExit = 6;

int termination_exit_code(Termination t) {
    switch (t) {
        case Termination::Completed: return kExitOk;
        case Termination::RepulsiveStop: return kExitRepulsive;
        case Termination::DomainExit: return kExitDomainExit;
        case Termination::SlidingExit: return kExitSlidingExit;
        default: return kExitStepFailure;
    }
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

// Demo piecewise fields addressable from the command line.
PiecewiseField demo_field(const std::string& name) {
    auto field1d = [](double fm, double fp) {
        PiecewiseField f;
        f.dim = 1;
        f.f_minus = [fm](const Vec&) { return Vec::Constant(1, fm); };
        f.f_plus = [fp](const Vec&) { return Vec::Constant(1, fp); };
        f.level = [](const Vec& x) { return x[0]; };
        f.level_grad = [](const Vec&) { return Vec::Constant(1, 1.0); };
        return f;
    };
    if (name == "demo-crossing") return field1d(0.5, 1.5);
    if (name == "demo-sliding") return field1d(1.0, -1.0);
    if (name == "demo-repulsive") return field1d(-1.0, 1.0);
    throw ManifestError("unknown demo field '" + name + "'");
}

bool needs_lambda(const std::string& metric) {
    return metric == "hw" || metric == "hw-lorentzian" || metric == "bubble";
}

// Default initial data for `integrate` when none is given.
void default_initial_data(const Manifest& man, Vec& x0, Vec& v0, double& s_end) {
    if (man.metric_name == "hw") {
        auto fam = hw_geodesic_family(man.lambda, man.eps);
        x0 = (Vec(2) << 0, 0).finished();
        v0 = (Vec(2) << std::sqrt(man.eps), std::sqrt(1 - man.eps)).finished();
        if (s_end <= 0) s_end = 2 * fam.s0;
    } else if (man.metric_name == "hw-lorentzian") {
        auto fam = hw_geodesic_family(man.lambda, man.eps);
        x0 = (Vec(3) << 0, 0, 0).finished();
        v0 = (Vec(3) << std::sqrt(2.0), std::sqrt(man.eps), std::sqrt(1 - man.eps))
                 .finished();
        if (s_end <= 0) s_end = 2 * fam.s0;
    } else if (man.metric_name == "lipschitz-corner") {
        x0 = (Vec(2) << -0.5, 0).finished();
        Vec v = (Vec(2) << 1.0, 0.5).finished();
        v0 = v / std::sqrt(v[0] * v[0] + 1.5 * v[1] * v[1]);
        if (s_end <= 0) s_end = 1.5;
    } else if (man.metric_name == "bubble") {
        // stays inside the lower half, clear of the Hoelder axis
        x0 = (Vec(2) << -0.6, 0).finished();
        v0 = (Vec(2) << 1.0, 0.1).finished();
        if (s_end <= 0) s_end = 0.3;
    } else {
        x0 = Vec::Zero(2);
        v0 = (Vec(2) << 1, 0).finished();
        if (s_end <= 0) s_end = 1.0;
    }
}

int cmd_integrate(const Manifest& man) {
    fs::create_directories(man.out_dir);

    Trajectory traj;
    if (man.metric_name.rfind("demo-", 0) == 0) {
        auto f = demo_field(man.metric_name);
        Vec x0 = man.x0.empty() ? Vec::Constant(1, man.metric_name == "demo-crossing"
                                                       ? -1.0
                                                       : (man.metric_name == "demo-sliding"
                                                              ? 1.0
                                                              : 0.0))
                                : to_vec(man.x0);
        const double s_end = man.s_end > 0 ? man.s_end : 3.0;
        traj = integrate_filippov(f, x0, 0.0, s_end, man.integrate_options());
    } else {
        auto m = man.build_metric();
        Vec x0, v0;
        double s_end = man.s_end;
        if (!man.x0.empty()) {
            x0 = to_vec(man.x0);
            v0 = to_vec(man.v0);
            if (s_end <= 0) s_end = 1.0;
        } else {
            default_initial_data(man, x0, v0, s_end);
        }
        if (x0.size() != m.dim)
            throw ManifestError("initial data dimension does not match the metric");
        auto rec = shoot_geodesic(m, x0, v0, 0.0, s_end, man.integrate_options());
        traj = rec.trajectory;
        {
            std::ofstream csv(fs::path(man.out_dir) / "trajectory.csv");
            write_geodesic_csv(csv, rec, 512);
        }
        if (man.metric_name == "hw" || man.metric_name == "hw-lorentzian") {
            std::ofstream fam_out(fs::path(man.out_dir) / "family.json");
            fam_out << hw_family_json(hw_geodesic_family(man.lambda, man.eps)).dump(2)
                    << "\n";
        }
        std::ofstream ev(fs::path(man.out_dir) / "events.json");
        ev << events_json(traj).dump(2) << "\n";
        std::cout << "termination: " << to_string(traj.termination) << "\n";
        return termination_exit_code(traj.termination);
    }

    {
        std::ofstream csv(fs::path(man.out_dir) / "trajectory.csv");
        write_trajectory_csv(csv, traj, 512);
        std::ofstream ev(fs::path(man.out_dir) / "events.json");
        ev << events_json(traj).dump(2) << "\n";
    }
    std::cout << "termination: " << to_string(traj.termination) << "\n";
    return termination_exit_code(traj.termination);
}

int cmd_experiment(const std::string& name, Manifest man, const std::string& golden_path) {
    man.experiment = name;
    nlohmann::json golden;
    const nlohmann::json* golden_ptr = nullptr;
    if (!golden_path.empty()) {
        std::ifstream in(golden_path);
        if (!in.good()) throw ManifestError("cannot read golden file " + golden_path);
        in >> golden;
        golden_ptr = &golden;
    }
    Report rep = run_experiment(name, man, golden_ptr);
    fs::create_directories(man.out_dir);
    const auto path = fs::path(man.out_dir) / "report.json";
    std::ofstream out(path);
    out << rep.to_json().dump(2) << "\n";
    for (const auto& c : rep.checks)
        std::cout << c.id << (c.pass ? " PASS" : " FAIL") << "\n";
    std::cout << "report: " << path.string() << "\n";
    return rep.all_pass() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"filigeo - Filippov geodesics and causal structure for "
                 "low-regularity metrics"};
    app.require_subcommand(1);

    Manifest man;
    std::string golden_path;
    std::vector<double> x0_flag, v0_flag;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--metric", man.metric_name, "zoo metric or demo field");
        cmd->add_option("--lambda", man.lambda, "metric exponent")->expected(1);
        cmd->add_option("--eps", man.eps, "HW family parameter");
        cmd->add_option("--rtol", man.rtol, "relative tolerance");
        cmd->add_option("--atol", man.atol, "absolute tolerance");
        cmd->add_option("--event-tol", man.event_tol, "event localization tolerance");
        cmd->add_option("--grid-h", man.grid_h, "reachability grid spacing");
        cmd->add_option("--out-dir", man.out_dir, "output directory");
        cmd->add_option("--seed", man.seed, "random seed");
        cmd->add_option("--format", man.format, "csv or json");
        cmd->add_option("--s-end", man.s_end, "integration span");
    };

    auto* integrate = app.add_subcommand("integrate", "integrate a Filippov geodesic");
    add_common(integrate);
    integrate->add_option("--x0", x0_flag, "initial position (comma separated)")
        ->delimiter(',');
    integrate->add_option("--v0", v0_flag, "initial velocity (comma separated)")
        ->delimiter(',');

    auto* experiment = app.add_subcommand("experiment", "run a scripted reproduction");
    std::string exp_name;
    experiment->add_option("name", exp_name, "hw | hw-lorentzian | bubble | filippov-demos")
        ->required();
    add_common(experiment);
    experiment->add_option("--golden", golden_path, "golden fixtures JSON path");

    // lambda default must not silently satisfy metrics that require it
    man.lambda = 0.0;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return kExitUsage;
    }

    try {
        if (integrate->parsed()) {
            if (needs_lambda(man.metric_name) && man.lambda == 0.0)
                throw ManifestError("--lambda is required for metric " + man.metric_name);
            man.x0.assign(x0_flag.begin(), x0_flag.end());
            man.v0.assign(v0_flag.begin(), v0_flag.end());
            man.validate();
            return cmd_integrate(man);
        }
        if (experiment->parsed()) {
            if ((exp_name == "hw" || exp_name == "hw-lorentzian") && man.lambda == 0.0)
                man.lambda = 1.5;
            if (exp_name == "bubble" && man.lambda == 0.0) man.lambda = 0.5;
            if (exp_name == "hw" || exp_name == "hw-lorentzian")
                man.metric_name = exp_name;
            if (exp_name == "bubble") man.metric_name = "bubble";
            man.validate();
            return cmd_experiment(exp_name, man, golden_path);
        }
    } catch (const ManifestError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return kExitUsage;
    } catch (const BadParameter& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStepFailure;
    }
    return kExitUsage;
}
