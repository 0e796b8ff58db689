#include "filigeo/experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "filigeo/extremal.hpp"

namespace filigeo {

namespace {

Vec pt2(double x, double y) { return (Vec(2) << x, y).finished(); }
Vec pt3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

struct HwReference {
    double s0, y1, turning_x, c;
    std::string source;
};

// Reference turning-point data: external fixtures when available, otherwise
// the library quadrature.
HwReference hw_reference(double lambda, double eps, const nlohmann::json* golden) {
    if (golden) {
        for (const auto& e : golden->at("entries"))
            if (e.at("lambda").get<double>() == lambda &&
                e.at("eps").get<double>() == eps)
                return {e.at("s0"), e.at("y1"), e.at("turning_x"), e.at("c"),
                        "fixtures"};
    }
    auto fam = hw_geodesic_family(lambda, eps);
    return {fam.s0, fam.y1, fam.turning_x(), fam.c, "internal"};
}

double find_turning(const GeodesicRecord& rec, double sa, double sb) {
    double va = rec.velocity(sa)[0];
    for (int i = 0; i < 200 && sb - sa > 1e-14; ++i) {
        const double sm = 0.5 * (sa + sb);
        const double vm = rec.velocity(sm)[0];
        if ((vm > 0) == (va > 0)) {
            sa = sm;
            va = vm;
        } else {
            sb = sm;
        }
    }
    return 0.5 * (sa + sb);
}

}  // namespace

bool Report::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

nlohmann::json Report::to_json() const {
    nlohmann::json checks_json = nlohmann::json::array();
    for (const auto& c : checks)
        checks_json.push_back({{"id", c.id}, {"pass", c.pass}, {"details", c.details}});
    return nlohmann::json{{"schema_version", 1},
                          {"experiment", experiment},
                          {"manifest", manifest},
                          {"all_pass", all_pass()},
                          {"checks", checks_json}};
}

Report run_experiment_hw(const Manifest& man, const nlohmann::json* golden) {
    Report rep;
    rep.experiment = "hw";
    rep.manifest = man.to_json();
    const double lambda = man.lambda, eps = man.eps;
    auto ref = hw_reference(lambda, eps, golden);
    auto m = hw_riemannian(lambda);

    // A1 - IVP reproduction of gamma_eps against the quadrature oracle
    {
        const auto t_start = std::chrono::steady_clock::now();
        auto rec = shoot_geodesic(m, pt2(0, 0), pt2(std::sqrt(eps), std::sqrt(1 - eps)),
                                  0.0, 2.0 * ref.s0, man.integrate_options());
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        const double s_turn = find_turning(rec, 0.5 * ref.s0, 1.5 * ref.s0);
        const Vec turn = rec.position(s_turn);
        double fi_drift = 0.0;
        for (const auto& [s, full] : rec.trajectory.sample(400))
            fi_drift = std::max(fi_drift,
                                std::abs((1.0 - std::pow(std::abs(full[0]), lambda)) *
                                             full[3] -
                                         ref.c));
        const bool pass = rec.trajectory.completed() &&
                          std::abs(turn[0] - ref.turning_x) < 1e-6 &&
                          std::abs(turn[1] - ref.y1) < 1e-6 && fi_drift < 1e-7 &&
                          wall < 1.0;
        rep.checks.push_back(
            {"A1", pass,
             {{"turning_point", {turn[0], turn[1]}},
              {"reference", {ref.turning_x, ref.y1}},
              {"reference_source", ref.source},
              {"first_integral_drift", fi_drift},
              {"runtime_seconds", wall}}});
    }

    // A2 - three-geodesic boundary value problem
    {
        const Vec q = pt2(0, 2 * ref.y1);
        auto set = geodesic_bvp_shooting(m, pt2(0, 0), q, 2.8 * ref.s0, 96);
        const Vec d_right = pt2(std::sqrt(eps), std::sqrt(1 - eps));
        const Vec d_left = pt2(-std::sqrt(eps), std::sqrt(1 - eps));
        const Vec d_axis = pt2(0, 1);
        double best_r = 1e9, best_l = 1e9, best_a = 1e9;
        double len_bent = 1e18, len_axis = 0;
        for (const auto& sol : set.solutions) {
            best_r = std::min(best_r, (sol.direction - d_right).norm());
            best_l = std::min(best_l, (sol.direction - d_left).norm());
            best_a = std::min(best_a, (sol.direction - d_axis).norm());
            if ((sol.direction - d_axis).norm() < 1e-3)
                len_axis = sol.length;
            else
                len_bent = std::min(len_bent, sol.length);
        }
        const bool pass = set.solutions.size() >= 3 && best_r < 1e-4 &&
                          best_l < 1e-4 && best_a < 1e-4 &&
                          len_bent + 1e-6 < len_axis;
        nlohmann::json solutions = nlohmann::json::array();
        for (const auto& sol : set.solutions) {
            nlohmann::json dir = nlohmann::json::array();
            for (int i = 0; i < sol.direction.size(); ++i) dir.push_back(sol.direction[i]);
            solutions.push_back(
                {{"direction", dir}, {"length", sol.length}, {"miss", sol.miss}});
        }
        rep.checks.push_back({"A2", pass,
                              {{"solutions", solutions},
                               {"solution_count", set.solutions.size()},
                               {"direction_errors", {best_r, best_l, best_a}},
                               {"length_bent", len_bent},
                               {"length_axis", len_axis}}});
    }

    // A3 - two distinct minimizers, both shorter than gamma_0
    {
        const Vec p = pt2(0, 0), q = pt2(0, 2 * ref.y1);
        const int N = 128;
        MinimizeOptions right, left;
        right.seeds = {bent_polyline(p, q, N, 0.35)};
        left.seeds = {bent_polyline(p, q, N, -0.35)};
        auto cr = minimize_bvp(m, p, q, N, right);
        auto cl = minimize_bvp(m, p, q, N, left);
        const double lr = curve_length(m, cr);
        const double ll = curve_length(m, cl);
        double gap = 0.0;
        for (size_t k = 0; k < cr.nodes.size(); ++k)
            gap = std::max(gap, (cr.nodes[k] - cl.nodes[k]).norm());
        const double dev_r = dbr_residual(m, cr).deviation.lpNorm<Eigen::Infinity>();
        const double dev_l = dbr_residual(m, cl).deviation.lpNorm<Eigen::Infinity>();
        const bool pass = std::abs(lr - 2 * ref.s0) < 1e-4 &&
                          std::abs(ll - 2 * ref.s0) < 1e-4 && gap > 0.1 &&
                          lr < 2 * ref.y1 && ll < 2 * ref.y1 && dev_r < 1e-4 &&
                          dev_l < 1e-4;
        nlohmann::json minimizers = nlohmann::json::array();
        std::filesystem::create_directories(man.out_dir);
        const std::pair<const Polyline*, const char*> outputs[] = {
            {&cr, "minimizer_right.csv"}, {&cl, "minimizer_left.csv"}};
        for (const auto& [curve, fname] : outputs) {
            const auto path = std::filesystem::path(man.out_dir) / fname;
            std::ofstream csv(path);
            write_polyline_csv(csv, *curve);
            minimizers.push_back({{"length", curve_length(m, *curve)},
                                  {"nodes_csv_path", path.string()}});
        }
        rep.checks.push_back({"A3", pass,
                              {{"minimizers", minimizers},
                               {"length_right", lr},
                               {"length_left", ll},
                               {"length_axis_path", 2 * ref.y1},
                               {"basin_gap", gap},
                               {"dbr_deviation", {dev_r, dev_l}}}});
    }

    // A4 - y1 shrinking on the eps grid.  The shrink exponent is
    // 1/lambda - 1/2, so the factor-3 drop over eps in [0.01, 0.4] needs a
    // lambda near 1; the check runs at lambda = 1.15.
    {
        const double lam4 = 1.15;
        std::vector<double> grid = {0.4, 0.2, 0.1, 0.05, 0.01};
        std::vector<double> ys;
        bool decreasing = true;
        for (double e : grid) {
            auto r = hw_reference(lam4, e, golden);
            if (!ys.empty() && r.y1 >= ys.back()) decreasing = false;
            ys.push_back(r.y1);
        }
        const bool factor3 = ys.back() < ys.front() / 3.0;
        rep.checks.push_back({"A4", decreasing && factor3,
                              {{"lambda", lam4},
                               {"eps_grid", grid},
                               {"y1_values", ys},
                               {"strictly_decreasing", decreasing},
                               {"factor3", factor3}}});
    }
    return rep;
}

Report run_experiment_hw_lorentzian(const Manifest& man, const nlohmann::json* golden) {
    Report rep;
    rep.experiment = "hw-lorentzian";
    rep.manifest = man.to_json();
    const double lambda = man.lambda, eps = man.eps;
    auto ref = hw_reference(lambda, eps, golden);
    auto m = hw_lorentzian(lambda);

    // A5 - lengths of the three connecting geodesics
    {
        auto l = hw_lorentzian_lengths(lambda, eps);
        auto rec = shoot_geodesic(m, pt3(0, 0, 0),
                                  pt3(2 * std::sqrt(2.0) * l.s0, 0, 2 * l.y1), 0.0,
                                  1.0, man.integrate_options());
        auto rep0 = causal_character(m, rec);
        const bool order = l.s0 < l.y1 && l.y1 < 2 * l.s0;
        const bool margin = l.L_gamma0 + 1e-6 < l.L_gamma_pm;
        const bool oracle_ok = std::abs(l.s0 - ref.s0) < 1e-9 &&
                               std::abs(l.y1 - ref.y1) < 1e-9;
        const bool pass = margin && order && oracle_ok &&
                          rep0.verdict == CausalCharacter::timelike;
        rep.checks.push_back({"A5", pass,
                              {{"L_gamma0", l.L_gamma0},
                               {"L_gamma_pm", l.L_gamma_pm},
                               {"s0", l.s0},
                               {"y1", l.y1},
                               {"reference_source", ref.source},
                               {"gamma0_character", to_string(rep0.verdict)}}});
    }
    return rep;
}

Report run_experiment_bubble(const Manifest& man) {
    Report rep;
    rep.experiment = "bubble";
    rep.manifest = man.to_json();
    auto m = bubble(man.lambda > 0 && man.lambda < 1 ? man.lambda : 0.5);

    // A7 - causal bubble evidence plus the flat-space control
    {
        const double h = man.grid_h;
        const GridSpec spec{-0.125, 0.375, -0.125, 1.0, h};
        const Vec q = pt2(0.1, 0.8);
        auto causal = grid_reachability(m, pt2(0, 0), spec, ReachMode::causal);
        auto timelike = grid_reachability(m, pt2(0, 0), spec, ReachMode::timelike);
        const bool q_causal = causal.at(q);
        const bool q_timelike = timelike.at(q);

        MaximizeOptions mopts;
        mopts.n_segments = 48;
        mopts.seed_grid = {-0.125, 0.375, -0.125, 1.0, 1.0 / 64};
        auto max = maximize_causal_bvp(m, pt2(0, 0), q, mopts);
        auto character = causal_character(m, max.curve);
        int nulls = 0, timelikes = 0;
        for (double v : character.series) {
            if (std::abs(v) <= 1e-8) ++nulls;
            if (v < -1e-8) ++timelikes;
        }

        // flat control: push-up holds on the grid
        auto mk = flat(2, Signature::lorentzian);
        ReachOptions ropts;
        ropts.neighbor_radius = 6;
        const GridSpec mspec{0.0, 1.0, -1.0, 1.0, 1.0 / 32};
        auto mc = grid_reachability(mk, pt2(0, 0), mspec, ReachMode::causal, ropts);
        auto mt = grid_reachability(mk, pt2(0, 0), mspec, ReachMode::timelike, ropts);
        int pushup_fail = 0;
        for (int i0 = 0; i0 < mc.n0; ++i0)
            for (int i1 = 0; i1 < mc.n1; ++i1) {
                const Vec v = mc.vertex(i0, i1);
                if (mc.at_index(i0, i1) && !mt.at_index(i0, i1) &&
                    std::abs(v[1]) <= (1.0 - 2.0 / ropts.neighbor_radius) * v[0] - 1e-12)
                    ++pushup_fail;
            }

        const bool pass = q_causal && !q_timelike &&
                          character.verdict == CausalCharacter::mixed && nulls > 0 &&
                          timelikes > 0 && pushup_fail == 0;

        namespace fs = std::filesystem;
        fs::create_directories(man.out_dir);
        for (const auto& [set, tag] :
             {std::pair<const ReachabilitySet*, const char*>{&causal, "causal"},
              {&timelike, "timelike"}}) {
            std::ofstream pgm(fs::path(man.out_dir) / ("reach_" + std::string(tag) + ".pgm"));
            set->write_pgm(pgm);
            std::ofstream csv(fs::path(man.out_dir) / ("reach_" + std::string(tag) + ".csv"));
            set->write_csv(csv);
            std::ofstream meta(fs::path(man.out_dir) /
                               ("reach_" + std::string(tag) + ".meta.json"));
            meta << set->metadata().dump(2) << "\n";
        }
        const auto max_path = fs::path(man.out_dir) / "maximizer.csv";
        {
            std::ofstream csv(max_path);
            write_polyline_csv(csv, max.curve);
        }

        rep.checks.push_back({"A7", pass,
                              {{"h", h},
                               {"q", {q[0], q[1]}},
                               {"causal", q_causal},
                               {"timelike", q_timelike},
                               {"maximizer_length", max.length},
                               {"maximizer_character", to_string(character.verdict)},
                               {"maximizer_csv_path", max_path.string()},
                               {"null_samples", nulls},
                               {"timelike_samples", timelikes},
                               {"minkowski_pushup_violations", pushup_fail}}});
    }
    return rep;
}

Report run_experiment_filippov_demos(const Manifest& man) {
    Report rep;
    rep.experiment = "filippov-demos";
    rep.manifest = man.to_json();

    auto field1d = [](double fm, double fp) {
        PiecewiseField f;
        f.dim = 1;
        f.f_minus = [fm](const Vec&) { return Vec::Constant(1, fm); };
        f.f_plus = [fp](const Vec&) { return Vec::Constant(1, fp); };
        f.level = [](const Vec& x) { return x[0]; };
        f.level_grad = [](const Vec&) { return Vec::Constant(1, 1.0); };
        return f;
    };

    // A6 - classification table, 1d demos, hull of sgn
    {
        std::mt19937_64 rng(man.seed);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        const double tol = 1e-9;
        int mismatches = 0;
        for (int i = 0; i < 10000; ++i) {
            const double fm = u(rng), fp = u(rng);
            const HitKind got = classify_interface_hit(fm, fp, tol);
            HitKind expect;
            if (std::abs(fm) <= tol || std::abs(fp) <= tol)
                expect = HitKind::Tangential;
            else if (fm > 0 && fp > 0)
                expect = HitKind::CrossUp;
            else if (fm < 0 && fp < 0)
                expect = HitKind::CrossDown;
            else if (fm < 0)
                expect = HitKind::Repulsive;
            else
                expect = HitKind::Sliding;
            if (got != expect) ++mismatches;
        }

        auto crossing = integrate_filippov(field1d(0.5, 1.5), Vec::Constant(1, -1.0),
                                           0.0, 3.0);
        const bool cross_ok =
            crossing.completed() && crossing.events.size() == 1 &&
            crossing.events[0].kind == HitKind::CrossUp &&
            std::abs(crossing.events[0].t - 2.0) < 1e-8 &&
            std::abs(crossing.final_state()[0] - 1.5) < 1e-8;

        auto sliding = integrate_filippov(field1d(1.0, -1.0), Vec::Constant(1, 1.0),
                                          0.0, 3.0);
        double slide_drift = 0.0;
        for (double t : {1.2, 1.7, 2.3, 2.9})
            slide_drift = std::max(slide_drift, std::abs(sliding.state(t)[0]));
        const bool slide_ok = sliding.completed() && slide_drift < 1e-9;

        auto hull = filippov_hull(field1d(-1.0, 1.0), Vec::Constant(1, 0.0), 0.5, 64,
                                  man.seed);
        const auto iv = hull.component_interval(0);
        const bool hull_ok = std::abs(iv[0] + 1) < 1e-12 && std::abs(iv[1] - 1) < 1e-12;

        const bool pass = mismatches == 0 && cross_ok && slide_ok && hull_ok;
        rep.checks.push_back({"A6", pass,
                              {{"classification_mismatches", mismatches},
                               {"crossing_event_t", crossing.events.empty()
                                                        ? 0.0
                                                        : crossing.events[0].t},
                               {"crossing_endpoint", crossing.final_state()[0]},
                               {"sliding_drift", slide_drift},
                               {"hull_interval", {iv[0], iv[1]}}}});
    }

    // A8 - C^1-matching and norm conservation on the Lipschitz corner metric
    {
        auto m = lipschitz_corner();
        Vec v0 = pt2(1.0, 0.5);
        v0 /= std::sqrt(v0[0] * v0[0] + 1.5 * v0[1] * v0[1]);
        IntegrateOptions opts = man.integrate_options();
        auto rec = shoot_geodesic(m, pt2(-0.5, 0), v0, 0.0, 1.5, opts);

        double vjump = 0.0;
        bool crossed = false;
        for (const auto& ev : rec.trajectory.events) {
            if (ev.kind != HitKind::CrossUp && ev.kind != HitKind::CrossDown) continue;
            crossed = true;
            const auto& segs = rec.trajectory.segments;
            for (size_t k = 0; k + 1 < segs.size(); ++k)
                if (std::abs(segs[k].t1 - ev.t) < 1e-12) {
                    const Vec before = segs[k].eval(segs[k].t1);
                    const Vec after = segs[k + 1].eval(segs[k + 1].t0);
                    vjump = std::max(vjump, (before - after).norm());
                }
        }
        const double span = rec.s_end() - rec.s_begin();
        const double drift_rate = rec.norm_trace.drift / std::max(span, 1e-12);

        IntegrateOptions tight = opts;
        tight.rtol /= 2;
        tight.atol /= 2;
        auto rec2 = shoot_geodesic(m, pt2(-0.5, 0), v0, 0.0, 1.5, tight);
        const double shift =
            (rec.trajectory.final_state() - rec2.trajectory.final_state()).norm();
        const double shift_bound =
            10 * opts.rtol * rec.trajectory.final_state().norm();

        const bool pass = crossed && vjump < 1e-10 && drift_rate < 1e-6 &&
                          shift < shift_bound + 1e-14;
        rep.checks.push_back({"A8", pass,
                              {{"crossing_found", crossed},
                               {"velocity_jump", vjump},
                               {"norm_drift_per_unit", drift_rate},
                               {"halved_tol_shift", shift},
                               {"shift_bound", shift_bound}}});
    }
    return rep;
}

Report run_experiment(const std::string& name, const Manifest& m,
                      const nlohmann::json* golden) {
    if (name == "hw") return run_experiment_hw(m, golden);
    if (name == "hw-lorentzian") return run_experiment_hw_lorentzian(m, golden);
    if (name == "bubble") return run_experiment_bubble(m);
    if (name == "filippov-demos") return run_experiment_filippov_demos(m);
    throw ManifestError("unknown experiment '" + name + "'");
}

}  // namespace filigeo
