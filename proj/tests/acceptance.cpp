// Acceptance suite: runs every keyed criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion.  Exit code 0 iff all pass.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "filigeo/experiments.hpp"

using namespace filigeo;
using nlohmann::json;

namespace {

struct Line {
    std::string id;
    bool pass;
    std::string note;
};

std::vector<Line> lines;

void report(const CheckResult& c) {
    lines.push_back({c.id, c.pass, c.details.dump()});
}

bool file_bytes(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

// A9: the oracle script must regenerate the committed fixtures bit-identically.
Line check_oracle_reproducibility() {
    const std::string src = FILIGEO_SOURCE_DIR;
    const std::string committed = std::string(FILIGEO_FIXTURES_DIR) + "/hw_golden.json";
    const std::string regen = "/tmp/filigeo_acceptance_golden.json";
    const std::string cmd = "python3 " + src + "/scripts/make_golden.py --out " + regen +
                            " >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0)
        return {"A9", false, "oracle script failed to run"};
    std::string a, b;
    if (!file_bytes(committed, a) || !file_bytes(regen, b))
        return {"A9", false, "missing fixtures file"};
    if (a != b) return {"A9", false, "regenerated fixtures differ from committed bytes"};
    return {"A9", true, "bit-identical regeneration"};
}

}  // namespace

int main() {
    json golden;
    {
        std::ifstream in(std::string(FILIGEO_FIXTURES_DIR) + "/hw_golden.json");
        if (!in.good()) {
            std::cerr << "cannot read golden fixtures\n";
            return 1;
        }
        in >> golden;
    }

    Manifest hw;
    hw.experiment = "hw";
    hw.metric_name = "hw";
    hw.lambda = 1.5;
    hw.eps = 0.25;
    hw.out_dir = "/tmp/filigeo_acceptance/hw";

    Manifest hwl = hw;
    hwl.experiment = "hw-lorentzian";
    hwl.metric_name = "hw-lorentzian";
    hwl.out_dir = "/tmp/filigeo_acceptance/hw-lorentzian";

    Manifest bub;
    bub.experiment = "bubble";
    bub.metric_name = "bubble";
    bub.lambda = 0.5;
    bub.grid_h = 1.0 / 128;
    bub.out_dir = "/tmp/filigeo_acceptance/bubble";

    Manifest demos;
    demos.experiment = "filippov-demos";
    demos.seed = 2024;

    try {
        for (const auto& c : run_experiment_hw(hw, &golden).checks) report(c);
        for (const auto& c : run_experiment_hw_lorentzian(hwl, &golden).checks) report(c);
        for (const auto& c : run_experiment_filippov_demos(demos).checks) report(c);
        for (const auto& c : run_experiment_bubble(bub).checks) report(c);
    } catch (const Error& e) {
        std::cerr << "acceptance aborted: " << e.what() << "\n";
        return 1;
    }
    lines.push_back(check_oracle_reproducibility());

    // print in criterion order
    std::sort(lines.begin(), lines.end(),
              [](const Line& a, const Line& b) { return a.id < b.id; });
    bool all = true;
    for (const auto& l : lines) {
        std::printf("%s %s  %s\n", l.id.c_str(), l.pass ? "PASS" : "FAIL",
                    l.note.c_str());
        all = all && l.pass;
    }
    std::printf("acceptance: %s\n", all ? "ALL PASS" : "FAILURES PRESENT");
    return all ? 0 : 1;
}
