#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "filigeo/io.hpp"

namespace filigeo {

struct CheckResult {
    std::string id;
    bool pass = false;
    nlohmann::json details;
};

struct Report {
    std::string experiment;
    nlohmann::json manifest;
    std::vector<CheckResult> checks;

    bool all_pass() const;
    nlohmann::json to_json() const;
};

// Scripted reproductions keyed to the acceptance-check identifiers.  `golden`
// optionally supplies the externally generated fixture document; without it
// the library's own quadrature values serve as the reference (the fixture
// cross-check then reports reference="internal").
Report run_experiment_hw(const Manifest& m,
                         const nlohmann::json* golden = nullptr);
Report run_experiment_hw_lorentzian(const Manifest& m,
                                    const nlohmann::json* golden = nullptr);
Report run_experiment_bubble(const Manifest& m);
Report run_experiment_filippov_demos(const Manifest& m);

// Dispatch by name in {hw, hw-lorentzian, bubble, filippov-demos}; throws
// ManifestError for unknown names.
Report run_experiment(const std::string& name, const Manifest& m,
                      const nlohmann::json* golden = nullptr);

}  // namespace filigeo
