#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tokensys {

enum class Profile { Quick, Full };

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    nlohmann::json data;
};

struct AcceptanceOptions {
    Profile profile = Profile::Full;
    std::size_t workers = 1;
    std::vector<int> only;  // empty means every criterion
    // Called after each criterion finishes, e.g. to print progress.
    std::function<void(const CriterionResult&)> on_result;
};

int acceptance_criterion_count();

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

// "PASS  3  equilibrium solver  pi0 = ... (0.01 s)"
std::string format_line(const CriterionResult& r);

nlohmann::json to_json(const CriterionResult& r);

}  // namespace tokensys
