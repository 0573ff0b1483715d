#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tokensys/acceptance.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria for the token system library"};
    bool quick = false;
    std::size_t workers = 1;
    std::vector<int> only;
    std::string json_out;
    app.add_flag("--quick", quick, "Shorter Monte Carlo horizons");
    app.add_option("--workers", workers, "Threads for independent runs")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "Run only these criterion ids")->check(CLI::Range(1, 13));
    app.add_option("--json", json_out, "Write the results as JSON");
    CLI11_PARSE(app, argc, argv);

    tokensys::AcceptanceOptions options;
    options.profile = quick ? tokensys::Profile::Quick : tokensys::Profile::Full;
    options.workers = workers;
    options.only = only;
    options.on_result = [](const tokensys::CriterionResult& r) {
        std::cout << tokensys::format_line(r) << std::endl;
    };
    const auto results = tokensys::run_acceptance(options);

    int failed = 0;
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : results) {
        failed += r.passed ? 0 : 1;
        doc.push_back(tokensys::to_json(r));
    }
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
    if (!json_out.empty()) std::ofstream(json_out) << doc.dump(2) << '\n';
    return failed == 0 ? 0 : 1;
}
