#include "tokensys/config.hpp"

#include <cmath>
#include <numeric>

#include "tokensys/error.hpp"

namespace tokensys {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_distribution(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) {
        throw ValidationError(std::string(name) + " has " + std::to_string(v.size()) + " entries, expected n = " +
                              std::to_string(n));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] <= 0.0) {
            throw ValidationError(std::string(name) + "[" + std::to_string(i) +
                                  "] must be strictly positive (full support)");
        }
    }
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw ValidationError(std::string(name) + " sums to " + std::to_string(sum) + ", expected 1");
    }
}

}  // namespace

std::string_view to_string(Rule rule) {
    switch (rule) {
        case Rule::MinToken: return "min_token";
        case Rule::Uniform: return "uniform";
    }
    return "min_token";
}

Rule parse_rule(std::string_view text) {
    if (text == "min_token" || text == "min" || text == "mintoken") return Rule::MinToken;
    if (text == "uniform") return Rule::Uniform;
    throw ValidationError("unknown selection rule '" + std::string(text) + "' (expected min_token or uniform)");
}

void SystemConfig::validate() const {
    if (n < 2) throw ValidationError("n must be at least 2");
    if (d < 1) throw ValidationError("d must be at least 1");
    check_distribution(p, n, "p");
    check_distribution(q, n, "q");
    if (beta) {
        if (!(*beta > 0.0 && *beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
        if (d != 2) throw ValidationError("the intermediate-availability variant requires d = 2");
    }
}

bool SystemConfig::is_symmetric() const {
    for (std::size_t i = 1; i < n; ++i) {
        if (p[i] != p[0] || q[i] != q[0]) return false;
    }
    return true;
}

SystemConfig SystemConfig::symmetric(std::size_t n, int d, std::uint64_t seed, Rule rule) {
    SystemConfig c;
    c.n = n;
    c.p.assign(n, 1.0 / static_cast<double>(n));
    c.q = c.p;
    c.d = d;
    c.rule = rule;
    c.seed = seed;
    return c;
}

SystemConfig SystemConfig::two_agent(double p1, double q1, int d, std::uint64_t seed) {
    SystemConfig c;
    c.n = 2;
    c.p = {p1, 1.0 - p1};
    c.q = {q1, 1.0 - q1};
    c.d = d;
    c.seed = seed;
    return c;
}

nlohmann::json to_json(const SystemConfig& config) {
    nlohmann::json doc;
    doc["n"] = config.n;
    doc["p"] = config.p;
    doc["q"] = config.q;
    doc["d"] = config.d;
    doc["rule"] = std::string(to_string(config.rule));
    doc["beta"] = config.beta ? nlohmann::json(*config.beta) : nlohmann::json(nullptr);
    doc["seed"] = config.seed;
    return doc;
}

SystemConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ValidationError("system config must be a JSON object");
    SystemConfig c;
    try {
        if (doc.contains("p")) c.p = doc.at("p").get<std::vector<double>>();
        if (doc.contains("q")) c.q = doc.at("q").get<std::vector<double>>();
        if (doc.contains("n")) {
            c.n = doc.at("n").get<std::size_t>();
        } else if (!c.p.empty()) {
            c.n = c.p.size();
        } else if (!c.q.empty()) {
            c.n = c.q.size();
        } else {
            throw ValidationError("system config needs n or p");
        }
        if (c.p.empty()) c.p.assign(c.n, 1.0 / static_cast<double>(c.n));
        if (c.q.empty()) c.q.assign(c.n, 1.0 / static_cast<double>(c.n));
        if (doc.contains("d")) c.d = doc.at("d").get<int>();
        if (doc.contains("rule")) c.rule = parse_rule(doc.at("rule").get<std::string>());
        if (doc.contains("beta") && !doc.at("beta").is_null()) c.beta = doc.at("beta").get<double>();
        if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed system config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace tokensys
