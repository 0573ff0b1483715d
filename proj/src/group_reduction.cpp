#include "tokensys/group_reduction.hpp"

#include <boost/integer/common_factor_rt.hpp>
#include <cctype>
#include <charconv>
#include <cmath>

#include "tokensys/error.hpp"

namespace tokensys {

namespace {

std::int64_t parse_int(std::string_view digits, std::string_view whole) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        throw ValidationError("not an exact rational: '" + std::string(whole) + "'");
    }
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    const auto s = trim(text);
    if (s.empty()) throw ValidationError("empty rational");
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const auto num = parse_int(trim(s.substr(0, slash)), s);
        const auto den = parse_int(trim(s.substr(slash + 1)), s);
        if (den == 0) throw ValidationError("zero denominator in '" + std::string(s) + "'");
        return Rational(num, den);
    }
    const auto dot = s.find('.');
    if (dot == std::string_view::npos) return Rational(parse_int(s, s));
    const auto frac = s.substr(dot + 1);
    if (frac.size() > 15) throw ValidationError("too many decimal digits in '" + std::string(s) + "'");
    std::int64_t scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    const auto int_part = s.substr(0, dot);
    const bool negative = !int_part.empty() && int_part.front() == '-';
    const std::int64_t whole = int_part.empty() || int_part == "-" ? 0 : parse_int(int_part, s);
    const std::int64_t tail = frac.empty() ? 0 : parse_int(frac, s);
    if (tail < 0) throw ValidationError("not an exact rational: '" + std::string(s) + "'");
    const std::int64_t magnitude = std::abs(whole) * scale + tail;
    return Rational(negative ? -magnitude : magnitude, scale);
}

std::vector<Rational> parse_rational_list(std::string_view csv) {
    std::vector<Rational> out;
    while (true) {
        const auto comma = csv.find(',');
        out.push_back(parse_rational(csv.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        csv.remove_prefix(comma + 1);
    }
    return out;
}

std::string to_string(const Rational& r) {
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

GroupedSystem reduce(const std::vector<Rational>& p, const std::vector<Rational>& q) {
    if (p != q) throw ValidationError("group reduction applies only to systems with p = q");
    return reduce(p);
}

GroupedSystem reduce(const std::vector<Rational>& p) {
    if (p.empty()) throw ValidationError("group reduction needs at least one agent");
    Rational total(0);
    std::int64_t L = 1;
    for (const auto& v : p) {
        if (v <= Rational(0)) throw ValidationError("every p_i must be strictly positive");
        total += v;
        L = boost::integer::lcm(L, v.denominator());
    }
    if (total != Rational(1)) throw ValidationError("p must sum to exactly 1 (got " + to_string(total) + ")");

    GroupedSystem gs;
    gs.p = p;
    std::int64_t common = 0;
    for (const auto& v : p) {
        const auto scaled = v * L;
        gs.g.push_back(scaled.numerator());
        common = boost::integer::gcd(common, scaled.numerator());
    }
    for (auto& g : gs.g) {
        g /= common;
        gs.N += g;
    }
    gs.member_of.reserve(static_cast<std::size_t>(gs.N));
    for (std::size_t i = 0; i < gs.g.size(); ++i) gs.member_of.insert(gs.member_of.end(), static_cast<std::size_t>(gs.g[i]), i);
    return gs;
}

GroupedRun simulate_grouped(const GroupedSystem& gs, const GroupedOptions& options) {
    if (gs.N <= 0 || gs.member_of.size() != static_cast<std::size_t>(gs.N)) {
        throw ValidationError("grouped system is not well formed");
    }
    if (options.d < 1) throw ValidationError("d must be at least 1");
    const auto N = static_cast<std::size_t>(gs.N);
    const std::size_t G = gs.groups();
    std::vector<std::size_t> first(G);
    for (std::size_t k = N; k-- > 0;) first[gs.member_of[k]] = k;

    GroupedRun run;
    Rng rng(options.seed);
    std::vector<Tokens> s(N, 0);
    std::vector<std::size_t> available(static_cast<std::size_t>(options.d));
    std::uint64_t last_zero = 0;

    const auto record = [&](std::uint64_t t) {
        std::vector<std::int64_t> row(G);
        for (std::size_t i = 0; i < G; ++i) row[i] = s[first[i]];
        run.trajectory_t.push_back(t);
        run.trajectory.push_back(std::move(row));
    };
    if (options.record_every) record(0);

    for (std::uint64_t t = 1; t <= options.T; ++t) {
        const std::size_t requester = rng.index(N);
        for (auto& a : available) a = rng.index(N);
        const std::size_t provider = select_provider(s, available, Rule::MinToken, rng);
        const std::size_t from = gs.member_of[requester];
        const std::size_t to = gs.member_of[provider];
        if (from != to) {
            ++run.cross_group_transfers;
            for (std::size_t k = 0; k < N; ++k) {
                if (gs.member_of[k] == from) --s[k];
                else if (gs.member_of[k] == to) ++s[k];
            }
        }
        ++run.audits;
        Tokens group_sum = 0;
        for (std::size_t k = 0; k < N; ++k) {
            if (s[k] != s[first[gs.member_of[k]]]) {
                throw InvariantViolation("group members diverged at step " + std::to_string(t));
            }
        }
        for (std::size_t i = 0; i < G; ++i) group_sum += s[first[i]];
        if (group_sum != 0) throw InvariantViolation("group balances no longer sum to zero at step " + std::to_string(t));

        bool now_zero = true;
        for (std::size_t i = 0; i < G && now_zero; ++i) now_zero = s[first[i]] == 0;
        if (now_zero) {
            run.zero_returns.push_back(t - last_zero);
            last_zero = t;
        }
        if (options.record_every && t % options.record_every == 0) record(t);
    }
    run.steps = options.T;
    run.final_groups.resize(G);
    for (std::size_t i = 0; i < G; ++i) run.final_groups[i] = s[first[i]];
    return run;
}

nlohmann::json to_json(const GroupedSystem& gs) {
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t i = 0; i < gs.groups(); ++i) {
        groups.push_back({{"agent", i}, {"p", to_string(gs.p[i])}, {"size", gs.g[i]}});
    }
    return {{"groups", groups}, {"N", gs.N}, {"member_of", gs.member_of}};
}

}  // namespace tokensys
