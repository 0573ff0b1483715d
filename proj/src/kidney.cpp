#include "tokensys/kidney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "tokensys/dynamics.hpp"
#include "tokensys/error.hpp"
#include "tokensys/parallel.hpp"

namespace tokensys::kidney {

namespace {

constexpr std::array<std::string_view, 4> kBloodNames = {"O", "A", "B", "AB"};

double standard_normal(Rng& rng) {
    // Box-Muller on our own stream keeps populations identical across standard libraries.
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void check_distribution(const std::array<double, 4>& w, const char* name) {
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw ValidationError(std::string(name) + ": negative blood type frequency");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError(std::string(name) + ": frequencies must sum to 1");
}

// Splits `total` items over the weights by largest remainder, never giving
// any slot more than `cap`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights, std::size_t cap) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> out(n, 0);
    std::vector<bool> full(n, false);
    std::size_t left = total;
    while (left > 0) {
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) if (!full[i]) wsum += weights[i];
        if (wsum <= 0.0) throw ValidationError("hospital capacity is too small for the requested pairs");
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t given = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (full[i]) continue;
            const double share = static_cast<double>(left) * weights[i] / wsum;
            const auto whole = static_cast<std::size_t>(std::floor(share));
            const std::size_t room = cap - out[i];
            const std::size_t add = std::min(whole, room);
            out[i] += add;
            given += add;
            remainders.emplace_back(share - static_cast<double>(whole), i);
        }
        std::stable_sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) { return a.first > b.first; });
        for (auto& [r, i] : remainders) {
            if (given == left) break;
            if (out[i] < cap) {
                ++out[i];
                ++given;
            }
        }
        left -= given;
        for (std::size_t i = 0; i < n; ++i) full[i] = out[i] >= cap;
        if (given == 0 && left > 0) throw ValidationError("hospital capacity is too small for the requested pairs");
    }
    return out;
}

}  // namespace

std::string_view to_string(BloodType t) { return kBloodNames[static_cast<std::size_t>(t)]; }

BloodType parse_blood_type(std::string_view text) {
    for (std::size_t k = 0; k < kBloodNames.size(); ++k) {
        if (kBloodNames[k] == text) return static_cast<BloodType>(k);
    }
    throw ValidationError("unknown blood type '" + std::string(text) + "'");
}

bool abo_compatible(BloodType donor, BloodType patient) {
    switch (donor) {
        case BloodType::O: return true;
        case BloodType::A: return patient == BloodType::A || patient == BloodType::AB;
        case BloodType::B: return patient == BloodType::B || patient == BloodType::AB;
        case BloodType::AB: return patient == BloodType::AB;
    }
    return false;
}

void PopulationConfig::validate() const {
    if (pairs == 0) throw ValidationError("population needs at least one pair");
    if (hospitals == 0) throw ValidationError("population needs at least one hospital");
    if (max_hospital_size == 0 || pairs > hospitals * max_hospital_size) {
        throw ValidationError("pairs exceed total hospital capacity");
    }
    if (!(size_sigma >= 0.0)) throw ValidationError("size_sigma must be non-negative");
    if (pra.empty()) throw ValidationError("PRA mixture must have at least one band");
    double total = 0.0;
    for (const auto& b : pra) {
        if (!(b.weight >= 0.0) || !(b.lo >= 0.0 && b.lo <= b.hi && b.hi <= 1.0)) {
            throw ValidationError("PRA bands need weight >= 0 and 0 <= lo <= hi <= 1");
        }
        total += b.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("PRA band weights must sum to 1");
    check_distribution(patient_abo, "patient_abo");
    check_distribution(donor_abo, "donor_abo");
}

namespace {

nlohmann::json abo_json(const std::array<double, 4>& w) {
    return {{"O", w[0]}, {"A", w[1]}, {"B", w[2]}, {"AB", w[3]}};
}

std::array<double, 4> abo_from_json(const nlohmann::json& j) {
    std::array<double, 4> w{};
    for (std::size_t k = 0; k < 4; ++k) w[k] = j.value(std::string(kBloodNames[k]), 0.0);
    return w;
}

}  // namespace

nlohmann::json to_json(const PopulationConfig& c) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : c.pra) bands.push_back({{"weight", b.weight}, {"lo", b.lo}, {"hi", b.hi}});
    return {{"pairs", c.pairs},
            {"hospitals", c.hospitals},
            {"max_hospital_size", c.max_hospital_size},
            {"size_sigma", c.size_sigma},
            {"pra", bands},
            {"patient_abo", abo_json(c.patient_abo)},
            {"donor_abo", abo_json(c.donor_abo)},
            {"seed", c.seed}};
}

PopulationConfig population_config_from_json(const nlohmann::json& doc) {
    PopulationConfig c;
    try {
        c.pairs = doc.value("pairs", c.pairs);
        c.hospitals = doc.value("hospitals", c.hospitals);
        c.max_hospital_size = doc.value("max_hospital_size", c.max_hospital_size);
        c.size_sigma = doc.value("size_sigma", c.size_sigma);
        c.seed = doc.value("seed", c.seed);
        if (doc.contains("pra")) {
            c.pra.clear();
            for (const auto& b : doc.at("pra")) c.pra.push_back({b.at("weight"), b.at("lo"), b.at("hi")});
        }
        if (doc.contains("patient_abo")) c.patient_abo = abo_from_json(doc.at("patient_abo"));
        if (doc.contains("donor_abo")) c.donor_abo = abo_from_json(doc.at("donor_abo"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("population config: ") + e.what());
    }
    c.validate();
    return c;
}

void PairPopulation::validate() const {
    if (pairs.empty() || hospitals.empty()) throw ValidationError("population is empty");
    std::vector<std::size_t> count(hospitals.size(), 0);
    for (const auto& p : pairs) {
        if (p.hospital >= hospitals.size()) throw ValidationError("pair references a missing hospital");
        ++count[p.hospital];
    }
    for (const auto& h : hospitals) {
        if (h.id >= hospitals.size() || count[h.id] != h.pairs) {
            throw ValidationError("hospital pair counts do not match the pair list");
        }
    }
}

PairPopulation generate_population(const PopulationConfig& config) {
    config.validate();
    Rng rng(config.seed);
    std::vector<double> weights(config.hospitals);
    for (auto& w : weights) w = std::exp(config.size_sigma * standard_normal(rng));

    std::vector<std::size_t> sizes;
    if (config.pairs >= config.hospitals) {
        sizes = apportion(config.pairs - config.hospitals, weights, config.max_hospital_size - 1);
        for (auto& s : sizes) ++s;
    } else {
        sizes = apportion(config.pairs, weights, config.max_hospital_size);
    }

    std::vector<double> band_weights;
    for (const auto& b : config.pra) band_weights.push_back(b.weight);
    const Categorical band(band_weights);
    const Categorical patient_abo(config.patient_abo);
    const Categorical donor_abo(config.donor_abo);

    PairPopulation pop;
    for (std::size_t h = 0; h < sizes.size(); ++h) {
        if (sizes[h] == 0) continue;
        const std::size_t id = pop.hospitals.size();
        pop.hospitals.push_back({id, sizes[h]});
        for (std::size_t k = 0; k < sizes[h]; ++k) {
            PatientDonorPair p;
            p.id = pop.pairs.size();
            p.hospital = id;
            p.patient = static_cast<BloodType>(patient_abo.sample(rng));
            p.donor = static_cast<BloodType>(donor_abo.sample(rng));
            const auto& b = config.pra[band.sample(rng)];
            p.pra = b.lo + (b.hi - b.lo) * rng.uniform();
            pop.pairs.push_back(p);
        }
    }
    return pop;
}

bool CompatModel::donor_to_patient(std::size_t u, std::size_t v) const {
    const auto& from = population_->pairs[u];
    const auto& to = population_->pairs[v];
    if (!abo_compatible(from.donor, to.patient)) return false;
    return keyed_uniform(key_, u, v) < 1.0 - to.pra;
}

ExchangePool ExchangePool::empty(std::size_t hospitals) {
    ExchangePool pool;
    pool.ledger.assign(hospitals, 0);
    return pool;
}

std::int64_t ExchangePool::ledger_sum() const { return std::accumulate(ledger.begin(), ledger.end(), std::int64_t{0}); }

Streams Streams::from_seed(std::uint64_t seed) {
    return Streams{Rng(derive_seed(seed, 1)), Rng(derive_seed(seed, 4)), derive_seed(seed, 2), derive_seed(seed, 3)};
}

void write_event_header(std::ostream& out) { out << "day,event,pair,hospital,counterparty,tokens_after\n"; }

namespace {

void log_event(std::ostream* out, std::uint64_t day, const char* event, std::size_t pair, std::size_t hospital,
               long long counterparty, std::int64_t tokens) {
    if (!out) return;
    *out << day << ',' << event << ',' << pair << ',' << hospital << ',';
    if (counterparty >= 0) *out << counterparty;
    *out << ',' << tokens << '\n';
}

}  // namespace

DayOutcome run_day(ExchangePool& pool, const PairPopulation& population, const CompatModel& compat, Rule rule,
                   Streams& streams, const DayOptions& options) {
    const std::uint64_t day = pool.clock;
    DayOutcome out;
    out.arrival = streams.arrivals.index(population.pairs.size());
    out.instance = pool.next_instance++;
    const std::size_t home = population.pairs[out.arrival].hospital;

    std::vector<std::size_t> cands;  // positions in pool.waiting
    for (std::size_t k = 0; k < pool.waiting.size(); ++k) {
        const auto other = pool.waiting[k].pair;
        if (other != out.arrival && compat.mutual(out.arrival, other)) cands.push_back(k);
    }
    out.candidates = cands.size();

    if (!cands.empty()) {
        std::size_t chosen = cands.front();
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (auto k : cands) best = std::min(best, pool.ledger[population.pairs[pool.waiting[k].pair].hospital]);
        out.min_candidate_tokens = best;
        if (rule == Rule::MinToken) {
            std::vector<std::size_t> tied;
            for (auto k : cands) {
                const auto h = population.pairs[pool.waiting[k].pair].hospital;
                if (pool.ledger[h] == best && std::find(tied.begin(), tied.end(), h) == tied.end()) tied.push_back(h);
            }
            const std::size_t h = tied.size() > 1 ? tied[streams.tiebreak.index(tied.size())] : tied.front();
            std::vector<std::size_t> in_h;
            for (auto k : cands) {
                if (population.pairs[pool.waiting[k].pair].hospital == h) in_h.push_back(k);
            }
            chosen = in_h.size() > 1 ? in_h[streams.tiebreak.index(in_h.size())] : in_h.front();
        } else if (cands.size() > 1) {
            chosen = cands[streams.tiebreak.index(cands.size())];
        }
        const Waiting partner = pool.waiting[chosen];
        out.matched = true;
        out.partner_instance = partner.instance;
        out.provider_hospital = population.pairs[partner.pair].hospital;
        out.provider_tokens_before = pool.ledger[out.provider_hospital];
        if (out.provider_hospital != home) {
            --pool.ledger[home];
            ++pool.ledger[out.provider_hospital];
        }
        pool.waiting.erase(pool.waiting.begin() + static_cast<std::ptrdiff_t>(chosen));
        log_event(options.events, day, "match", out.arrival, home, static_cast<long long>(partner.pair),
                  pool.ledger[home]);
        log_event(options.events, day, "provide", partner.pair, out.provider_hospital,
                  static_cast<long long>(out.arrival), pool.ledger[out.provider_hospital]);
    } else {
        pool.waiting.push_back({out.instance, out.arrival});
        log_event(options.events, day, "arrive", out.arrival, home, -1, pool.ledger[home]);
    }

    // Departures, visiting waiting pairs in arrival order.
    std::size_t keep = 0;
    for (std::size_t k = 0; k < pool.waiting.size(); ++k) {
        const auto w = pool.waiting[k];
        if (keyed_uniform(streams.departure_key, w.instance, day) < options.departure_probability) {
            ++out.departures;
            const auto h = population.pairs[w.pair].hospital;
            log_event(options.events, day, "depart", w.pair, h, -1, pool.ledger[h]);
        } else {
            pool.waiting[keep++] = w;
        }
    }
    pool.waiting.resize(keep);
    ++pool.clock;
    return out;
}

double Diagnostics::multi_candidate_share() const {
    return matched_arrivals ? static_cast<double>(multi_candidate_matches) / static_cast<double>(matched_arrivals) : 0.0;
}

double Diagnostics::mean_candidates() const {
    return matched_arrivals ? static_cast<double>(candidate_total) / static_cast<double>(matched_arrivals) : 0.0;
}

HorizonResult run_horizon(const PairPopulation& population, Rule rule, const HorizonOptions& options) {
    population.validate();
    if (options.days < 1) throw ValidationError("the horizon must be at least one day");
    if (!(options.departure_probability >= 0.0 && options.departure_probability <= 1.0)) {
        throw ValidationError("departure probability must lie in [0, 1]");
    }
    HorizonResult res;
    auto pool = ExchangePool::empty(population.hospitals.size());
    auto streams = Streams::from_seed(options.seed);
    const CompatModel compat(population, streams.crossmatch_key);
    const DayOptions day_options{options.departure_probability, options.events};
    if (options.events) write_event_header(*options.events);

    auto record = [&](std::uint64_t day) {
        res.days.push_back(day);
        res.ledger.push_back(pool.ledger);
        res.pool_size.push_back(pool.waiting.size());
    };
    if (options.record_every) record(0);

    auto& diag = res.diagnostics;
    for (std::uint64_t day = 1; day <= options.days; ++day) {
        const auto out = run_day(pool, population, compat, rule, streams, day_options);
        ++diag.arrivals;
        diag.departures += out.departures;
        if (out.matched) {
            ++diag.matched_arrivals;
            diag.candidate_total += out.candidates;
            if (out.candidates >= 2) ++diag.multi_candidate_matches;
            if (out.provider_hospital == population.pairs[out.arrival].hospital) ++diag.intra_hospital_matches;
            if (rule == Rule::MinToken) {
                ++diag.min_rule_audits;
                if (out.provider_tokens_before != out.min_candidate_tokens) {
                    throw InvariantViolation("provider hospital was not a ledger minimum on day " + std::to_string(day));
                }
            }
        }
        ++diag.ledger_audits;
        if (pool.ledger_sum() != 0) {
            throw InvariantViolation("hospital ledger no longer sums to zero on day " + std::to_string(day));
        }
        if (options.record_every && day % options.record_every == 0) record(day);
    }
    res.final_ledger = pool.ledger;
    for (auto v : pool.ledger) res.max_abs_tokens = std::max<std::int64_t>(res.max_abs_tokens, std::abs(v));
    return res;
}

void write_trajectory_csv(std::ostream& out, const HorizonResult& result) {
    out << "day,hospital,tokens\n";
    for (std::size_t r = 0; r < result.days.size(); ++r) {
        for (std::size_t h = 0; h < result.ledger[r].size(); ++h) {
            out << result.days[r] << ',' << h << ',' << result.ledger[r][h] << '\n';
        }
    }
}

nlohmann::json to_json(const Diagnostics& d) {
    return {{"arrivals", d.arrivals},
            {"matched_arrivals", d.matched_arrivals},
            {"multi_candidate_share", d.multi_candidate_share()},
            {"mean_candidates", d.mean_candidates()},
            {"departures", d.departures},
            {"intra_hospital_matches", d.intra_hospital_matches},
            {"ledger_audits", d.ledger_audits}};
}

double RuleComparison::share() const {
    const auto runs = max_abs_min_token.size();
    return runs ? static_cast<double>(min_token_smaller) / static_cast<double>(runs) : 0.0;
}

RuleComparison compare_rules(const PairPopulation& population, std::size_t runs, std::uint64_t days,
                             std::uint64_t base_seed, std::size_t workers) {
    RuleComparison cmp;
    cmp.max_abs_min_token.assign(runs, 0);
    cmp.max_abs_uniform.assign(runs, 0);
    parallel_for(2 * runs, workers, [&](std::size_t job) {
        HorizonOptions o;
        o.days = days;
        o.seed = base_seed + job / 2;
        o.record_every = 0;
        if (job % 2 == 0) cmp.max_abs_min_token[job / 2] = run_horizon(population, Rule::MinToken, o).max_abs_tokens;
        else cmp.max_abs_uniform[job / 2] = run_horizon(population, Rule::Uniform, o).max_abs_tokens;
    });
    for (std::size_t k = 0; k < runs; ++k) {
        if (cmp.max_abs_min_token[k] < cmp.max_abs_uniform[k]) ++cmp.min_token_smaller;
    }
    return cmp;
}

}  // namespace tokensys::kidney
