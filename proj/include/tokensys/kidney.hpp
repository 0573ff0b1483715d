#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tokensys/config.hpp"
#include "tokensys/rng.hpp"

namespace tokensys::kidney {

enum class BloodType { O, A, B, AB };

std::string_view to_string(BloodType t);
BloodType parse_blood_type(std::string_view text);

// Standard ABO rule, donor -> patient.
bool abo_compatible(BloodType donor, BloodType patient);

struct PraBand {
    double weight;
    double lo, hi;
};

struct PopulationConfig {
    std::size_t pairs = 1881;
    std::size_t hospitals = 84;
    std::size_t max_hospital_size = 150;
    double size_sigma = 1.0;  // spread of the log-normal hospital weights
    std::vector<PraBand> pra = {{0.60, 0.0, 0.2}, {0.25, 0.2, 0.9}, {0.15, 0.9, 1.0}};
    std::array<double, 4> patient_abo = {0.44, 0.42, 0.10, 0.04};  // O, A, B, AB
    std::array<double, 4> donor_abo = {0.44, 0.42, 0.10, 0.04};
    std::uint64_t seed = 1;

    void validate() const;
};

nlohmann::json to_json(const PopulationConfig& c);
PopulationConfig population_config_from_json(const nlohmann::json& doc);

struct PatientDonorPair {
    std::size_t id;
    std::size_t hospital;
    BloodType patient;
    BloodType donor;
    double pra;  // patient's panel reactive antibody level in [0, 1]
};

struct Hospital {
    std::size_t id;
    std::size_t pairs;
};

struct PairPopulation {
    std::vector<PatientDonorPair> pairs;
    std::vector<Hospital> hospitals;

    void validate() const;
};

// Hospitals that end up with no pairs are dropped and the rest renumbered.
PairPopulation generate_population(const PopulationConfig& config);

/// Donor of pair u can give to the patient of pair v when their blood types
/// are compatible and a crossmatch passes. The crossmatch outcome for each
/// ordered (u, v) is a fixed draw with success probability 1 - PRA(v).
class CompatModel {
public:
    CompatModel(const PairPopulation& population, std::uint64_t crossmatch_key)
        : population_(&population), key_(crossmatch_key) {}

    bool donor_to_patient(std::size_t u, std::size_t v) const;
    bool mutual(std::size_t u, std::size_t v) const { return donor_to_patient(u, v) && donor_to_patient(v, u); }

private:
    const PairPopulation* population_;
    std::uint64_t key_;
};

struct Waiting {
    std::uint64_t instance;  // arrival number
    std::size_t pair;        // population index
};

struct ExchangePool {
    std::vector<Waiting> waiting;  // ordered by instance
    std::vector<std::int64_t> ledger;
    std::uint64_t clock = 0;
    std::uint64_t next_instance = 0;

    static ExchangePool empty(std::size_t hospitals);
    std::int64_t ledger_sum() const;
};

/// Random sources for one run. Arrivals and tie-breaks are sequential
/// streams; crossmatch and departure outcomes are keyed by (pair, pair) and
/// (instance, day), so two runs with the same seed face identical arrivals,
/// compatibilities and departure coins whatever rule they use.
struct Streams {
    Rng arrivals;
    Rng tiebreak;
    std::uint64_t crossmatch_key;
    std::uint64_t departure_key;

    static Streams from_seed(std::uint64_t seed);
};

struct DayOutcome {
    std::size_t arrival = 0;  // population index
    std::uint64_t instance = 0;
    std::size_t candidates = 0;
    bool matched = false;
    std::uint64_t partner_instance = 0;
    std::size_t provider_hospital = 0;
    // Ledger values before the transfer: the minimum over candidate
    // hospitals and the chosen provider's balance.
    std::int64_t min_candidate_tokens = 0;
    std::int64_t provider_tokens_before = 0;
    std::size_t departures = 0;
};

struct DayOptions {
    double departure_probability = 1.0 / 365.0;
    std::ostream* events = nullptr;  // rows of day,event,pair,hospital,counterparty,tokens_after
};

DayOutcome run_day(ExchangePool& pool, const PairPopulation& population, const CompatModel& compat, Rule rule,
                   Streams& streams, const DayOptions& options = {});

void write_event_header(std::ostream& out);

struct HorizonOptions {
    std::uint64_t days = 100'000;
    std::uint64_t seed = 1;
    std::uint64_t record_every = 100;
    double departure_probability = 1.0 / 365.0;
    std::ostream* events = nullptr;
};

struct Diagnostics {
    std::uint64_t arrivals = 0;
    std::uint64_t matched_arrivals = 0;
    std::uint64_t multi_candidate_matches = 0;
    std::uint64_t candidate_total = 0;  // over matched arrivals
    std::uint64_t departures = 0;
    std::uint64_t intra_hospital_matches = 0;
    std::uint64_t ledger_audits = 0;
    std::uint64_t min_rule_audits = 0;

    double multi_candidate_share() const;
    double mean_candidates() const;
};

struct HorizonResult {
    std::vector<std::uint64_t> days;
    std::vector<std::vector<std::int64_t>> ledger;  // per recorded day
    std::vector<std::size_t> pool_size;             // per recorded day
    std::vector<std::int64_t> final_ledger;
    std::int64_t max_abs_tokens = 0;
    Diagnostics diagnostics;
};

/// Runs `days` days from an empty pool, checking after every day that the
/// ledger sums to zero (InvariantViolation otherwise).
HorizonResult run_horizon(const PairPopulation& population, Rule rule, const HorizonOptions& options);

void write_trajectory_csv(std::ostream& out, const HorizonResult& result);

nlohmann::json to_json(const Diagnostics& d);

struct RuleComparison {
    std::vector<std::int64_t> max_abs_min_token;
    std::vector<std::int64_t> max_abs_uniform;
    std::size_t min_token_smaller = 0;

    double share() const;
};

/// Matched-seed runs of both rules on the same population, one pair of
/// runs per seed base_seed + k.
RuleComparison compare_rules(const PairPopulation& population, std::size_t runs, std::uint64_t days,
                             std::uint64_t base_seed = 1, std::size_t workers = 1);

}  // namespace tokensys::kidney
