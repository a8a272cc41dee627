#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "prosim/community.hpp"

namespace prosim {

// Estimator configuration; also serves as the hierarchy shape description
// for the exact enumeration oracle. Concentrations are fixed per level (no
// hyperprior resampling), which keeps the oracle exact.
struct FitConfig {
    std::uint32_t sweeps = 200;
    std::optional<std::uint32_t> burn_in; // default: sweeps / 5
    std::uint32_t thin = 10;
    std::uint64_t seed = 1;
    bool community_mode = true; // adds the shared community restaurant level
    bool referent_level = true; // observations seat in per-(speaker, referent)
                                // restaurants; false collapses to the speaker level
    double alpha_community = 1.0;
    double alpha_general = 1.0;
    double alpha_referent = 0.5;
    LexiconConfig lexicon = LexiconConfig::defaults();
    std::optional<std::vector<MemberId>> members; // universe override

    std::uint32_t effective_burn_in() const;
    void validate() const;
};

// One averaged predictive table over FitResult::support.
struct PairTable {
    MemberId speaker = 0;
    MemberId referent = 0;
    std::vector<double> probs;
    double residual = 0.0;
};

struct FitResult {
    LexiconConfig lexicon;
    bool community_mode = true;
    std::vector<Form> support;       // log forms + seeds, sorted by spec
    std::vector<MemberId> members;   // sorted universe
    std::vector<PairTable> pairs;    // observed (speaker, referent) pairs, sorted
    std::vector<PairTable> generals; // per member (referent field mirrors speaker)
    std::optional<PairTable> community;
    std::vector<double> base_probs; // base measure over support
    double base_residual = 0.0;
    std::vector<double> log_joint_trace; // incremental joint after each sweep
    std::uint32_t samples = 0;
    // posterior table-count diagnostics, comparable to the exact oracle
    double avg_total_tables = 0.0;
    std::map<std::pair<MemberId, MemberId>, double> avg_leaf_tables;

    const PairTable* find_pair(MemberId s, MemberId t) const;
    const PairTable* find_general(MemberId s) const;
};

// Collapsed Gibbs over seating arrangements: initializes by sequential
// seating in log order, then every sweep unseats and reseats each
// observation from its conditional. Deterministic given cfg.seed.
FitResult fit_gibbs(const std::vector<LogEntry>& log, const FitConfig& cfg);

// Averaged predictive for a pair, falling back (documented order) to the
// speaker's general table, the community table, then the base measure.
Predictive predict_next(const FitResult& fit, MemberId speaker, MemberId referent);

// Mean -log P(form | speaker, referent) under the averaged predictives.
// Novel forms score through the residual times the string model; with
// novelty mass zero that is an explicit infinite-loss error.
double heldout_log_loss(const FitResult& fit, const std::vector<LogEntry>& heldout);

// Exact log marginal likelihood by enumerating every franchise seating
// arrangement. Refuses logs with more than 8 reference events.
double exact_marginal(const std::vector<LogEntry>& log, const FitConfig& shape);

struct ExactStats {
    double log_marginal = 0.0;
    double expected_total_tables = 0.0;
    std::map<std::pair<MemberId, MemberId>, double> expected_leaf_tables;
};

// Posterior expectations over the same enumeration; the unit-test oracle
// for Gibbs arrangement statistics.
ExactStats exact_arrangement_stats(const std::vector<LogEntry>& log, const FitConfig& shape);

FitConfig fit_config_from_json(const nlohmann::json& j);
FitConfig fit_config_from_file(const std::filesystem::path& path);

// Canonical fit document (sorted tables, stable bytes).
std::string fit_result_to_string(const FitResult& fit);
FitResult fit_result_from_string(const std::string& text);
void fit_result_save(const FitResult& fit, const std::filesystem::path& path);
FitResult fit_result_load(const std::filesystem::path& path);

} // namespace prosim
