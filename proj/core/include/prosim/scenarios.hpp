#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosim/community.hpp"

namespace prosim {

enum class ScenarioName {
    e1_novel_form,         // a neopronoun enters the vocabulary by self-declaration
    e2_mixture,            // adaptation to a declared 50/50 mixture
    e3_revision,           // recovery after a declared change, long histories
    e4_community_contrast, // paired adoption-speed comparison across profiles
};

ScenarioName parse_scenario_name(std::string_view name); // "E1-novel-form" etc.
std::string_view scenario_name_str(ScenarioName name);

struct MetricRow {
    std::uint32_t replicate = 0;
    std::uint64_t step = 0; // completed steps at measurement time
    MemberId member = 0;
    std::string metric; // misgendering_rate | tv_to_declared | steps_to_adoption | heldout_loss
    double value = 0.0;
    bool never = false; // steps_to_adoption sentinel
};

struct MetricsTable {
    std::vector<MetricRow> rows;
    void sort_canonical(); // (replicate, step, member, metric)
};

// A runnable experiment. For E4, `variants` describes one community per
// profile (same seed and schedule per replicate, so runs are paired); member
// i of variant v reports as member id v * |members| + i.
struct Scenario {
    ScenarioName name = ScenarioName::e1_novel_form;
    CommunityConfig community;
    std::vector<Intervention> interventions;
    std::vector<SpeakerProfile> variants; // E4 only
    MemberId measured_referent = 0;
    std::uint64_t steps = 50;
    std::uint64_t measure_every = 5;
    std::uint32_t replicates = 1;
    std::uint64_t base_seed = 1;
    double adoption_threshold = 0.8;

    void validate() const;
    static Scenario preset(ScenarioName name);
};

// Executes every replicate (independently seeded from base_seed) and
// returns the canonical metrics table. Deterministic per (base seed,
// replicate index); replicates may run in parallel.
MetricsTable run_scenario(const Scenario& sc);

// Header then rows sorted by (replicate, step, member, metric); values at 6
// significant digits; byte-stable given equal inputs.
std::string metrics_to_csv(const MetricsTable& m);
void emit_csv(const MetricsTable& m, const std::filesystem::path& path);

nlohmann::ordered_json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& j);
// Starts from the preset for `name` and overrides any fields present in the
// optional config file.
Scenario load_scenario(std::string_view name, const std::optional<std::filesystem::path>& config);

} // namespace prosim
