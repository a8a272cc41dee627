#include "prosim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>

#include "prosim/error.hpp"
#include "prosim/snapshot.hpp"

namespace prosim {

using nlohmann::json;
using nlohmann::ordered_json;

ScenarioName parse_scenario_name(std::string_view name) {
    if (name == "E1-novel-form") return ScenarioName::e1_novel_form;
    if (name == "E2-mixture") return ScenarioName::e2_mixture;
    if (name == "E3-revision") return ScenarioName::e3_revision;
    if (name == "E4-community-contrast") return ScenarioName::e4_community_contrast;
    throw ValidationError("unknown scenario \"" + std::string(name) +
                          "\" (expected E1-novel-form, E2-mixture, E3-revision, or "
                          "E4-community-contrast)");
}

std::string_view scenario_name_str(ScenarioName name) {
    switch (name) {
        case ScenarioName::e1_novel_form: return "E1-novel-form";
        case ScenarioName::e2_mixture: return "E2-mixture";
        case ScenarioName::e3_revision: return "E3-revision";
        case ScenarioName::e4_community_contrast: return "E4-community-contrast";
    }
    throw ConsistencyError("unreachable scenario name");
}

void MetricsTable::sort_canonical() {
    std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        if (a.replicate != b.replicate) return a.replicate < b.replicate;
        if (a.step != b.step) return a.step < b.step;
        if (a.member != b.member) return a.member < b.member;
        return a.metric < b.metric;
    });
}

void Scenario::validate() const {
    community.validate();
    if (replicates < 1) throw ValidationError("scenario: replicates must be >= 1");
    if (measured_referent >= community.members.size())
        throw ValidationError("scenario: measured referent does not exist");
    if (measure_every < 1) throw ValidationError("scenario: measure_every must be >= 1");
    if (!(adoption_threshold > 0.0 && adoption_threshold <= 1.0))
        throw ValidationError("scenario: adoption_threshold must be in (0,1]");
    if (name == ScenarioName::e4_community_contrast && variants.size() < 2)
        throw ValidationError("scenario: E4 needs at least two profile variants");
    LexiconConfig lex = community.lexicon;
    lex.validate_and_normalize();
    for (const auto& iv : interventions) {
        if (iv.step > steps)
            throw ValidationError("scenario: intervention beyond the last step");
        if (iv.declarer >= community.members.size())
            throw ValidationError("scenario: intervention declarer does not exist");
        if (iv.declared.empty())
            throw ValidationError("scenario: intervention declares nothing");
        for (const auto& [f, w] : iv.declared) {
            if (!(base_measure_score(f, lex) > 0.0))
                throw RefusalError("scenario: declared form " + f.spec() +
                                   " has zero base-measure mass (novelty mass 0?); the "
                                   "configuration contradicts the scenario");
            if (!(w > 0.0))
                throw ValidationError("scenario: declared weight must be > 0");
        }
    }
}

namespace {

double licensed_mass(const Predictive& pred, const std::vector<Form>& licensed) {
    double m = 0.0;
    for (const Form& f : licensed) m += pred.mass_of(f);
    return m;
}

double tv_to_declared(const Predictive& pred,
                      const std::vector<std::pair<Form, double>>& declared) {
    double wsum = 0.0;
    for (const auto& [f, w] : declared) wsum += w;
    double psum = 0.0;
    std::vector<double> restricted;
    restricted.reserve(declared.size());
    for (const auto& [f, w] : declared) {
        const double p = pred.mass_of(f);
        restricted.push_back(p);
        psum += p;
    }
    if (!(psum > 0.0)) return 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < declared.size(); ++i)
        tv += std::abs(restricted[i] / psum - declared[i].second / wsum);
    return 0.5 * tv;
}

struct CommunityRunResult {
    std::vector<MetricRow> rows;
};

// Runs one community through the scenario timeline, measuring the declared
// state of the measured referent. Member ids are reported with `offset`
// added (E4 packs one variant per id block).
CommunityRunResult run_community_timeline(const Scenario& sc, CommunityConfig cfg,
                                          std::uint32_t replicate, MemberId offset) {
    CommunityState c = new_community(std::move(cfg));
    CommunityRunResult out;

    std::vector<Form> licensed;
    std::vector<std::pair<Form, double>> declared_mix;
    const bool emit_misgendering = sc.name != ScenarioName::e2_mixture;
    const bool emit_tv = sc.name == ScenarioName::e2_mixture;
    const bool emit_adoption = sc.name == ScenarioName::e1_novel_form ||
                               sc.name == ScenarioName::e4_community_contrast;

    std::vector<std::optional<std::uint64_t>> adopted(c.members.size());

    auto measure = [&](std::uint64_t completed_steps, bool emit) {
        if (licensed.empty()) return; // undefined before any declaration: absent, not 0
        for (MemberId m = 0; m < c.members.size(); ++m) {
            const Predictive pred = referent_predictive(c.hier, c.members[m], sc.measured_referent);
            const double lm = licensed_mass(pred, licensed);
            if (!adopted[m] && lm >= sc.adoption_threshold) adopted[m] = completed_steps;
            if (!emit) continue;
            if (emit_misgendering)
                out.rows.push_back({replicate, completed_steps, offset + m, "misgendering_rate",
                                    1.0 - lm, false});
            if (emit_tv)
                out.rows.push_back({replicate, completed_steps, offset + m, "tv_to_declared",
                                    tv_to_declared(pred, declared_mix), false});
        }
    };

    for (std::uint64_t k = 0; k <= sc.steps; ++k) {
        bool declared_now = false;
        for (const auto& iv : sc.interventions) {
            if (iv.step != k) continue;
            community_declare(c, iv.declarer, iv.declared);
            if (iv.declarer == sc.measured_referent) {
                licensed.clear();
                for (const auto& [f, w] : iv.declared) licensed.push_back(f);
                declared_mix = iv.declared;
                std::fill(adopted.begin(), adopted.end(), std::nullopt);
            }
            declared_now = true;
        }
        if (declared_now) measure(k, /*emit=*/true);
        if (k < sc.steps) {
            community_step(c);
            const std::uint64_t completed = k + 1;
            measure(completed, /*emit=*/completed % sc.measure_every == 0 || completed == sc.steps);
        }
    }

    if (emit_adoption) {
        for (MemberId m = 0; m < c.members.size(); ++m) {
            MetricRow row{replicate, sc.steps, offset + m, "steps_to_adoption", 0.0, false};
            if (adopted[m])
                row.value = static_cast<double>(*adopted[m]);
            else
                row.never = true;
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

std::vector<MetricRow> run_replicate(const Scenario& sc, std::uint32_t replicate) {
    const std::uint64_t seed = derive_seed(sc.base_seed, StreamPurpose::replicate, replicate);
    std::vector<MetricRow> rows;
    if (sc.name == ScenarioName::e4_community_contrast) {
        const auto n = static_cast<MemberId>(sc.community.members.size());
        for (std::size_t v = 0; v < sc.variants.size(); ++v) {
            CommunityConfig cfg = sc.community;
            cfg.seed = seed; // identical schedules across variants: paired runs
            for (auto& m : cfg.members) m.profile = sc.variants[v];
            auto r = run_community_timeline(sc, std::move(cfg), replicate,
                                            static_cast<MemberId>(v) * n);
            rows.insert(rows.end(), r.rows.begin(), r.rows.end());
        }
    } else {
        CommunityConfig cfg = sc.community;
        cfg.seed = seed;
        auto r = run_community_timeline(sc, std::move(cfg), replicate, 0);
        rows = std::move(r.rows);
    }
    return rows;
}

} // namespace

MetricsTable run_scenario(const Scenario& sc) {
    sc.validate();
    MetricsTable table;

    // Replicates are independent; aggregation is a reduction in replicate order.
    std::vector<std::future<std::vector<MetricRow>>> futs;
    futs.reserve(sc.replicates);
    for (std::uint32_t r = 0; r < sc.replicates; ++r)
        futs.push_back(std::async(std::launch::async, [&sc, r] { return run_replicate(sc, r); }));
    for (auto& f : futs) {
        auto rows = f.get();
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    }
    table.sort_canonical();
    return table;
}

namespace {

std::string format_metric_value(const MetricRow& row) {
    if (row.never) return "never";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", row.value);
    return buf;
}

} // namespace

std::string metrics_to_csv(const MetricsTable& m) {
    std::string out = "replicate,step,member,metric,value\n";
    for (const auto& row : m.rows) {
        out += std::to_string(row.replicate) + ',' + std::to_string(row.step) + ',' +
               std::to_string(row.member) + ',' + row.metric + ',' + format_metric_value(row) +
               '\n';
    }
    return out;
}

void emit_csv(const MetricsTable& m, const std::filesystem::path& path) {
    write_text_file(path, metrics_to_csv(m));
}

ordered_json scenario_to_json(const Scenario& sc) {
    ordered_json j;
    j["name"] = std::string(scenario_name_str(sc.name));
    j["community"] = community_config_to_json(sc.community);
    ordered_json ivs = ordered_json::array();
    for (const auto& iv : sc.interventions) {
        ordered_json ij;
        ij["step"] = iv.step;
        ij["declarer"] = iv.declarer;
        ordered_json decl = ordered_json::array();
        for (const auto& [f, w] : iv.declared) decl.push_back({f.spec(), w});
        ij["declared"] = std::move(decl);
        ivs.push_back(std::move(ij));
    }
    j["interventions"] = std::move(ivs);
    ordered_json variants = ordered_json::array();
    for (const auto& v : sc.variants) variants.push_back(speaker_profile_to_json(v));
    j["variants"] = std::move(variants);
    j["measured_referent"] = sc.measured_referent;
    j["steps"] = sc.steps;
    j["measure_every"] = sc.measure_every;
    j["replicates"] = sc.replicates;
    j["base_seed"] = sc.base_seed;
    j["adoption_threshold"] = sc.adoption_threshold;
    return j;
}

Scenario scenario_from_json(const json& j) {
    if (!j.contains("name")) throw ValidationError("scenario config: missing \"name\"");
    Scenario sc = Scenario::preset(parse_scenario_name(j.at("name").get<std::string>()));
    if (j.contains("community")) sc.community = community_config_from_json(j.at("community"));
    if (j.contains("interventions")) {
        sc.interventions.clear();
        for (const auto& ij : j.at("interventions")) {
            Intervention iv;
            iv.step = ij.at("step").get<std::uint64_t>();
            iv.declarer = ij.at("declarer").get<MemberId>();
            for (const auto& d : ij.at("declared"))
                iv.declared.emplace_back(parse_form_spec(d.at(0).get<std::string>()),
                                         d.at(1).get<double>());
            sc.interventions.push_back(std::move(iv));
        }
    }
    if (j.contains("variants")) {
        sc.variants.clear();
        for (const auto& v : j.at("variants")) sc.variants.push_back(speaker_profile_from_json(v));
    }
    if (j.contains("measured_referent"))
        sc.measured_referent = j.at("measured_referent").get<MemberId>();
    if (j.contains("steps")) sc.steps = j.at("steps").get<std::uint64_t>();
    if (j.contains("measure_every")) sc.measure_every = j.at("measure_every").get<std::uint64_t>();
    if (j.contains("replicates")) sc.replicates = j.at("replicates").get<std::uint32_t>();
    if (j.contains("base_seed")) sc.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("adoption_threshold"))
        sc.adoption_threshold = j.at("adoption_threshold").get<double>();
    return sc;
}

Scenario load_scenario(std::string_view name,
                       const std::optional<std::filesystem::path>& config) {
    if (!config) return Scenario::preset(parse_scenario_name(name));
    json j;
    try {
        j = json::parse(read_text_file(*config));
    } catch (const json::parse_error& e) {
        throw ValidationError("scenario config parse failed: " + std::string(e.what()));
    }
    if (!j.contains("name")) j["name"] = std::string(name);
    Scenario sc = scenario_from_json(j);
    if (scenario_name_str(sc.name) != name)
        throw ValidationError("scenario config names " + std::string(j.at("name").get<std::string>()) +
                              " but the command asked for " + std::string(name));
    return sc;
}

namespace {

std::vector<MemberSpec> make_members(const std::vector<SpeakerProfile>& profiles) {
    std::vector<MemberSpec> members;
    for (std::size_t i = 0; i < profiles.size(); ++i)
        members.push_back({"m" + std::to_string(i), profiles[i]});
    return members;
}

SpeakerProfile instant_profile() {
    SpeakerProfile p = SpeakerProfile::flexible();
    p.retention = 0.0; // full reset on declaration
    return p;
}

} // namespace

Scenario Scenario::preset(ScenarioName name) {
    Scenario sc;
    sc.name = name;
    const Form ze = make_paradigm("ze/zir/zir/zirs/zirself");
    const Form he = make_paradigm("he/him/his/his/himself");
    const Form they = make_paradigm("they/them/their/theirs/themself");
    const Form she = make_paradigm("she/her/her/hers/herself");

    switch (name) {
        case ScenarioName::e1_novel_form: {
            SpeakerProfile ultra_rigid = SpeakerProfile::rigid();
            ultra_rigid.retention = 1.0;
            ultra_rigid.declaration_weight = 0.0;
            sc.community.members = make_members({SpeakerProfile::flexible(),
                                                 SpeakerProfile::flexible(),
                                                 SpeakerProfile::flexible(),
                                                 SpeakerProfile::rigid(),
                                                 SpeakerProfile::rigid(), ultra_rigid});
            sc.community.schedule.referent_weights = {1, 0, 0, 0, 0, 0};
            sc.community.schedule.refs_per_discourse_fixed = 3;
            sc.interventions = {{2, 0, {{ze, 1.0}}}};
            sc.measured_referent = 0;
            sc.steps = 30;
            sc.measure_every = 1;
            sc.replicates = 5;
            break;
        }
        case ScenarioName::e2_mixture: {
            sc.community.members = make_members({SpeakerProfile::flexible(),
                                                 SpeakerProfile::flexible(),
                                                 SpeakerProfile::flexible(),
                                                 SpeakerProfile::flexible(),
                                                 SpeakerProfile::rigid(),
                                                 SpeakerProfile::rigid()});
            sc.community.schedule.speaker_weights = {1, 0, 0, 0, 0, 0};
            sc.community.schedule.referent_weights = {1, 0, 0, 0, 0, 0};
            sc.community.schedule.refs_per_discourse_fixed = 1;
            sc.community.frozen_members = {0}; // stationary mixture source
            sc.interventions = {{0, 0, {{he, 1.0}, {they, 1.0}}}};
            sc.measured_referent = 0;
            sc.steps = 220;
            sc.measure_every = 20;
            sc.replicates = 20;
            break;
        }
        case ScenarioName::e3_revision: {
            sc.community.members = make_members({SpeakerProfile::flexible(), instant_profile(),
                                                 instant_profile(), instant_profile(),
                                                 SpeakerProfile::rigid(), SpeakerProfile::rigid()});
            sc.community.schedule.referent_weights = {1, 0, 0, 0, 0, 0};
            sc.community.schedule.refs_per_discourse_fixed = 1;
            sc.interventions = {{0, 0, {{she, 1.0}}},
                                {100, 0, {{Form::name("ada"), 1.0}}}};
            sc.measured_referent = 0;
            sc.steps = 140;
            sc.measure_every = 10;
            sc.replicates = 5;
            break;
        }
        case ScenarioName::e4_community_contrast: {
            sc.community.members = make_members(std::vector<SpeakerProfile>(6, SpeakerProfile{}));
            sc.community.schedule.referent_weights = {1, 0, 0, 0, 0, 0};
            sc.community.schedule.refs_per_discourse_fixed = 2;
            sc.variants = {SpeakerProfile::flexible(), SpeakerProfile::rigid()};
            sc.interventions = {{10, 0, {{ze, 1.0}}}};
            sc.measured_referent = 0;
            sc.steps = 100;
            sc.measure_every = 5;
            sc.replicates = 20;
            break;
        }
    }
    return sc;
}

} // namespace prosim
