// Acceptance suite: one check per release criterion, one PASS/FAIL line
// each. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "prosim/community.hpp"
#include "prosim/error.hpp"
#include "prosim/inference.hpp"
#include "prosim/scenarios.hpp"
#include "prosim/snapshot.hpp"

using namespace prosim;

namespace {

const Form kHe = make_paradigm("he/him/his/his/himself");
const Form kShe = make_paradigm("she/her/her/hers/herself");
const Form kZe = make_paradigm("ze/zir/zir/zirs/zirself");

int g_failures = 0;

void report(const char* name, bool ok, double seconds) {
    std::printf("%s - %s (%.1fs)\n", ok ? "PASS" : "FAIL", name, seconds);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

template <typename F>
void criterion(const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body();
    } catch (const std::exception& e) {
        std::printf("       exception: %s\n", e.what());
        ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(name, ok, secs);
}

ReferenceEvent make_event(Timestamp ts, MemberId s, MemberId t, const Form& f) {
    ReferenceEvent e;
    e.timestamp = ts;
    e.speaker = s;
    e.referent = t;
    e.slot = GrammaticalSlot::subject;
    e.form = f;
    e.surface = realize(f, e.slot, "x");
    return e;
}

std::vector<LogEntry> wrap(const std::vector<ReferenceEvent>& events) {
    std::vector<LogEntry> log;
    for (const auto& e : events) log.emplace_back(e);
    return log;
}

// --- criterion 1: CRP/CRF correctness ---------------------------------

bool crp_correctness() {
    // Predictive normalization on 1,000 randomized hierarchies.
    Rng rng(90210);
    for (int trial = 0; trial < 1000; ++trial) {
        LexiconConfig lex = LexiconConfig::defaults();
        lex.novelty_mass = 0.01 + 0.2 * rng.next_double();
        Hierarchy h(lex);
        const RestaurantId root = h.add_restaurant(0.3 + 3.0 * rng.next_double(), std::nullopt);
        std::vector<RestaurantId> leaves;
        const int mids = 1 + static_cast<int>(rng.next_below(3));
        for (int m = 0; m < mids; ++m) {
            const RestaurantId mid = h.add_restaurant(0.3 + 3.0 * rng.next_double(), root);
            const int refs = 1 + static_cast<int>(rng.next_below(3));
            for (int k = 0; k < refs; ++k)
                leaves.push_back(h.add_restaurant(0.3 + 3.0 * rng.next_double(), mid));
        }
        const int seats = static_cast<int>(rng.next_below(30));
        for (int k = 0; k < seats; ++k) h.draw(leaves[rng.next_below(leaves.size())], rng);
        for (std::size_t rid = 0; rid < h.restaurant_count(); ++rid) {
            const Predictive p = h.predictive(static_cast<RestaurantId>(rid));
            if (std::abs(p.explicit_total() + p.residual - 1.0) > 1e-9) return false;
        }
    }

    // 10^4 seat/unseat pairs, audited after every mutation.
    Hierarchy h(LexiconConfig::defaults());
    const RestaurantId root = h.add_restaurant(1.0, std::nullopt);
    const RestaurantId mid = h.add_restaurant(0.8, root);
    const RestaurantId leaf = h.add_restaurant(0.5, mid);
    for (int k = 0; k < 30; ++k) h.draw(leaf, rng);
    h.audit();
    const Hierarchy before = h;
    for (int pair = 0; pair < 10000; ++pair) {
        const Form f = h.sample_form(leaf, rng);
        const SeatRecord rec = h.seat(leaf, f, rng);
        h.audit();
        h.unseat(rec);
        h.audit();
        if (!h.structurally_equal(before)) return false;
    }
    return true;
}

// --- criterion 2: oracle equivalence ----------------------------------

bool oracle_equivalence() {
    // exact_marginal against the hand enumeration: (1/2)*(1/2 + 1/4) = 0.375.
    {
        FitConfig shape;
        shape.community_mode = false;
        shape.referent_level = false;
        shape.alpha_general = 1.0;
        LexiconConfig lex;
        lex.seed_forms = {{kHe, 0.5}, {kShe, 0.5}};
        lex.novelty_mass = 0.0;
        shape.lexicon = lex;
        const double lm =
            exact_marginal(wrap({make_event(0, 0, 0, kHe), make_event(1, 0, 0, kHe)}), shape);
        if (std::abs(std::exp(lm) - 0.375) > 1e-12) return false;
    }

    // Gibbs arrangement statistics vs exact enumeration on every fixture
    // with <= 5 events and <= 2 hierarchy levels, 10^4 sweeps, 3 seeds.
    struct Fixture {
        FitConfig shape;
        std::vector<ReferenceEvent> events;
    };
    LexiconConfig lex;
    lex.seed_forms = {{kHe, 0.5}, {kShe, 0.5}};
    lex.novelty_mass = 0.0;

    std::vector<Fixture> fixtures;
    {
        Fixture f;
        f.shape.community_mode = false;
        f.shape.referent_level = false;
        f.shape.lexicon = lex;
        f.events = {make_event(0, 0, 0, kHe), make_event(1, 0, 0, kHe), make_event(2, 0, 0, kShe),
                    make_event(3, 0, 0, kHe), make_event(4, 0, 0, kShe)};
        fixtures.push_back(f);
    }
    {
        Fixture f;
        f.shape.community_mode = true;
        f.shape.referent_level = false;
        f.shape.lexicon = lex;
        f.events = {make_event(0, 0, 1, kHe), make_event(1, 1, 1, kHe), make_event(2, 0, 1, kShe),
                    make_event(3, 1, 1, kHe)};
        fixtures.push_back(f);
    }
    {
        Fixture f;
        f.shape.community_mode = false;
        f.shape.referent_level = true;
        f.shape.lexicon = lex;
        f.events = {make_event(0, 0, 1, kHe), make_event(1, 0, 2, kHe), make_event(2, 0, 1, kShe)};
        fixtures.push_back(f);
    }

    for (const auto& fx : fixtures) {
        const auto log = wrap(fx.events);
        const ExactStats exact = exact_arrangement_stats(log, fx.shape);
        // Three chains, pooled by averaging (the documented multi-chain merge).
        double total = 0.0;
        std::map<std::pair<MemberId, MemberId>, double> leaf;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            FitConfig cfg = fx.shape;
            cfg.sweeps = 10000;
            cfg.burn_in = 2000;
            cfg.thin = 1;
            cfg.seed = seed;
            const FitResult fit = fit_gibbs(log, cfg);
            total += fit.avg_total_tables / 3.0;
            for (const auto& [p, v] : fit.avg_leaf_tables) leaf[p] += v / 3.0;
        }
        if (std::abs(total - exact.expected_total_tables) > 0.02) return false;
        for (const auto& [p, v] : exact.expected_leaf_tables)
            if (std::abs(leaf.at(p) - v) > 0.02) return false;
    }
    return true;
}

// --- criterion 3: capability 1, novel forms ---------------------------

bool capability_novel_forms() {
    CommunityConfig cfg;
    SpeakerProfile declarer = SpeakerProfile::flexible();
    declarer.retention = 0.0;      // rho = 0
    declarer.declaration_weight = 5.0;
    SpeakerProfile stone = SpeakerProfile::rigid();
    stone.retention = 1.0;
    stone.declaration_weight = 0.0; // only broadcasts can reach this member
    cfg.members = {{"m0", declarer},
                   {"m1", SpeakerProfile::flexible()},
                   {"m2", SpeakerProfile::flexible()},
                   {"m3", SpeakerProfile::rigid()},
                   {"m4", SpeakerProfile::rigid()},
                   {"m5", stone}};
    cfg.schedule.speaker_weights = {1, 0, 0, 0, 0, 0};
    cfg.schedule.referent_weights = {1, 0, 0, 0, 0, 0};
    cfg.schedule.refs_per_discourse_fixed = 3;
    cfg.seed = 11;
    CommunityState c = new_community(cfg);
    community_run(c, 5); // some conventional history

    if (base_measure_score(kZe, c.cfg.lexicon) <= 0.0) return false; // needs eta > 0
    community_declare(c, 0, {{kZe, 1.0}});

    // Immediately: the declaring member holds >= 0.8 on the new form.
    if (referent_predictive(c.hier, c.members[0], 0).mass_of(kZe) < 0.8) return false;

    // Within one broadcast of the form: explicit mass > 0 for every member.
    bool broadcast_seen = false;
    for (int step = 0; step < 10 && !broadcast_seen; ++step)
        for (const auto& e : community_step(c))
            if (e.form == kZe) broadcast_seen = true;
    if (!broadcast_seen) return false;
    for (const auto& m : c.members)
        if (!(referent_predictive(c.hier, m, 0).mass_of(kZe) > 0.0)) return false;
    community_audit(c);
    return true;
}

// --- criterion 4: capability 2, mixtures ------------------------------

bool capability_mixtures() {
    Scenario sc = Scenario::preset(ScenarioName::e2_mixture);
    sc.replicates = 20;
    sc.steps = 220; // declaration at step 0; step k = k observations
    const MetricsTable table = run_scenario(sc);
    bool any = false;
    for (const auto& row : table.rows) {
        if (row.metric != "tv_to_declared" || row.step != 200) continue;
        if (row.member >= 1 && row.member <= 3) { // flexible observers
            any = true;
            if (row.value > 0.1) return false;
        }
    }
    return any;
}

// --- criterion 5: capability 3, revision ------------------------------

bool capability_revision() {
    for (std::uint64_t history : {10u, 100u, 1000u}) {
        Scenario sc = Scenario::preset(ScenarioName::e3_revision);
        sc.interventions = {{0, 0, {{kShe, 1.0}}},
                            {history, 0, {{Form::name("ada"), 1.0}}}};
        sc.steps = history + 20;
        sc.measure_every = 10;
        sc.replicates = 3;
        const MetricsTable table = run_scenario(sc);
        // Members 1..3 have rho = 0; their first measurement after the
        // declaration is the row at step == history.
        bool any = false;
        for (const auto& row : table.rows) {
            if (row.metric != "misgendering_rate" || row.step != history) continue;
            if (row.member >= 1 && row.member <= 3) {
                any = true;
                if (row.value > 0.2) return false;
            }
        }
        if (!any) return false;
    }
    return true;
}

// --- criterion 6: capability 4, individual variation ------------------

double lower_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

bool capability_individual_variation() {
    // Paired flexible-vs-rigid communities.
    {
        Scenario sc = Scenario::preset(ScenarioName::e4_community_contrast);
        sc.replicates = 20;
        const MetricsTable table = run_scenario(sc);
        int wins = 0;
        for (std::uint32_t rep = 0; rep < sc.replicates; ++rep) {
            std::vector<double> flex, rigid;
            for (const auto& row : table.rows) {
                if (row.replicate != rep || row.metric != "steps_to_adoption") continue;
                const double v =
                    row.never ? std::numeric_limits<double>::infinity() : row.value;
                (row.member < 6 ? flex : rigid).push_back(v);
            }
            if (flex.size() != 6 || rigid.size() != 6) return false;
            if (lower_median(flex) <= lower_median(rigid)) ++wins;
        }
        if (wins < 16) return false; // 80% of 20
    }

    // Monotonicity of adoption speed in rho across {0, 0.5, 0.9}.
    {
        Scenario sc = Scenario::preset(ScenarioName::e4_community_contrast);
        sc.replicates = 20;
        sc.variants.clear();
        for (double rho : {0.0, 0.5, 0.9}) {
            SpeakerProfile p;
            p.retention = rho;
            p.declaration_weight = 2.0;
            sc.variants.push_back(p);
        }
        const MetricsTable table = run_scenario(sc);
        int monotone = 0;
        for (std::uint32_t rep = 0; rep < sc.replicates; ++rep) {
            std::vector<std::vector<double>> adoption(3);
            for (const auto& row : table.rows) {
                if (row.replicate != rep || row.metric != "steps_to_adoption") continue;
                const double v =
                    row.never ? std::numeric_limits<double>::infinity() : row.value;
                adoption[row.member / 6].push_back(v);
            }
            const double m0 = lower_median(adoption[0]);
            const double m1 = lower_median(adoption[1]);
            const double m2 = lower_median(adoption[2]);
            if (m0 <= m1 && m1 <= m2) ++monotone;
        }
        if (monotone <= 10) return false; // majority of 20
    }
    return true;
}

// --- criterion 7: reproducibility -------------------------------------

bool reproducibility() {
    CommunityConfig cfg;
    for (int i = 0; i < 4; ++i)
        cfg.members.push_back({"m" + std::to_string(i),
                               i % 2 ? SpeakerProfile::rigid() : SpeakerProfile::flexible()});
    cfg.seed = 20240;

    // simulate -> snapshot -> resume equals the uninterrupted run, byte-exact.
    CommunityState full = new_community(cfg);
    community_run(full, 60, {{15, 2, {{kZe, 1.0}}}});
    CommunityState half = new_community(cfg);
    community_run(half, 30, {{15, 2, {{kZe, 1.0}}}});
    CommunityState resumed = snapshot_from_string(snapshot_to_string(half));
    community_run(resumed, 30);
    if (snapshot_to_string(resumed) != snapshot_to_string(full)) return false;

    // Identical scenario invocations produce byte-identical CSV.
    Scenario sc = Scenario::preset(ScenarioName::e1_novel_form);
    sc.replicates = 3;
    const std::string a = metrics_to_csv(run_scenario(sc));
    const std::string b = metrics_to_csv(run_scenario(sc));
    if (a != b) return false;

    // Log replay through fresh observers reconstructs the same snapshot.
    CommunityState fresh = new_community(cfg);
    community_replay(fresh, full.log);
    return snapshot_to_string(fresh) == snapshot_to_string(full);
}

} // namespace

int main() {
    std::printf("prosim acceptance suite\n");
    criterion("CRP/CRF correctness: normalization, seat/unseat inverse, franchise audit",
              crp_correctness);
    criterion("Oracle equivalence: Gibbs vs exact enumeration; 2-event marginal 0.375",
              oracle_equivalence);
    criterion("Capability 1 (novel forms): declared neopronoun visible everywhere within one broadcast",
              capability_novel_forms);
    criterion("Capability 2 (mixtures): TV to declared 50/50 <= 0.1 after 200 observations x20 replicates",
              capability_mixtures);
    criterion("Capability 3 (revision): misgendering <= 0.2 at first measurement, histories 10/100/1000",
              capability_revision);
    criterion("Capability 4 (individual variation): flexible <= rigid in >= 80% of 20; rho-monotonicity",
              capability_individual_variation);
    criterion("Reproducibility: snapshot/resume byte-exact; CSV byte-identical; replay exact",
              reproducibility);
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
