#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "prosim/community.hpp"
#include "prosim/error.hpp"
#include "prosim/snapshot.hpp"

using namespace prosim;

namespace {

const Form kHe = make_paradigm("he/him/his/his/himself");
const Form kShe = make_paradigm("she/her/her/hers/herself");
const Form kThey = make_paradigm("they/them/their/theirs/themself");
const Form kZe = make_paradigm("ze/zir/zir/zirs/zirself");

CommunityConfig small_config(std::size_t n, std::uint64_t seed = 1) {
    CommunityConfig cfg;
    for (std::size_t i = 0; i < n; ++i) {
        cfg.members.push_back({"m" + std::to_string(i), i % 2 == 0 ? SpeakerProfile::flexible()
                                                                   : SpeakerProfile::rigid()});
    }
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("config validation names the problem") {
    CommunityConfig one;
    one.members.push_back({"m0", SpeakerProfile::flexible()});
    CHECK_THROWS_AS(one.validate(), ValidationError);

    CommunityConfig bad = small_config(3);
    bad.schedule.speaker_weights = {1.0, 1.0}; // wrong arity
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    CommunityConfig froz = small_config(3);
    froz.frozen_members = {9};
    CHECK_THROWS_AS(froz.validate(), ValidationError);
}

TEST_CASE("a fresh community answers with the base measure") {
    CommunityState c = new_community(small_config(2));
    for (const auto& m : c.members) {
        const Predictive p = c.hier.predictive(m.general);
        CHECK(p.mass_of(kHe) == doctest::Approx(0.95 * 0.45 +
                                                0.05 * string_model_score(kHe, c.cfg.lexicon))
                                    .epsilon(1e-12));
        CHECK(std::abs(p.explicit_total() + p.residual - 1.0) <= 1e-9);
    }
}

TEST_CASE("ten members wire a four-level hierarchy") {
    CommunityState c = new_community(small_config(10));
    community_run(c, 25);
    community_audit(c);
    for (auto& m : c.members)
        for (const auto& [t, rid] : m.per_referent)
            CHECK(c.hier.at(rid).depth + 1 == 4); // base + community + P + P^t
}

TEST_CASE("identical configs give byte-identical snapshots") {
    CommunityState a = new_community(small_config(4, 99));
    CommunityState b = new_community(small_config(4, 99));
    community_run(a, 50);
    community_run(b, 50);
    CHECK(snapshot_to_string(a) == snapshot_to_string(b));
}

TEST_CASE("self-reference broadcasts evidence of the self-chosen form") {
    CommunityConfig cfg = small_config(4);
    cfg.schedule.speaker_weights = {1, 0, 0, 0};
    cfg.schedule.referent_weights = {1, 0, 0, 0};
    cfg.schedule.refs_per_discourse_fixed = 1;
    CommunityState c = new_community(cfg);
    const auto events = community_step(c);
    REQUIRE(events.size() == 1);
    CHECK(events[0].speaker == 0);
    CHECK(events[0].referent == 0);
    for (MemberId m = 1; m < 4; ++m) {
        const auto& member = c.members[m];
        REQUIRE(member.per_referent.count(0) == 1);
        CHECK(c.hier.at(member.per_referent.at(0)).dish_count(events[0].form) == 1);
    }
}

TEST_CASE("fixed discourse length pins the event count") {
    CommunityConfig cfg = small_config(3);
    cfg.schedule.refs_per_discourse_fixed = 1;
    CommunityState c = new_community(cfg);
    for (int i = 0; i < 10; ++i) CHECK(community_step(c).size() == 1);
    CHECK(c.clock == 10);
}

TEST_CASE("witnessing is complete across the community") {
    CommunityState c = new_community(small_config(5));
    for (int i = 0; i < 20; ++i) {
        std::uint64_t before = 0;
        for (const auto& m : c.members) before += m.witnessed;
        const auto events = community_step(c);
        std::uint64_t after = 0;
        for (const auto& m : c.members) after += m.witnessed;
        CHECK(after - before == events.size() * c.members.size());
    }
    community_audit(c);
}

TEST_CASE("community norms converge across members") {
    CommunityConfig cfg = small_config(4, 404);
    CommunityState c = new_community(cfg);
    community_run(c, 500);
    community_audit(c);
    for (const Form& f : {kHe, kShe, kThey}) {
        for (std::size_t i = 0; i < c.members.size(); ++i) {
            const double pi = c.hier.predictive(c.members[i].general).mass_of(f);
            for (std::size_t j = i + 1; j < c.members.size(); ++j) {
                const double pj = c.hier.predictive(c.members[j].general).mass_of(f);
                CHECK(std::abs(pi - pj) <= 0.15);
            }
        }
    }
}

TEST_CASE("production reads only the speaker's own chain") {
    CommunityState c = new_community(small_config(4, 7));
    community_run(c, 30);
    const Predictive before = referent_predictive(c.hier, c.members[1], 2);
    // Perturb every other member's non-franchise state.
    for (MemberId m = 0; m < 4; ++m) {
        if (m == 1) continue;
        c.members[m].witnessed += 1000;
        c.members[m].topics.seat(c.members[m].topics.counts().empty() ? 0 : 0);
    }
    const Predictive after = referent_predictive(c.hier, c.members[1], 2);
    REQUIRE(before.explicit_mass.size() == after.explicit_mass.size());
    for (std::size_t i = 0; i < before.explicit_mass.size(); ++i)
        CHECK(before.explicit_mass[i].second == after.explicit_mass[i].second);
}

TEST_CASE("a declaration rewrites every member in line with their profile") {
    CommunityConfig cfg;
    SpeakerProfile instant = SpeakerProfile::flexible();
    instant.retention = 0.0;
    SpeakerProfile stone = SpeakerProfile::rigid();
    stone.retention = 1.0;
    stone.declaration_weight = 0.0;
    for (int i = 0; i < 3; ++i) cfg.members.push_back({"m" + std::to_string(i), instant});
    cfg.members.push_back({"m3", stone});
    CommunityState c = new_community(cfg);
    community_run(c, 40);

    const Predictive stone_before = referent_predictive(c.hier, c.members[3], 0);
    community_declare(c, 0, {{kZe, 1.0}});

    for (MemberId m = 0; m < 3; ++m) {
        const Predictive p = referent_predictive(c.hier, c.members[m], 0);
        for (const auto& [f, mass] : p.explicit_mass)
            if (!(f == kZe)) CHECK(p.mass_of(kZe) > mass);
    }
    // The fully rigid member's view of the declarer is untouched...
    const Predictive stone_after = referent_predictive(c.hier, c.members[3], 0);
    // ...up to the shared community restaurant, which other members moved.
    // Their own referent restaurant must not have gained ze evidence:
    if (c.members[3].per_referent.count(0))
        CHECK(c.hier.at(c.members[3].per_referent.at(0)).dish_count(kZe) == 0);
    CHECK(stone_after.mass_of(kZe) >= stone_before.mass_of(kZe)); // franchise only
    community_audit(c);
}

TEST_CASE("declarations reach unknown members as errors") {
    CommunityState c = new_community(small_config(2));
    CHECK_THROWS_AS(community_declare(c, 5, {{kZe, 1.0}}), ValidationError);
}

TEST_CASE("a declared novel form becomes explicit everywhere after one broadcast") {
    CommunityConfig cfg = small_config(5, 31);
    cfg.schedule.speaker_weights = {1, 0, 0, 0, 0};
    cfg.schedule.referent_weights = {1, 0, 0, 0, 0};
    cfg.schedule.refs_per_discourse_fixed = 3;
    CommunityState c = new_community(cfg);
    community_run(c, 10);
    community_declare(c, 0, {{kZe, 1.0}});

    // Run until the first broadcast reference that uses the form.
    bool seen = false;
    for (int step = 0; step < 10 && !seen; ++step)
        for (const auto& e : community_step(c))
            if (e.form == kZe) seen = true;
    REQUIRE(seen);
    for (const auto& m : c.members) {
        const Predictive p = referent_predictive(c.hier, m, 0);
        CHECK(p.mass_of(kZe) > 0.0);
    }
}

TEST_CASE("run handles edge schedules") {
    CommunityState c = new_community(small_config(3, 5));
    const std::string before = snapshot_to_string(c);
    community_run(c, 0);
    CHECK(c.log.empty());
    CHECK(snapshot_to_string(c) == before);

    CHECK_THROWS_AS(community_run(c, 2, {{5, 0, {{kZe, 1.0}}}}), ValidationError);

    // An intervention at step 0 lands before any production.
    community_run(c, 2, {{0, 0, {{kZe, 1.0}}}});
    REQUIRE(!c.log.empty());
    CHECK(std::holds_alternative<DeclarationEvent>(c.log.front()));
    CHECK(log_entry_timestamp(c.log.front()) == 0);
}

TEST_CASE("replaying a log reconstructs the exact state") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        CommunityConfig cfg = small_config(4, seed);
        CommunityState live = new_community(cfg);
        community_run(live, 60, {{10, 2, {{kZe, 1.0}}}, {30, 1, {{kThey, 1.0}}}});
        community_audit(live);

        CommunityState fresh = new_community(cfg);
        community_replay(fresh, live.log);
        community_audit(fresh);
        CHECK(snapshot_to_string(fresh) == snapshot_to_string(live));
    }
}

TEST_CASE("frozen members keep their state while others adapt") {
    CommunityConfig cfg = small_config(3, 77);
    cfg.frozen_members = {1};
    CommunityState c = new_community(cfg);
    community_run(c, 30);
    CHECK(c.members[1].per_referent.empty());
    CHECK(c.hier.at(c.members[1].general).total_customers == 0);
    CHECK(c.members[1].witnessed > 0); // they still witness
    community_audit(c);

    // Replay fidelity holds with frozen members too.
    CommunityState fresh = new_community(cfg);
    community_replay(fresh, c.log);
    CHECK(snapshot_to_string(fresh) == snapshot_to_string(c));
}

TEST_CASE("self_weight multiplies the evidence taken from self-reference") {
    CommunityConfig cfg = small_config(3, 21);
    cfg.schedule.speaker_weights = {1, 0, 0};
    cfg.schedule.referent_weights = {1, 0, 0};
    cfg.schedule.refs_per_discourse_fixed = 1;
    cfg.self_weight = 2;
    CommunityState c = new_community(cfg);
    const auto events = community_step(c);
    REQUIRE(events.size() == 1);
    for (MemberId m = 1; m < 3; ++m)
        CHECK(c.hier.at(c.members[m].per_referent.at(0)).dish_count(events[0].form) == 2);
    // The producer's own evidence is still the single production seat.
    CHECK(c.hier.at(c.members[0].per_referent.at(0)).dish_count(events[0].form) == 1);
    community_audit(c);

    // Replay fidelity holds under the multiplier too.
    CommunityState fresh = new_community(cfg);
    community_replay(fresh, c.log);
    CHECK(snapshot_to_string(fresh) == snapshot_to_string(c));
}

TEST_CASE("after a declaration, flexible members misgender no more than rigid ones") {
    // Mixed community; the referent declares; the declared-mass gap between
    // the flexible and rigid halves is checked across 100 seeded replicates.
    int good = 0;
    const int replicates = 100;
    for (int rep = 0; rep < replicates; ++rep) {
        CommunityConfig cfg;
        for (int i = 0; i < 3; ++i)
            cfg.members.push_back({"f" + std::to_string(i), SpeakerProfile::flexible()});
        for (int i = 3; i < 6; ++i)
            cfg.members.push_back({"r" + std::to_string(i), SpeakerProfile::rigid()});
        cfg.schedule.referent_weights = {1, 0, 0, 0, 0, 0};
        cfg.seed = 5000 + static_cast<std::uint64_t>(rep);
        CommunityState c = new_community(cfg);
        community_run(c, 30);
        community_declare(c, 0, {{kZe, 1.0}});
        community_run(c, 100);

        auto misgendering = [&](MemberId m) {
            return 1.0 - referent_predictive(c.hier, c.members[m], 0).mass_of(kZe);
        };
        double flex = 0.0, rigid = 0.0;
        for (MemberId m = 1; m < 3; ++m) flex += misgendering(m);
        for (MemberId m = 3; m < 6; ++m) rigid += misgendering(m);
        if (flex / 2 <= rigid / 3) ++good;
    }
    CHECK(good >= 90);
}
