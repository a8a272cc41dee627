#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "prosim/lexicon.hpp"
#include "prosim/restaurant.hpp"
#include "prosim/speaker.hpp"

namespace prosim {

// Interaction schedule. Weights are per member (empty = uniform); discourse
// length is geometric with the given mean unless fixed. Each topic label
// picks a slot distribution from slot_weights, cycling when there are more
// topics than entries.
struct ScheduleConfig {
    std::vector<double> speaker_weights;
    std::vector<double> referent_weights;
    double refs_per_discourse_mean = 3.0;
    std::optional<std::uint32_t> refs_per_discourse_fixed;
    std::vector<std::array<double, 5>> slot_weights = {{{0.35, 0.25, 0.15, 0.10, 0.15}}};
};

struct MemberSpec {
    std::string name;
    SpeakerProfile profile;
};

struct CommunityConfig {
    std::vector<MemberSpec> members;
    double community_alpha = 1.0;
    LexiconConfig lexicon = LexiconConfig::defaults();
    ScheduleConfig schedule;
    std::uint64_t seed = 1;
    // Evidence multiplicity for self-referential (s == t) events. Default 1;
    // other values are an experimental hook, not a modeling claim.
    std::uint32_t self_weight = 1;
    // Stationary members: produce from fixed priors, ignore broadcasts and
    // third-party declarations, accept their own. Used by scenario harnesses
    // that need a non-drifting usage source.
    std::vector<MemberId> frozen_members;

    void validate() const;
    bool is_frozen(MemberId m) const;
};

struct DeclarationEvent {
    Timestamp timestamp = 0;
    MemberId declarer = 0; // also the referent: self-declaration only
    std::vector<std::pair<Form, double>> declared;
};

using LogEntry = std::variant<ReferenceEvent, DeclarationEvent>;

struct Intervention {
    std::uint64_t step = 0; // applied before this step of the run
    MemberId declarer = 0;
    std::vector<std::pair<Form, double>> declared;
};

// Everything a community run owns. The hierarchy has four levels:
// base measure -> community restaurant -> member P -> member P^t.
// All randomness is re-derived from (cfg.seed, purpose, counters), so the
// struct carries no generator state: clock/steps/discourses are the "rng
// position".
struct CommunityState {
    CommunityConfig cfg;
    Hierarchy hier;
    RestaurantId community = 0;
    std::vector<SpeakerState> members;
    std::vector<std::string> names;
    std::uint64_t clock = 0;
    std::uint64_t steps_taken = 0;
    std::uint64_t discourses_started = 0;
    std::vector<LogEntry> log;
};

CommunityState new_community(CommunityConfig cfg);

// One transaction: sample speaker/referent/discourse, produce the scheduled
// references, broadcast each event to every member (producer included,
// witnessed exactly once) in member-id order. Returns the produced events.
std::vector<ReferenceEvent> community_step(CommunityState& c);

// Self-declaration broadcast: logs a DeclarationEvent and applies
// receive_declaration to every member with their own (rho, w); the declarer
// fully resets their own self-referent restaurant (authoritative).
void community_declare(CommunityState& c, MemberId declarer,
                       const std::vector<std::pair<Form, double>>& declared);

// Runs `steps` steps, injecting interventions before their scheduled step
// (step == steps applies after the last one). Returns the full log.
const std::vector<LogEntry>& community_run(CommunityState& c, std::uint64_t steps,
                                           const std::vector<Intervention>& interventions = {});

// Reconstructs member states by feeding a finished run's log through a
// freshly constructed community with the same config. Exact: ends
// structurally identical to the state that produced the log.
void community_replay(CommunityState& fresh, const std::vector<LogEntry>& log);

// Full structural audit (hierarchy, parent wiring, log monotonicity).
void community_audit(const CommunityState& c);

Timestamp log_entry_timestamp(const LogEntry& e);

} // namespace prosim
