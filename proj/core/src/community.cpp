#include "prosim/community.hpp"

#include <algorithm>
#include <cmath>

#include "prosim/error.hpp"

namespace prosim {

namespace {

std::size_t weighted_choice(const std::vector<double>& weights, std::size_t n, Rng& rng) {
    if (weights.empty()) return static_cast<std::size_t>(rng.next_below(n));
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = rng.next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return i;
    }
    return weights.size() - 1;
}

GrammaticalSlot sample_slot(const std::array<double, 5>& weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = rng.next_double() * total;
    double cum = 0.0;
    for (int i = 0; i < 5; ++i) {
        cum += weights[i];
        if (u < cum) return static_cast<GrammaticalSlot>(i);
    }
    return GrammaticalSlot::reflexive;
}

void check_weights(const std::vector<double>& w, std::size_t n, const char* what) {
    if (w.empty()) return;
    if (w.size() != n)
        throw ValidationError(std::string("schedule: ") + what + " must have one entry per member");
    double total = 0.0;
    for (double x : w) {
        if (x < 0.0) throw ValidationError(std::string("schedule: negative ") + what);
        total += x;
    }
    if (!(total > 0.0)) throw ValidationError(std::string("schedule: ") + what + " sum to zero");
}

} // namespace

void CommunityConfig::validate() const {
    if (members.size() < 2) throw ValidationError("community: at least 2 members required");
    if (!(community_alpha > 0.0)) throw ValidationError("community: community_alpha must be > 0");
    for (const auto& m : members) {
        if (m.name.empty()) throw ValidationError("community: member display name is empty");
        m.profile.validate();
    }
    LexiconConfig lex = lexicon;
    lex.validate_and_normalize();
    check_weights(schedule.speaker_weights, members.size(), "speaker_weights");
    check_weights(schedule.referent_weights, members.size(), "referent_weights");
    if (!schedule.refs_per_discourse_fixed && !(schedule.refs_per_discourse_mean >= 1.0))
        throw ValidationError("schedule: refs_per_discourse_mean must be >= 1");
    if (schedule.refs_per_discourse_fixed && *schedule.refs_per_discourse_fixed == 0)
        throw ValidationError("schedule: refs_per_discourse_fixed must be >= 1");
    if (schedule.slot_weights.empty())
        throw ValidationError("schedule: slot_weights must have at least one entry");
    for (const auto& sw : schedule.slot_weights) {
        double total = 0.0;
        for (double x : sw) {
            if (x < 0.0) throw ValidationError("schedule: negative slot weight");
            total += x;
        }
        if (!(total > 0.0)) throw ValidationError("schedule: slot weights sum to zero");
    }
    if (self_weight == 0) throw ValidationError("community: self_weight must be >= 1");
    for (MemberId m : frozen_members)
        if (m >= members.size()) throw ValidationError("community: frozen member id out of range");
}

bool CommunityConfig::is_frozen(MemberId m) const {
    return std::find(frozen_members.begin(), frozen_members.end(), m) != frozen_members.end();
}

CommunityState new_community(CommunityConfig cfg) {
    cfg.validate();
    cfg.lexicon.validate_and_normalize();
    Hierarchy hier(cfg.lexicon);
    CommunityState c{std::move(cfg), std::move(hier), 0, {}, {}, 0, 0, 0, {}};
    c.community = c.hier.add_restaurant(c.cfg.community_alpha, std::nullopt);
    c.members.reserve(c.cfg.members.size());
    c.names.reserve(c.cfg.members.size());
    for (std::size_t i = 0; i < c.cfg.members.size(); ++i) {
        c.members.push_back(make_speaker(c.hier, static_cast<MemberId>(i),
                                         c.cfg.members[i].profile, c.community));
        c.names.push_back(c.cfg.members[i].name);
    }
    return c;
}

namespace {

// Broadcast one produced event: every member witnesses it exactly once; all
// but the producer seat its form (the producer's evidence was handled at
// production time). Applied in member-id order.
void broadcast(CommunityState& c, const ReferenceEvent& e) {
    const std::uint32_t repeats = (e.speaker == e.referent) ? c.cfg.self_weight : 1;
    for (MemberId m = 0; m < c.members.size(); ++m) {
        Rng seat_rng = derive_rng(c.cfg.seed, StreamPurpose::seating, e.timestamp, m);
        const bool seat_form = (m != e.speaker) && !c.cfg.is_frozen(m);
        observe(c.hier, c.members[m], e, seat_rng, seat_form, repeats);
    }
}

} // namespace

std::vector<ReferenceEvent> community_step(CommunityState& c) {
    if (c.members.size() < 2) throw ValidationError("community_step: need at least 2 members");
    Rng sched = derive_rng(c.cfg.seed, StreamPurpose::schedule, c.steps_taken);

    const auto s = static_cast<MemberId>(
        weighted_choice(c.cfg.schedule.speaker_weights, c.members.size(), sched));
    const auto t = static_cast<MemberId>(
        weighted_choice(c.cfg.schedule.referent_weights, c.members.size(), sched));
    const std::uint64_t refs =
        c.cfg.schedule.refs_per_discourse_fixed
            ? *c.cfg.schedule.refs_per_discourse_fixed
            : sched.next_geometric(1.0 / c.cfg.schedule.refs_per_discourse_mean);

    const std::uint64_t discourse_id = c.discourses_started++;
    Rng topic_rng = derive_rng(c.cfg.seed, StreamPurpose::topic, discourse_id);
    const bool frozen_speaker = c.cfg.is_frozen(s);
    DiscourseContext ctx =
        begin_discourse(c.members[s], discourse_id, topic_rng, /*seat_topic=*/!frozen_speaker);
    const auto& slot_dist =
        c.cfg.schedule.slot_weights[ctx.topic % c.cfg.schedule.slot_weights.size()];

    std::vector<ReferenceEvent> events;
    events.reserve(refs);
    for (std::uint64_t i = 0; i < refs; ++i) {
        const GrammaticalSlot slot = sample_slot(slot_dist, sched);
        const Timestamp ts = c.clock++;
        Rng decision = derive_rng(c.cfg.seed, StreamPurpose::decision, ts);
        Rng seat_rng = derive_rng(c.cfg.seed, StreamPurpose::seating, ts, s);
        const ProduceMode mode = frozen_speaker ? ProduceMode::probe : ProduceMode::seat;
        ReferenceEvent e = produce_reference(c.hier, c.members[s], c.names, t, ctx, slot, ts,
                                             decision, seat_rng, mode);
        broadcast(c, e);
        c.log.emplace_back(e);
        events.push_back(std::move(e));
    }
    ++c.steps_taken;
    return events;
}

void community_declare(CommunityState& c, MemberId declarer,
                       const std::vector<std::pair<Form, double>>& declared) {
    if (declarer >= c.members.size())
        throw ValidationError("declare: unknown member " + std::to_string(declarer));
    DeclarationEvent ev;
    ev.timestamp = c.clock++;
    ev.declarer = declarer;
    ev.declared = declared;
    c.log.emplace_back(ev);

    for (MemberId m = 0; m < c.members.size(); ++m) {
        if (m == declarer) {
            // Authoritative about themselves: full reset onto the declared
            // forms even under a rigid own profile.
            const double w = std::max(c.members[m].profile.declaration_weight, 1.0);
            receive_declaration(c.hier, c.members[m], declarer, declared, 0.0, w);
        } else if (!c.cfg.is_frozen(m)) {
            receive_declaration(c.hier, c.members[m], declarer, declared);
        }
    }
}

const std::vector<LogEntry>& community_run(CommunityState& c, std::uint64_t steps,
                                           const std::vector<Intervention>& interventions) {
    for (const auto& iv : interventions) {
        if (iv.step > steps)
            throw ValidationError("intervention scheduled at step " + std::to_string(iv.step) +
                                  " but the run has only " + std::to_string(steps) + " steps");
        if (iv.declarer >= c.members.size())
            throw ValidationError("intervention declarer out of range");
    }
    for (std::uint64_t k = 0; k <= steps; ++k) {
        for (const auto& iv : interventions)
            if (iv.step == k) community_declare(c, iv.declarer, iv.declared);
        if (k < steps) community_step(c);
    }
    return c.log;
}

Timestamp log_entry_timestamp(const LogEntry& e) {
    return std::visit([](const auto& x) { return x.timestamp; }, e);
}

void community_replay(CommunityState& fresh, const std::vector<LogEntry>& log) {
    if (fresh.clock != 0 || !fresh.log.empty())
        throw ValidationError("replay target must be a freshly constructed community");

    // One open discourse context per speaker; discourses never interleave.
    std::vector<std::optional<DiscourseContext>> ctxs(fresh.members.size());

    for (const auto& entry : log) {
        if (log_entry_timestamp(entry) != fresh.clock)
            throw ValidationError("replay: log timestamps are not contiguous from zero");

        if (const auto* d = std::get_if<DeclarationEvent>(&entry)) {
            community_declare(fresh, d->declarer, d->declared);
            continue;
        }
        const auto& e = std::get<ReferenceEvent>(entry);
        if (e.speaker >= fresh.members.size() || e.referent >= fresh.members.size())
            throw ValidationError("replay: event references unknown member");
        SpeakerState& s = fresh.members[e.speaker];
        const bool frozen_speaker = fresh.cfg.is_frozen(e.speaker);

        auto& ctx = ctxs[e.speaker];
        if (!ctx || ctx->discourse_id != e.discourse) {
            if (e.discourse != fresh.discourses_started)
                throw ValidationError("replay: discourse ids are not contiguous");
            ++fresh.discourses_started;
            Rng topic_rng = derive_rng(fresh.cfg.seed, StreamPurpose::topic, e.discourse);
            ctx = begin_discourse(s, e.discourse, topic_rng, /*seat_topic=*/!frozen_speaker);
        }

        // Reproduce the producer-side seating decision: the sticky coin is
        // the first uniform of the event's decision stream.
        Rng decision = derive_rng(fresh.cfg.seed, StreamPurpose::decision, e.timestamp);
        bool sticky = false;
        auto last = ctx->last_form.find(e.referent);
        if (last != ctx->last_form.end() && decision.next_double() < s.profile.stickiness) {
            sticky = true;
            if (!(last->second == e.form))
                throw ValidationError("replay: sticky repeat does not match the logged form");
        }
        if (!sticky && !frozen_speaker) {
            Rng seat_rng = derive_rng(fresh.cfg.seed, StreamPurpose::seating, e.timestamp,
                                      e.speaker);
            fresh.hier.seat(referent_restaurant(fresh.hier, s, e.referent), e.form, seat_rng);
        }
        ctx->last_form.insert_or_assign(e.referent, e.form);
        ++ctx->interaction_index;

        fresh.clock = e.timestamp + 1;
        broadcast(fresh, e);
        fresh.log.emplace_back(e);
    }
    // Every step opens exactly one discourse.
    fresh.steps_taken = fresh.discourses_started;
}

void community_audit(const CommunityState& c) {
    c.hier.audit();
    for (const auto& m : c.members) {
        if (c.hier.at(m.general).parent != std::optional<RestaurantId>(c.community))
            throw ConsistencyError("audit: member general not parented by community restaurant");
        for (const auto& [t, rid] : m.per_referent) {
            if (c.hier.at(rid).parent != std::optional<RestaurantId>(m.general))
                throw ConsistencyError("audit: referent restaurant not parented by member general");
            if (t >= c.members.size())
                throw ConsistencyError("audit: referent id out of range");
        }
    }
    Timestamp prev = 0;
    bool first = true;
    for (const auto& entry : c.log) {
        const Timestamp ts = log_entry_timestamp(entry);
        if (!first && ts <= prev) throw ConsistencyError("audit: log timestamps not increasing");
        prev = ts;
        first = false;
    }
}

} // namespace prosim
