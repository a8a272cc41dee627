#include "prosim/speaker.hpp"

#include <cmath>

#include "prosim/error.hpp"

namespace prosim {

void SpeakerProfile::validate() const {
    if (!(alpha_general > 0.0)) throw ValidationError("profile: alpha_general must be > 0");
    if (!(alpha_referent > 0.0)) throw ValidationError("profile: alpha_referent must be > 0");
    if (!(alpha_topic > 0.0)) throw ValidationError("profile: alpha_topic must be > 0");
    if (!(stickiness >= 0.0 && stickiness <= 1.0))
        throw ValidationError("profile: stickiness must be in [0,1]");
    if (!(retention >= 0.0 && retention <= 1.0))
        throw ValidationError("profile: retention must be in [0,1]");
    if (!(declaration_weight >= 0.0))
        throw ValidationError("profile: declaration_weight must be >= 0");
}

SpeakerProfile SpeakerProfile::rigid() {
    SpeakerProfile p;
    p.retention = 0.9;
    p.declaration_weight = 1.0;
    return p;
}

SpeakerProfile SpeakerProfile::flexible() {
    SpeakerProfile p;
    p.retention = 0.1;
    p.declaration_weight = 5.0;
    return p;
}

SpeakerProfile SpeakerProfile::preset(std::string_view name) {
    if (name == "rigid") return rigid();
    if (name == "flexible") return flexible();
    if (name == "default") return SpeakerProfile{};
    throw ValidationError("unknown profile preset \"" + std::string(name) + "\"");
}

std::uint32_t TopicCrp::sample(Rng& rng) const {
    std::uint64_t total = 0;
    for (auto c : counts_) total += c;
    const double u = rng.next_double() * (static_cast<double>(total) + alpha_);
    double cum = 0.0;
    for (std::uint32_t i = 0; i < counts_.size(); ++i) {
        cum += counts_[i];
        if (u < cum) return i;
    }
    return static_cast<std::uint32_t>(counts_.size()); // new label
}

void TopicCrp::seat(std::uint32_t label) {
    if (label == counts_.size())
        counts_.push_back(1);
    else if (label < counts_.size())
        ++counts_[label];
    else
        throw ConsistencyError("topic label out of range");
}

std::uint32_t TopicCrp::sample_and_seat(Rng& rng) {
    const std::uint32_t label = sample(rng);
    seat(label);
    return label;
}

SpeakerState make_speaker(Hierarchy& h, MemberId id, SpeakerProfile profile,
                          std::optional<RestaurantId> parent) {
    profile.validate();
    SpeakerState s;
    s.id = id;
    s.profile = profile;
    s.general = h.add_restaurant(profile.alpha_general, parent);
    s.topics = TopicCrp(profile.alpha_topic);
    return s;
}

RestaurantId referent_restaurant(Hierarchy& h, SpeakerState& s, MemberId referent) {
    auto it = s.per_referent.find(referent);
    if (it != s.per_referent.end()) return it->second;
    const RestaurantId rid = h.add_restaurant(s.profile.alpha_referent, s.general);
    s.per_referent.emplace(referent, rid);
    return rid;
}

DiscourseContext begin_discourse(SpeakerState& s, std::uint64_t discourse_id, Rng& topic_rng,
                                 bool seat_topic) {
    DiscourseContext ctx;
    ctx.discourse_id = discourse_id;
    ctx.topic = seat_topic ? s.topics.sample_and_seat(topic_rng) : s.topics.sample(topic_rng);
    return ctx;
}

ReferenceEvent produce_reference(Hierarchy& h, SpeakerState& s,
                                 const std::vector<std::string>& names, MemberId referent,
                                 DiscourseContext& ctx, GrammaticalSlot slot, Timestamp ts,
                                 Rng& decision_rng, Rng& seat_rng, ProduceMode mode) {
    std::optional<Form> chosen;
    auto last = ctx.last_form.find(referent);
    if (last != ctx.last_form.end() && decision_rng.next_double() < s.profile.stickiness)
        chosen = last->second; // stability: reuse, no new seating

    if (!chosen) {
        // The referent restaurant is created lazily, and only when the draw
        // is seated; probe draws on an absent restaurant read P, which an
        // empty P^t would forward to anyway.
        RestaurantId rr;
        if (mode == ProduceMode::seat) {
            rr = referent_restaurant(h, s, referent);
        } else {
            auto it = s.per_referent.find(referent);
            rr = it != s.per_referent.end() ? it->second : s.general;
        }
        chosen = h.sample_form(rr, decision_rng);
        if (mode == ProduceMode::seat) h.seat(rr, *chosen, seat_rng);
    }

    // realize() needs the display name only for no-pronoun forms; it raises
    // the configuration error when one is required but missing.
    const std::string referent_name = referent < names.size() ? names[referent] : "";

    ReferenceEvent e;
    e.timestamp = ts;
    e.speaker = s.id;
    e.referent = referent;
    e.discourse = ctx.discourse_id;
    e.interaction = ctx.interaction_index;
    e.slot = slot;
    e.form = *chosen;
    e.surface = realize(*chosen, slot, referent_name);

    ctx.last_form.insert_or_assign(referent, *chosen);
    ++ctx.interaction_index;
    return e;
}

void observe(Hierarchy& h, SpeakerState& s, const ReferenceEvent& e, Rng& seat_rng,
             bool seat_form, std::uint32_t seat_repeats) {
    if (seat_form) {
        const RestaurantId target = s.profile.observe_general_only
                                        ? s.general
                                        : referent_restaurant(h, s, e.referent);
        for (std::uint32_t i = 0; i < seat_repeats; ++i) h.seat(target, e.form, seat_rng);
    }
    ++s.witnessed;
}

DeclarationOutcome receive_declaration(Hierarchy& h, SpeakerState& s, MemberId referent,
                                       const std::vector<std::pair<Form, double>>& declared,
                                       std::optional<double> rho_override,
                                       std::optional<double> weight_override) {
    if (declared.empty()) return DeclarationOutcome::empty_noop;
    double weight_total = 0.0;
    for (const auto& [f, w] : declared) {
        if (!(w > 0.0))
            throw ValidationError("declaration weight for " + f.spec() + " must be > 0");
        weight_total += w;
    }

    const double rho = rho_override.value_or(s.profile.retention);
    const double w = weight_override.value_or(s.profile.declaration_weight);
    const RestaurantId rr = referent_restaurant(h, s, referent);

    // Decay: per table, remove ceil((1-rho) * occupancy) customers. The
    // table list is snapshotted first since cascades mutate it.
    if (rho < 1.0) {
        struct Removal {
            Form form;
            TableId table;
            std::uint32_t count;
        };
        std::vector<Removal> removals;
        for (const auto& [f, ts] : h.at(rr).tables) {
            for (const auto& t : ts) {
                const double exact = (1.0 - rho) * static_cast<double>(t.occupancy);
                auto k = static_cast<std::uint32_t>(std::ceil(exact - 1e-9));
                if (k > t.occupancy) k = t.occupancy;
                if (k > 0) removals.push_back({f, t.id, k});
            }
        }
        for (const auto& rm : removals) h.remove_direct_customers(rr, rm.form, rm.table, rm.count);
    }

    // Declared pseudo-observations, in declared order.
    for (const auto& [f, wi] : declared) {
        auto count = static_cast<std::uint64_t>(std::llround(w * (wi / weight_total)));
        if (count == 0 && w > 0.0) count = 1;
        for (std::uint64_t i = 0; i < count; ++i) h.seat_pseudo(rr, f);
    }
    return DeclarationOutcome::applied;
}

Predictive referent_predictive(const Hierarchy& h, const SpeakerState& s, MemberId referent) {
    auto it = s.per_referent.find(referent);
    return h.predictive(it != s.per_referent.end() ? it->second : s.general);
}

} // namespace prosim
