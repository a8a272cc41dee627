#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prosim/forms.hpp"
#include "prosim/restaurant.hpp"
#include "prosim/rng.hpp"

namespace prosim {

using MemberId = std::uint32_t;
using Timestamp = std::uint64_t;

// Per-speaker parameters. retention/declaration_weight set how far a
// declaration rewinds prior evidence (rho) and how much weight the declared
// forms get (w); small rho + large w is the flexible speaker, the opposite
// the rigid one.
struct SpeakerProfile {
    double alpha_general = 1.0;
    double alpha_referent = 0.5;
    double stickiness = 0.8;         // kappa: within-discourse repeat probability
    double retention = 0.5;          // rho: fraction of evidence kept at revision
    double declaration_weight = 2.0; // w: pseudo-observations per declared form
    double alpha_topic = 1.0;
    bool observe_general_only = false; // update P only, not P^t (single-speaker figure)

    void validate() const;

    static SpeakerProfile rigid();
    static SpeakerProfile flexible();
    static SpeakerProfile preset(std::string_view name); // "rigid"|"flexible"|"default"
};

// CRP over anonymous topic labels; a new table mints the next label.
class TopicCrp {
public:
    explicit TopicCrp(double alpha) : alpha_(alpha) {}

    std::uint32_t sample(Rng& rng) const;
    void seat(std::uint32_t label);
    std::uint32_t sample_and_seat(Rng& rng);

    const std::vector<std::uint32_t>& counts() const { return counts_; }
    double alpha() const { return alpha_; }
    void restore(std::vector<std::uint32_t> counts) { counts_ = std::move(counts); }

private:
    double alpha_;
    std::vector<std::uint32_t> counts_;
};

// One produced reference; the unit of the event log.
struct ReferenceEvent {
    Timestamp timestamp = 0;
    MemberId speaker = 0;
    MemberId referent = 0;
    std::uint64_t discourse = 0;
    std::uint32_t interaction = 0;
    GrammaticalSlot slot = GrammaticalSlot::subject;
    Form form = Form::no_pronoun();
    std::string surface;
};

// Transient per-discourse state; never outlives one step.
struct DiscourseContext {
    std::uint64_t discourse_id = 0;
    std::uint32_t topic = 0;
    std::map<MemberId, Form> last_form; // self-loop memory
    std::uint32_t interaction_index = 0;
};

struct SpeakerState {
    MemberId id = 0;
    SpeakerProfile profile;
    RestaurantId general = 0;                    // P
    std::map<MemberId, RestaurantId> per_referent; // P^t, children of general
    TopicCrp topics{1.0};
    std::uint64_t witnessed = 0; // accepted observe() calls
};

// Creates the speaker's general restaurant under `parent` (the community
// restaurant, or the base measure when absent).
SpeakerState make_speaker(Hierarchy& h, MemberId id, SpeakerProfile profile,
                          std::optional<RestaurantId> parent);

// Lazily creates the per-referent restaurant as an empty child of P.
RestaurantId referent_restaurant(Hierarchy& h, SpeakerState& s, MemberId referent);

// Samples a topic (seating it unless seat_topic=false) and opens a fresh
// discourse: empty self-loop memory, interaction index 0.
DiscourseContext begin_discourse(SpeakerState& s, std::uint64_t discourse_id, Rng& topic_rng,
                                 bool seat_topic = true);

enum class ProduceMode {
    seat,  // fresh draws are seated (the speaker's own observation of the event)
    probe, // sample only; the speaker's restaurants stay untouched
};

// One reference to `referent`: with probability kappa repeat the discourse's
// previous form for them (no reseating), otherwise draw from the referent
// restaurant's predictive and seat. decision_rng carries the sticky coin and
// the form draw; seat_rng carries table choices (kept separate so replay can
// reproduce seatings without redoing the draw).
ReferenceEvent produce_reference(Hierarchy& h, SpeakerState& s,
                                 const std::vector<std::string>& names, MemberId referent,
                                 DiscourseContext& ctx, GrammaticalSlot slot, Timestamp ts,
                                 Rng& decision_rng, Rng& seat_rng,
                                 ProduceMode mode = ProduceMode::seat);

// Witnessing an event: seats its form in the observer's restaurant for the
// event's referent (or in P directly under observe_general_only) and bumps
// witnessed. seat_form=false records witnessing without evidence; the
// community uses it for the producer, whose seat already happened at
// production time. seat_repeats > 1 multiplies the evidence (self_weight).
void observe(Hierarchy& h, SpeakerState& s, const ReferenceEvent& e, Rng& seat_rng,
             bool seat_form = true, std::uint32_t seat_repeats = 1);

enum class DeclarationOutcome { applied, empty_noop };

// Revision between interactions: per table of the referent restaurant,
// removes ceil((1-rho) * occupancy) customers, then seats round(w * weight_i)
// pseudo-customers per declared form (at least 1 when weight_i > 0 and
// w > 0). Deterministic: pseudo-customers join the largest existing table
// for their form or open a single new one.
DeclarationOutcome receive_declaration(Hierarchy& h, SpeakerState& s, MemberId referent,
                                       const std::vector<std::pair<Form, double>>& declared,
                                       std::optional<double> rho_override = std::nullopt,
                                       std::optional<double> weight_override = std::nullopt);

// Pure query: predictive of P^t (falls back to P when the referent is
// unknown; an empty P^t gives the same answer).
Predictive referent_predictive(const Hierarchy& h, const SpeakerState& s, MemberId referent);

} // namespace prosim
