#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "prosim/forms.hpp"
#include "prosim/lexicon.hpp"
#include "prosim/rng.hpp"

namespace prosim {

using RestaurantId = std::uint32_t;
using TableId = std::uint32_t;

inline constexpr TableId kNoTable = 0;

// One table: dish identity lives in the enclosing per-dish map key.
// parent_table is the table at the parent restaurant where this table's
// franchise customer sits (kNoTable for tables of a root restaurant).
struct Table {
    TableId id = kNoTable;
    std::uint32_t occupancy = 0;
    TableId parent_table = kNoTable;
};

// CRP state for one prior in the hierarchy. Tables are grouped by dish and
// kept in creation order within a dish; dish iteration is lexicographic over
// the canonical form spec, which fixes sampling scan order and snapshot
// order at once.
struct Restaurant {
    RestaurantId id = 0;
    double alpha = 1.0;
    std::optional<RestaurantId> parent; // nullopt = parent is the base measure
    std::uint32_t depth = 1;            // root child = 1; at most 3 here
    std::map<Form, std::vector<Table>> tables;
    // Customers that entered at this restaurant (as opposed to franchise
    // customers sent up by child tables). Keyed by dish; zero entries erased.
    std::map<Form, std::uint32_t> direct_counts;
    std::uint64_t total_customers = 0;
    TableId next_table = 1;

    std::uint32_t dish_count(const Form& f) const;
    std::uint32_t table_count() const;
};

// Posterior predictive over forms: explicit masses for the known support
// (dishes along the ancestor chain plus seed forms, sorted by spec) plus one
// residual lump for all never-seen forms. Explicit + residual = 1.
struct Predictive {
    std::vector<std::pair<Form, double>> explicit_mass;
    double residual = 0.0;

    double mass_of(const Form& f) const;
    double explicit_total() const;
};

// Returned by seat(); identifies the leaf customer for exact reversal.
// `chain` lists the joined tables from the leaf upward (the chain extends
// past the leaf only while new tables were opened). log_prob is the
// conditional probability of this seating given the state before it.
struct SeatRecord {
    RestaurantId restaurant = 0;
    Form form = Form::no_pronoun();
    TableId table = kNoTable;
    double log_prob = 0.0;
    std::vector<std::pair<RestaurantId, TableId>> chain;
};

// A Chinese Restaurant Franchise: an arena of restaurants whose parent links
// form a forest rooted at the base measure. Single logical owner; mutating
// calls require exclusive access, const queries may run concurrently between
// mutations. Copyable by value.
class Hierarchy {
public:
    explicit Hierarchy(LexiconConfig base);

    RestaurantId add_restaurant(double alpha, std::optional<RestaurantId> parent);

    const LexiconConfig& base() const { return base_; }
    const Restaurant& at(RestaurantId id) const;
    std::size_t restaurant_count() const { return rests_.size(); }

    // P_r(f) = (count_r(f) + alpha_r * P_parent(f)) / (n_r + alpha_r),
    // recursing to the base measure.
    double predictive_mass(RestaurantId id, const Form& f) const;

    // Full predictive with residual; explicit masses + residual = 1 (+-1e-9).
    Predictive predictive(RestaurantId id) const;

    // Samples a form from predictive(id) without mutating anything. Novel
    // forms come from the string model, rejected against the explicit support.
    Form sample_form(RestaurantId id, Rng& rng) const;

    // Seats one customer eating f: joins an existing table with probability
    // proportional to its occupancy, or opens a new table with probability
    // proportional to alpha * P_parent(f); a new table recursively seats a
    // franchise customer at the parent.
    SeatRecord seat(RestaurantId id, const Form& f, Rng& rng);

    // Deterministic variant used for declaration pseudo-observations: joins
    // the largest existing table serving f (ties to the oldest), else opens
    // a new table. Consumes no randomness.
    void seat_pseudo(RestaurantId id, const Form& f);

    // Exact inverse of seat(): removes the leaf customer; tables reaching
    // zero are deleted and their franchise customer is unseated upstream.
    void unseat(const SeatRecord& rec);

    // unseat() that also returns the conditional log probability of the
    // removed seating given the remaining customers (valid by
    // exchangeability); Gibbs sweeps use it for incremental joint tracking.
    double unseat_logged(const SeatRecord& rec);

    // Residual (never-seen) mass of predictive(id) for a given explicit
    // support, which must cover every dish on the chain.
    double residual_mass(RestaurantId id, const std::vector<Form>& support) const;

    // Removes `count` customers that entered at `id` from one table
    // (declaration decay); cascades like unseat.
    void remove_direct_customers(RestaurantId id, const Form& f, TableId table,
                                 std::uint32_t count);

    // sample_form + seat with a single stream.
    Form draw(RestaurantId id, Rng& rng);

    // Log joint probability of the current seating arrangement under the
    // sequential CRF construction (order-free by exchangeability):
    //   sum_r [ T_r log a_r - sum_{i<n_r} log(a_r+i) + sum_t log (occ_t-1)! ]
    //   + sum over root tables of log G0(dish).
    double arrangement_log_joint() const;

    // Verifies every structural invariant: positive occupancies, cached
    // totals, table parent links, and per-dish franchise consistency
    // (count_r(f) == direct_r(f) + number of child tables serving f).
    // Throws ConsistencyError with a description on the first violation.
    void audit() const;

    // Logical-state equality; ignores the next_table counters.
    bool structurally_equal(const Hierarchy& other) const;

    // --- low-level hooks (exact enumeration, snapshot restore) ---

    // Joins an existing table; franchise=true marks a customer sent by a
    // child table rather than a direct observation.
    void seat_existing(RestaurantId id, const Form& f, TableId table, bool franchise);
    void unseat_existing(RestaurantId id, const Form& f, TableId table, bool franchise);
    // Creates a size-1 table. The caller has already seated the matching
    // franchise customer at the parent and passes the table it joined.
    TableId open_table(RestaurantId id, const Form& f, TableId parent_table, bool franchise);
    // Removes a size-1 table without touching the parent.
    void close_table(RestaurantId id, const Form& f, TableId table, bool franchise);

    // Snapshot restore: replaces all restaurants wholesale, then audits.
    void restore_restaurants(std::vector<Restaurant> rests);
    const std::vector<Restaurant>& restaurants() const { return rests_; }

private:
    Restaurant& mut(RestaurantId id);
    double parent_mass(const Restaurant& r, const Form& f) const;
    double unseat_one(RestaurantId id, const Form& f, TableId table, bool franchise);
    void seat_customer(RestaurantId id, const Form& f, Rng& rng, bool franchise,
                       SeatRecord& rec);
    TableId seat_pseudo_customer(RestaurantId id, const Form& f, bool franchise);
    std::vector<Form> support_of(RestaurantId id) const;

    LexiconConfig base_;
    std::vector<Restaurant> rests_;
};

} // namespace prosim
