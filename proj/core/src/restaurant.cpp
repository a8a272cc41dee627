#include "prosim/restaurant.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "prosim/error.hpp"

namespace prosim {

std::uint32_t Restaurant::dish_count(const Form& f) const {
    auto it = tables.find(f);
    if (it == tables.end()) return 0;
    std::uint32_t n = 0;
    for (const auto& t : it->second) n += t.occupancy;
    return n;
}

std::uint32_t Restaurant::table_count() const {
    std::uint32_t n = 0;
    for (const auto& [f, ts] : tables) n += static_cast<std::uint32_t>(ts.size());
    return n;
}

double Predictive::mass_of(const Form& f) const {
    for (const auto& [form, p] : explicit_mass)
        if (form == f) return p;
    return 0.0;
}

double Predictive::explicit_total() const {
    double s = 0.0;
    for (const auto& [form, p] : explicit_mass) s += p;
    return s;
}

Hierarchy::Hierarchy(LexiconConfig base) : base_(std::move(base)) {
    base_.validate_and_normalize();
}

RestaurantId Hierarchy::add_restaurant(double alpha, std::optional<RestaurantId> parent) {
    if (!(alpha > 0.0)) throw ValidationError("restaurant concentration must be > 0");
    Restaurant r;
    r.id = static_cast<RestaurantId>(rests_.size());
    r.alpha = alpha;
    r.parent = parent;
    if (parent) {
        if (*parent >= rests_.size())
            throw ValidationError("restaurant parent id out of range");
        r.depth = rests_[*parent].depth + 1;
        if (r.depth > 3)
            throw ValidationError("hierarchy deeper than base -> community -> general -> referent");
    }
    rests_.push_back(std::move(r));
    return rests_.back().id;
}

const Restaurant& Hierarchy::at(RestaurantId id) const {
    if (id >= rests_.size()) throw ValidationError("restaurant id out of range");
    return rests_[id];
}

Restaurant& Hierarchy::mut(RestaurantId id) {
    if (id >= rests_.size()) throw ValidationError("restaurant id out of range");
    return rests_[id];
}

double Hierarchy::parent_mass(const Restaurant& r, const Form& f) const {
    return r.parent ? predictive_mass(*r.parent, f) : base_measure_score(f, base_);
}

double Hierarchy::predictive_mass(RestaurantId id, const Form& f) const {
    const Restaurant& r = at(id);
    const double up = parent_mass(r, f);
    const double denom = static_cast<double>(r.total_customers) + r.alpha;
    return (static_cast<double>(r.dish_count(f)) + r.alpha * up) / denom;
}

std::vector<Form> Hierarchy::support_of(RestaurantId id) const {
    std::set<Form> support;
    for (const auto& [f, w] : base_.seed_forms) support.insert(f);
    std::optional<RestaurantId> cur = id;
    while (cur) {
        const Restaurant& r = at(*cur);
        for (const auto& [f, ts] : r.tables) support.insert(f);
        cur = r.parent;
    }
    return {support.begin(), support.end()};
}

Predictive Hierarchy::predictive(RestaurantId id) const {
    const std::vector<Form> support = support_of(id);

    // Chain from root child down to id.
    std::vector<const Restaurant*> chain;
    std::optional<RestaurantId> cur = id;
    while (cur) {
        chain.push_back(&at(*cur));
        cur = chain.back()->parent;
    }
    std::reverse(chain.begin(), chain.end());

    Predictive out;
    out.explicit_mass.reserve(support.size());
    double base_total = 0.0;
    for (const Form& f : support) {
        double p = base_measure_score(f, base_);
        base_total += p;
        for (const Restaurant* r : chain) {
            const double denom = static_cast<double>(r->total_customers) + r->alpha;
            p = (static_cast<double>(r->dish_count(f)) + r->alpha * p) / denom;
        }
        out.explicit_mass.emplace_back(f, p);
    }
    double res = 1.0 - base_total;
    for (const Restaurant* r : chain) {
        const double denom = static_cast<double>(r->total_customers) + r->alpha;
        res = (r->alpha * res) / denom;
    }
    out.residual = res;
    return out;
}

Form Hierarchy::sample_form(RestaurantId id, Rng& rng) const {
    const Predictive pred = predictive(id);
    const double u = rng.next_double();
    double cum = 0.0;
    for (const auto& [f, p] : pred.explicit_mass) {
        cum += p;
        if (u < cum) return f;
    }
    if (pred.residual > 0.0) {
        std::vector<Form> exclude;
        exclude.reserve(pred.explicit_mass.size());
        for (const auto& [f, p] : pred.explicit_mass) exclude.push_back(f);
        return sample_novel_form(base_, rng, exclude);
    }
    // Numerical tail: fall back to the largest explicit mass.
    if (pred.explicit_mass.empty())
        throw ConsistencyError("sample_form: empty predictive");
    const auto* best = &pred.explicit_mass.front();
    for (const auto& e : pred.explicit_mass)
        if (e.second > best->second) best = &e;
    return best->first;
}

void Hierarchy::seat_existing(RestaurantId id, const Form& f, TableId table, bool franchise) {
    Restaurant& r = mut(id);
    auto it = r.tables.find(f);
    if (it == r.tables.end()) throw ConsistencyError("seat_existing: no tables serve this dish");
    for (auto& t : it->second) {
        if (t.id == table) {
            ++t.occupancy;
            ++r.total_customers;
            if (!franchise) ++r.direct_counts[f];
            return;
        }
    }
    throw ConsistencyError("seat_existing: table not found");
}

TableId Hierarchy::open_table(RestaurantId id, const Form& f, TableId parent_table,
                              bool franchise) {
    Restaurant& r = mut(id);
    if (r.parent && parent_table == kNoTable)
        throw ConsistencyError("open_table: non-root table needs a parent table");
    if (!r.parent && parent_table != kNoTable)
        throw ConsistencyError("open_table: root table cannot have a parent table");
    Table t;
    t.id = r.next_table++;
    t.occupancy = 1;
    t.parent_table = parent_table;
    r.tables[f].push_back(t);
    ++r.total_customers;
    if (!franchise) ++r.direct_counts[f];
    return t.id;
}

void Hierarchy::unseat_existing(RestaurantId id, const Form& f, TableId table, bool franchise) {
    Restaurant& r = mut(id);
    auto it = r.tables.find(f);
    if (it == r.tables.end()) throw ConsistencyError("unseat_existing: no tables serve this dish");
    for (auto& t : it->second) {
        if (t.id == table) {
            if (t.occupancy < 2)
                throw ConsistencyError("unseat_existing: would empty the table");
            --t.occupancy;
            --r.total_customers;
            if (!franchise) {
                auto dit = r.direct_counts.find(f);
                if (dit == r.direct_counts.end() || dit->second == 0)
                    throw ConsistencyError("unseat_existing: direct count underflow");
                if (--dit->second == 0) r.direct_counts.erase(dit);
            }
            return;
        }
    }
    throw ConsistencyError("unseat_existing: table not found");
}

void Hierarchy::close_table(RestaurantId id, const Form& f, TableId table, bool franchise) {
    Restaurant& r = mut(id);
    auto it = r.tables.find(f);
    if (it == r.tables.end()) throw ConsistencyError("close_table: no tables serve this dish");
    for (auto vit = it->second.begin(); vit != it->second.end(); ++vit) {
        if (vit->id == table) {
            if (vit->occupancy != 1)
                throw ConsistencyError("close_table: table is not a singleton");
            it->second.erase(vit);
            if (it->second.empty()) r.tables.erase(it);
            --r.total_customers;
            if (!franchise) {
                auto dit = r.direct_counts.find(f);
                if (dit == r.direct_counts.end() || dit->second == 0)
                    throw ConsistencyError("close_table: direct count underflow");
                if (--dit->second == 0) r.direct_counts.erase(dit);
            }
            return;
        }
    }
    throw ConsistencyError("close_table: table not found");
}

void Hierarchy::seat_customer(RestaurantId id, const Form& f, Rng& rng, bool franchise,
                              SeatRecord& rec) {
    Restaurant& r = mut(id);
    const double denom = static_cast<double>(r.total_customers) + r.alpha;
    const double new_weight = r.alpha * parent_mass(r, f);

    double existing_total = 0.0;
    auto it = r.tables.find(f);
    if (it != r.tables.end())
        for (const auto& t : it->second) existing_total += t.occupancy;

    const double total = existing_total + new_weight;
    // One uniform per level, whatever the table layout.
    const double u = rng.next_double();
    bool open_new = true;
    if (total > 0.0 && it != r.tables.end()) {
        const double scaled = u * total;
        double cum = 0.0;
        for (auto& t : it->second) {
            cum += t.occupancy;
            if (scaled < cum) {
                rec.log_prob += std::log(static_cast<double>(t.occupancy) / denom);
                ++t.occupancy;
                ++r.total_customers;
                if (!franchise) ++r.direct_counts[f];
                rec.chain.emplace_back(id, t.id);
                open_new = false;
                break;
            }
        }
    }

    if (open_new) {
        rec.log_prob += std::log(r.alpha / denom);
        TableId parent_table = kNoTable;
        if (r.parent) {
            seat_customer(*r.parent, f, rng, /*franchise=*/true, rec);
            parent_table = rec.chain.back().second;
        } else {
            rec.log_prob += std::log(base_measure_score(f, base_));
        }
        const TableId tid = open_table(id, f, parent_table, franchise);
        rec.chain.emplace_back(id, tid);
    }
}

SeatRecord Hierarchy::seat(RestaurantId id, const Form& f, Rng& rng) {
    SeatRecord rec;
    rec.restaurant = id;
    rec.form = f;
    rec.log_prob = 0.0;
    // seat_customer appends each joined table after any parent recursion, so
    // the entry for `id` lands last; reversing leaves the chain leaf-first.
    seat_customer(id, f, rng, /*franchise=*/false, rec);
    rec.table = rec.chain.back().second;
    std::reverse(rec.chain.begin(), rec.chain.end());
    return rec;
}

TableId Hierarchy::seat_pseudo_customer(RestaurantId id, const Form& f, bool franchise) {
    Restaurant& r = mut(id);
    auto it = r.tables.find(f);
    if (it != r.tables.end() && !it->second.empty()) {
        // Largest table, ties to the oldest.
        Table* best = &it->second.front();
        for (auto& t : it->second)
            if (t.occupancy > best->occupancy) best = &t;
        const TableId tid = best->id;
        seat_existing(id, f, tid, franchise);
        return tid;
    }
    TableId parent_table = kNoTable;
    if (r.parent) parent_table = seat_pseudo_customer(*r.parent, f, /*franchise=*/true);
    return open_table(id, f, parent_table, franchise);
}

void Hierarchy::seat_pseudo(RestaurantId id, const Form& f) {
    seat_pseudo_customer(id, f, /*franchise=*/false);
}

double Hierarchy::unseat_one(RestaurantId id, const Form& f, TableId table, bool franchise) {
    Restaurant& r = mut(id);
    auto it = r.tables.find(f);
    if (it == r.tables.end())
        throw ConsistencyError("unseat: no tables serve " + f.spec() + " (stale record?)");
    for (auto vit = it->second.begin(); vit != it->second.end(); ++vit) {
        if (vit->id != table) continue;
        if (vit->occupancy == 1) {
            const TableId up = vit->parent_table;
            close_table(id, f, table, franchise);
            // Conditional probability of this seating given the remaining
            // customers (as-if-seated-last): a fresh table here, recursively.
            const double denom = static_cast<double>(r.total_customers) + r.alpha;
            double lp = std::log(r.alpha / denom);
            if (r.parent)
                lp += unseat_one(*r.parent, f, up, /*franchise=*/true);
            else
                lp += std::log(base_measure_score(f, base_));
            return lp;
        }
        unseat_existing(id, f, table, franchise);
        const double denom = static_cast<double>(r.total_customers) + r.alpha;
        std::uint32_t occ_rest = 0;
        for (const auto& t : it->second)
            if (t.id == table) occ_rest = t.occupancy;
        return std::log(static_cast<double>(occ_rest) / denom);
    }
    throw ConsistencyError("unseat: table " + std::to_string(table) + " not found for " +
                           f.spec() + " (stale or duplicate record)");
}

void Hierarchy::unseat(const SeatRecord& rec) {
    unseat_one(rec.restaurant, rec.form, rec.table, /*franchise=*/false);
}

double Hierarchy::unseat_logged(const SeatRecord& rec) {
    return unseat_one(rec.restaurant, rec.form, rec.table, /*franchise=*/false);
}

void Hierarchy::remove_direct_customers(RestaurantId id, const Form& f, TableId table,
                                        std::uint32_t count) {
    for (std::uint32_t i = 0; i < count; ++i) unseat_one(id, f, table, /*franchise=*/false);
}

double Hierarchy::residual_mass(RestaurantId id, const std::vector<Form>& support) const {
    double res = 1.0;
    for (const Form& f : support) res -= base_measure_score(f, base_);
    std::optional<RestaurantId> cur = id;
    std::vector<const Restaurant*> chain;
    while (cur) {
        chain.push_back(&at(*cur));
        cur = chain.back()->parent;
    }
    for (auto rit = chain.rbegin(); rit != chain.rend(); ++rit) {
        const Restaurant* r = *rit;
        const double denom = static_cast<double>(r->total_customers) + r->alpha;
        res = (r->alpha * res) / denom;
    }
    return res;
}

Form Hierarchy::draw(RestaurantId id, Rng& rng) {
    Form f = sample_form(id, rng);
    seat(id, f, rng);
    return f;
}

double Hierarchy::arrangement_log_joint() const {
    double lj = 0.0;
    for (const auto& r : rests_) {
        const double t = r.table_count();
        lj += t * std::log(r.alpha);
        for (std::uint64_t i = 0; i < r.total_customers; ++i)
            lj -= std::log(r.alpha + static_cast<double>(i));
        for (const auto& [f, ts] : r.tables) {
            for (const auto& tb : ts) lj += std::lgamma(static_cast<double>(tb.occupancy));
            if (!r.parent) lj += static_cast<double>(ts.size()) * std::log(base_measure_score(f, base_));
        }
    }
    return lj;
}

void Hierarchy::audit() const {
    // child table tallies per (parent id, dish)
    std::map<std::pair<RestaurantId, Form>, std::uint32_t> franchise_tally;

    for (const auto& r : rests_) {
        std::uint64_t total = 0;
        for (const auto& [f, ts] : r.tables) {
            if (ts.empty())
                throw ConsistencyError("audit: empty dish bucket for " + f.spec());
            for (const auto& t : ts) {
                if (t.occupancy == 0)
                    throw ConsistencyError("audit: zero-occupancy table for " + f.spec());
                if (r.parent && t.parent_table == kNoTable)
                    throw ConsistencyError("audit: missing parent link for " + f.spec());
                if (!r.parent && t.parent_table != kNoTable)
                    throw ConsistencyError("audit: root table with parent link");
                if (r.parent) {
                    const Restaurant& p = at(*r.parent);
                    auto pit = p.tables.find(f);
                    bool found = false;
                    if (pit != p.tables.end())
                        for (const auto& pt : pit->second)
                            if (pt.id == t.parent_table) found = true;
                    if (!found)
                        throw ConsistencyError("audit: dangling parent table link for " + f.spec());
                    ++franchise_tally[{*r.parent, f}];
                }
                total += t.occupancy;
            }
        }
        if (total != r.total_customers)
            throw ConsistencyError("audit: cached customer total mismatch");
        if (r.depth > 3) throw ConsistencyError("audit: restaurant depth exceeds 3");
        if (r.parent && *r.parent >= r.id)
            throw ConsistencyError("audit: parent does not precede child");
    }

    // Franchise consistency: every customer is either direct or accounted
    // for by exactly one child table.
    for (const auto& r : rests_) {
        std::set<Form> dishes;
        for (const auto& [f, ts] : r.tables) dishes.insert(f);
        for (const auto& [f, c] : r.direct_counts) dishes.insert(f);
        for (const Form& f : dishes) {
            std::uint32_t direct = 0;
            if (auto dit = r.direct_counts.find(f); dit != r.direct_counts.end())
                direct = dit->second;
            std::uint32_t franchise = 0;
            if (auto fit = franchise_tally.find({r.id, f}); fit != franchise_tally.end())
                franchise = fit->second;
            if (r.dish_count(f) != direct + franchise)
                throw ConsistencyError("audit: franchise count mismatch for " + f.spec() +
                                       " at restaurant " + std::to_string(r.id));
        }
    }
}

bool Hierarchy::structurally_equal(const Hierarchy& other) const {
    if (rests_.size() != other.rests_.size()) return false;
    for (size_t i = 0; i < rests_.size(); ++i) {
        const Restaurant& a = rests_[i];
        const Restaurant& b = other.rests_[i];
        if (a.id != b.id || a.alpha != b.alpha || a.parent != b.parent || a.depth != b.depth ||
            a.total_customers != b.total_customers || a.direct_counts != b.direct_counts)
            return false;
        if (a.tables.size() != b.tables.size()) return false;
        auto bit = b.tables.begin();
        for (auto ait = a.tables.begin(); ait != a.tables.end(); ++ait, ++bit) {
            if (!(ait->first == bit->first)) return false;
            if (ait->second.size() != bit->second.size()) return false;
            for (size_t k = 0; k < ait->second.size(); ++k) {
                const Table& ta = ait->second[k];
                const Table& tb = bit->second[k];
                if (ta.id != tb.id || ta.occupancy != tb.occupancy ||
                    ta.parent_table != tb.parent_table)
                    return false;
            }
        }
    }
    return true;
}

void Hierarchy::restore_restaurants(std::vector<Restaurant> rests) {
    rests_ = std::move(rests);
    audit();
}

} // namespace prosim
