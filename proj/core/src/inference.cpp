#include "prosim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <json.hpp>

#include "prosim/error.hpp"
#include "prosim/snapshot.hpp"

namespace prosim {

using nlohmann::json;
using nlohmann::ordered_json;

std::uint32_t FitConfig::effective_burn_in() const {
    return burn_in ? *burn_in : sweeps / 5;
}

void FitConfig::validate() const {
    if (sweeps > 0 && effective_burn_in() >= sweeps)
        throw ValidationError("fit: burn_in must be < sweeps");
    if (thin < 1) throw ValidationError("fit: thin must be >= 1");
    if (!(alpha_community > 0.0 && alpha_general > 0.0 && alpha_referent > 0.0))
        throw ValidationError("fit: concentrations must be > 0");
    LexiconConfig lex = lexicon;
    lex.validate_and_normalize();
}

namespace {

struct Universe {
    std::vector<MemberId> members;                                  // sorted
    std::vector<ReferenceEvent> events;                             // log order
    std::vector<std::pair<MemberId, MemberId>> pairs;               // sorted, observed
};

Universe build_universe(const std::vector<LogEntry>& log, const FitConfig& cfg) {
    Universe u;
    std::set<MemberId> ids;
    std::set<std::pair<MemberId, MemberId>> pairs;
    bool first = true;
    Timestamp prev = 0;
    for (const auto& entry : log) {
        const Timestamp ts = log_entry_timestamp(entry);
        if (!first && ts <= prev)
            throw ValidationError("fit: log timestamps are not strictly increasing");
        prev = ts;
        first = false;
        if (const auto* e = std::get_if<ReferenceEvent>(&entry)) {
            ids.insert(e->speaker);
            ids.insert(e->referent);
            pairs.insert({e->speaker, e->referent});
            u.events.push_back(*e);
        }
        // Declaration entries are revision dynamics, not usage observations;
        // the exchangeable CRF fit skips them.
    }
    if (cfg.members) {
        std::set<MemberId> declared(cfg.members->begin(), cfg.members->end());
        for (MemberId id : ids)
            if (!declared.count(id))
                throw ValidationError("fit: log references member " + std::to_string(id) +
                                      " outside the configured universe");
        ids = declared;
    }
    u.members.assign(ids.begin(), ids.end());
    u.pairs.assign(pairs.begin(), pairs.end());
    return u;
}

struct FitHierarchy {
    Hierarchy hier;
    std::optional<RestaurantId> community;
    std::map<MemberId, RestaurantId> generals;
    std::map<std::pair<MemberId, MemberId>, RestaurantId> leaves;

    explicit FitHierarchy(const FitConfig& cfg) : hier(cfg.lexicon) {}
};

FitHierarchy build_hierarchy(const Universe& u, const FitConfig& cfg) {
    FitHierarchy fh(cfg);
    if (cfg.community_mode) fh.community = fh.hier.add_restaurant(cfg.alpha_community, std::nullopt);
    for (MemberId m : u.members)
        fh.generals[m] = fh.hier.add_restaurant(cfg.alpha_general, fh.community);
    for (const auto& p : u.pairs)
        fh.leaves[p] = cfg.referent_level
                           ? fh.hier.add_restaurant(cfg.alpha_referent, fh.generals.at(p.first))
                           : fh.generals.at(p.first);
    return fh;
}

std::vector<Form> build_support(const Universe& u, const FitConfig& cfg) {
    std::set<Form> forms;
    for (const auto& [f, w] : cfg.lexicon.seed_forms) forms.insert(f);
    for (const auto& e : u.events) forms.insert(e.form);
    return {forms.begin(), forms.end()};
}

PairTable table_for(const Hierarchy& h, RestaurantId rid, const std::vector<Form>& support,
                    MemberId s, MemberId t) {
    PairTable pt;
    pt.speaker = s;
    pt.referent = t;
    pt.probs.reserve(support.size());
    for (const Form& f : support) pt.probs.push_back(h.predictive_mass(rid, f));
    pt.residual = h.residual_mass(rid, support);
    return pt;
}

// Enumerates every way one customer eating f can be seated, calling cont
// with the chain probability factor and the table joined at `rid`; the state
// is restored after each continuation returns.
void for_each_seating(Hierarchy& h, RestaurantId rid, const Form& f, bool franchise, double w,
                      const std::function<void(double, TableId)>& cont) {
    const Restaurant& r = h.at(rid);
    const double denom = static_cast<double>(r.total_customers) + r.alpha;

    std::vector<std::pair<TableId, std::uint32_t>> existing;
    if (auto it = r.tables.find(f); it != r.tables.end())
        for (const auto& t : it->second) existing.emplace_back(t.id, t.occupancy);

    for (const auto& [tid, occ] : existing) {
        h.seat_existing(rid, f, tid, franchise);
        cont(w * static_cast<double>(occ) / denom, tid);
        h.unseat_existing(rid, f, tid, franchise);
    }

    const double w_new = w * r.alpha / denom;
    if (const auto parent = r.parent) {
        for_each_seating(h, *parent, f, /*franchise=*/true, w_new,
                         [&](double w2, TableId parent_tid) {
                             const TableId tid = h.open_table(rid, f, parent_tid, franchise);
                             cont(w2, tid);
                             h.close_table(rid, f, tid, franchise);
                         });
    } else {
        const double b = base_measure_score(f, h.base());
        if (b > 0.0) {
            const TableId tid = h.open_table(rid, f, kNoTable, franchise);
            cont(w_new * b, tid);
            h.close_table(rid, f, tid, franchise);
        }
    }
}

} // namespace

FitResult fit_gibbs(const std::vector<LogEntry>& log, const FitConfig& cfg) {
    cfg.validate();
    Universe u = build_universe(log, cfg);
    FitHierarchy fh = build_hierarchy(u, cfg);

    FitResult out;
    out.lexicon = fh.hier.base(); // normalized copy
    out.community_mode = cfg.community_mode;
    out.support = build_support(u, cfg);
    out.members = u.members;
    for (const Form& f : out.support) {
        out.base_probs.push_back(base_measure_score(f, fh.hier.base()));
        out.base_residual -= out.base_probs.back();
    }
    out.base_residual += 1.0;

    Rng rng(derive_seed(cfg.seed, StreamPurpose::decision, 0x9169b5));

    // Initialization: sequential seating in log order.
    std::vector<SeatRecord> records;
    records.reserve(u.events.size());
    double log_joint = 0.0;
    for (const auto& e : u.events) {
        const RestaurantId rid = fh.leaves.at({e.speaker, e.referent});
        records.push_back(fh.hier.seat(rid, e.form, rng));
        log_joint += records.back().log_prob;
    }

    // Sample accumulators.
    std::map<std::pair<MemberId, MemberId>, PairTable> pair_acc;
    std::map<MemberId, PairTable> general_acc;
    PairTable community_acc;
    community_acc.probs.assign(out.support.size(), 0.0);
    double total_tables_acc = 0.0;
    std::map<std::pair<MemberId, MemberId>, double> leaf_tables_acc;
    std::uint32_t samples = 0;

    auto take_sample = [&]() {
        for (const auto& [p, rid] : fh.leaves) {
            PairTable pt = table_for(fh.hier, rid, out.support, p.first, p.second);
            auto& acc = pair_acc[p];
            if (acc.probs.empty()) {
                acc = std::move(pt);
            } else {
                for (std::size_t i = 0; i < acc.probs.size(); ++i) acc.probs[i] += pt.probs[i];
                acc.residual += pt.residual;
            }
            leaf_tables_acc[p] += fh.hier.at(rid).table_count();
        }
        for (const auto& [m, rid] : fh.generals) {
            PairTable pt = table_for(fh.hier, rid, out.support, m, m);
            auto& acc = general_acc[m];
            if (acc.probs.empty()) {
                acc = std::move(pt);
            } else {
                for (std::size_t i = 0; i < acc.probs.size(); ++i) acc.probs[i] += pt.probs[i];
                acc.residual += pt.residual;
            }
        }
        if (fh.community) {
            PairTable pt = table_for(fh.hier, *fh.community, out.support, 0, 0);
            for (std::size_t i = 0; i < pt.probs.size(); ++i) community_acc.probs[i] += pt.probs[i];
            community_acc.residual += pt.residual;
        }
        double total_tables = 0.0;
        for (const auto& r : fh.hier.restaurants()) total_tables += r.table_count();
        total_tables_acc += total_tables;
        ++samples;
    };

    const std::uint32_t burn = cfg.sweeps > 0 ? cfg.effective_burn_in() : 0;
    if (cfg.sweeps == 0 || u.events.empty()) {
        take_sample(); // the initialization arrangement is the posterior draw
    }
    for (std::uint32_t sweep = 0; sweep < cfg.sweeps && !u.events.empty(); ++sweep) {
        for (std::size_t i = 0; i < records.size(); ++i) {
            log_joint -= fh.hier.unseat_logged(records[i]);
            const auto& e = u.events[i];
            records[i] = fh.hier.seat(fh.leaves.at({e.speaker, e.referent}), e.form, rng);
            log_joint += records[i].log_prob;
        }
        out.log_joint_trace.push_back(log_joint);
        if (!std::isfinite(log_joint))
            throw ConsistencyError("fit: log joint became non-finite during sweeps");
        if (sweep >= burn && (sweep - burn) % cfg.thin == 0) take_sample();
    }

    if (samples == 0) take_sample();

    const double inv = 1.0 / static_cast<double>(samples);
    for (auto& [p, acc] : pair_acc) {
        for (double& x : acc.probs) x *= inv;
        acc.residual *= inv;
        out.pairs.push_back(acc);
    }
    for (auto& [m, acc] : general_acc) {
        for (double& x : acc.probs) x *= inv;
        acc.residual *= inv;
        out.generals.push_back(acc);
    }
    if (fh.community) {
        for (double& x : community_acc.probs) x *= inv;
        community_acc.residual *= inv;
        out.community = std::move(community_acc);
    }
    out.avg_total_tables = total_tables_acc * inv;
    for (auto& [p, v] : leaf_tables_acc) out.avg_leaf_tables[p] = v * inv;
    out.samples = samples;
    return out;
}

const PairTable* FitResult::find_pair(MemberId s, MemberId t) const {
    for (const auto& p : pairs)
        if (p.speaker == s && p.referent == t) return &p;
    return nullptr;
}

const PairTable* FitResult::find_general(MemberId s) const {
    for (const auto& g : generals)
        if (g.speaker == s) return &g;
    return nullptr;
}

Predictive predict_next(const FitResult& fit, MemberId speaker, MemberId referent) {
    Predictive out;
    const PairTable* pt = fit.find_pair(speaker, referent);
    if (!pt) pt = fit.find_general(speaker);
    if (!pt && fit.community) pt = &*fit.community;

    out.explicit_mass.reserve(fit.support.size());
    if (pt) {
        for (std::size_t i = 0; i < fit.support.size(); ++i)
            out.explicit_mass.emplace_back(fit.support[i], pt->probs[i]);
        out.residual = pt->residual;
    } else {
        for (std::size_t i = 0; i < fit.support.size(); ++i)
            out.explicit_mass.emplace_back(fit.support[i], fit.base_probs[i]);
        out.residual = fit.base_residual;
    }
    return out;
}

double heldout_log_loss(const FitResult& fit, const std::vector<LogEntry>& heldout) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& entry : heldout) {
        const auto* e = std::get_if<ReferenceEvent>(&entry);
        if (!e) continue;
        const Predictive pred = predict_next(fit, e->speaker, e->referent);
        double p = 0.0;
        bool in_support = false;
        for (const auto& [f, mass] : pred.explicit_mass) {
            if (f == e->form) {
                p = mass;
                in_support = true;
                break;
            }
        }
        if (!in_support) {
            // Residual times the base measure's conditional over unseen forms.
            const double base_f =
                fit.lexicon.novelty_mass * string_model_score(e->form, fit.lexicon);
            if (!(pred.residual > 0.0) || !(fit.base_residual > 0.0) || !(base_f > 0.0))
                throw ValidationError(
                    "held-out form " + e->form.spec() +
                    " has zero predictive probability (novelty mass 0?): loss is infinite");
            p = pred.residual * base_f / fit.base_residual;
        }
        if (!(p > 0.0))
            throw ValidationError("held-out form " + e->form.spec() +
                                  " has zero predictive probability: loss is infinite");
        total += -std::log(p);
        ++n;
    }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
}

namespace {

ExactStats enumerate_arrangements(const std::vector<LogEntry>& log, const FitConfig& shape,
                                  bool want_stats) {
    shape.validate();
    Universe u = build_universe(log, shape);
    if (u.events.size() > 8)
        throw RefusalError("exact enumeration refuses logs with more than 8 events (got " +
                           std::to_string(u.events.size()) + ")");
    FitHierarchy fh = build_hierarchy(u, shape);

    double total = 0.0;
    double tables_acc = 0.0;
    std::map<std::pair<MemberId, MemberId>, double> leaf_acc;

    std::function<void(std::size_t, double)> rec = [&](std::size_t idx, double w) {
        if (idx == u.events.size()) {
            total += w;
            if (want_stats) {
                double tables = 0.0;
                for (const auto& r : fh.hier.restaurants()) tables += r.table_count();
                tables_acc += w * tables;
                for (const auto& [p, rid] : fh.leaves)
                    leaf_acc[p] += w * fh.hier.at(rid).table_count();
            }
            return;
        }
        const auto& e = u.events[idx];
        for_each_seating(fh.hier, fh.leaves.at({e.speaker, e.referent}), e.form,
                         /*franchise=*/false, w,
                         [&](double w2, TableId) { rec(idx + 1, w2); });
    };
    rec(0, 1.0);

    ExactStats stats;
    stats.log_marginal = std::log(total);
    if (want_stats && total > 0.0) {
        stats.expected_total_tables = tables_acc / total;
        for (auto& [p, v] : leaf_acc) stats.expected_leaf_tables[p] = v / total;
    }
    return stats;
}

} // namespace

double exact_marginal(const std::vector<LogEntry>& log, const FitConfig& shape) {
    return enumerate_arrangements(log, shape, /*want_stats=*/false).log_marginal;
}

ExactStats exact_arrangement_stats(const std::vector<LogEntry>& log, const FitConfig& shape) {
    return enumerate_arrangements(log, shape, /*want_stats=*/true);
}

namespace {

ordered_json pair_table_to_json(const PairTable& pt) {
    ordered_json j;
    j["speaker"] = pt.speaker;
    j["referent"] = pt.referent;
    j["probs"] = pt.probs;
    j["residual"] = pt.residual;
    return j;
}

PairTable pair_table_from_json(const json& j) {
    PairTable pt;
    pt.speaker = j.at("speaker").get<MemberId>();
    pt.referent = j.at("referent").get<MemberId>();
    pt.probs = j.at("probs").get<std::vector<double>>();
    pt.residual = j.at("residual").get<double>();
    return pt;
}

} // namespace

std::string fit_result_to_string(const FitResult& fit) {
    ordered_json j;
    j["format"] = "prosim-fit";
    j["version"] = 1;
    j["community_mode"] = fit.community_mode;
    j["lexicon"] = lexicon_config_to_json(fit.lexicon);
    ordered_json support = ordered_json::array();
    for (const Form& f : fit.support) support.push_back(f.spec());
    j["support"] = std::move(support);
    j["members"] = fit.members;
    j["base"] = {{"probs", fit.base_probs}, {"residual", fit.base_residual}};
    if (fit.community)
        j["community"] = pair_table_to_json(*fit.community);
    else
        j["community"] = nullptr;
    ordered_json generals = ordered_json::array();
    for (const auto& g : fit.generals) generals.push_back(pair_table_to_json(g));
    j["generals"] = std::move(generals);
    ordered_json pairs = ordered_json::array();
    for (const auto& p : fit.pairs) pairs.push_back(pair_table_to_json(p));
    j["pairs"] = std::move(pairs);
    j["samples"] = fit.samples;
    j["avg_total_tables"] = fit.avg_total_tables;
    ordered_json leaf = ordered_json::array();
    for (const auto& [p, v] : fit.avg_leaf_tables) leaf.push_back({p.first, p.second, v});
    j["avg_leaf_tables"] = std::move(leaf);
    j["log_joint_trace"] = fit.log_joint_trace;
    return j.dump(2) + "\n";
}

FitResult fit_result_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("fit document parse failed: ") + e.what());
    }
    if (!j.contains("format") || j.at("format") != "prosim-fit")
        throw IoError("not a prosim fit document");
    if (j.at("version").get<int>() != 1)
        throw IoError("unsupported fit document version " +
                      std::to_string(j.at("version").get<int>()));
    FitResult fit;
    fit.community_mode = j.at("community_mode").get<bool>();
    fit.lexicon = lexicon_config_from_json(j.at("lexicon"));
    for (const auto& s : j.at("support"))
        fit.support.push_back(parse_form_spec(s.get<std::string>()));
    fit.members = j.at("members").get<std::vector<MemberId>>();
    fit.base_probs = j.at("base").at("probs").get<std::vector<double>>();
    fit.base_residual = j.at("base").at("residual").get<double>();
    if (!j.at("community").is_null()) fit.community = pair_table_from_json(j.at("community"));
    for (const auto& g : j.at("generals")) fit.generals.push_back(pair_table_from_json(g));
    for (const auto& p : j.at("pairs")) fit.pairs.push_back(pair_table_from_json(p));
    fit.samples = j.at("samples").get<std::uint32_t>();
    fit.avg_total_tables = j.at("avg_total_tables").get<double>();
    for (const auto& row : j.at("avg_leaf_tables"))
        fit.avg_leaf_tables[{row.at(0).get<MemberId>(), row.at(1).get<MemberId>()}] =
            row.at(2).get<double>();
    fit.log_joint_trace = j.at("log_joint_trace").get<std::vector<double>>();
    return fit;
}

FitConfig fit_config_from_json(const json& j) {
    FitConfig cfg;
    if (j.contains("sweeps")) cfg.sweeps = j.at("sweeps").get<std::uint32_t>();
    if (j.contains("burn_in") && !j.at("burn_in").is_null())
        cfg.burn_in = j.at("burn_in").get<std::uint32_t>();
    if (j.contains("thin")) cfg.thin = j.at("thin").get<std::uint32_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("community_mode")) cfg.community_mode = j.at("community_mode").get<bool>();
    if (j.contains("referent_level")) cfg.referent_level = j.at("referent_level").get<bool>();
    if (j.contains("alpha_community")) cfg.alpha_community = j.at("alpha_community").get<double>();
    if (j.contains("alpha_general")) cfg.alpha_general = j.at("alpha_general").get<double>();
    if (j.contains("alpha_referent")) cfg.alpha_referent = j.at("alpha_referent").get<double>();
    if (j.contains("lexicon")) cfg.lexicon = lexicon_config_from_json(j.at("lexicon"));
    if (j.contains("members")) cfg.members = j.at("members").get<std::vector<MemberId>>();
    cfg.validate();
    return cfg;
}

FitConfig fit_config_from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("fit config parse failed for " + path.string() + ": " + e.what());
    }
    return fit_config_from_json(j);
}

void fit_result_save(const FitResult& fit, const std::filesystem::path& path) {
    write_text_file(path, fit_result_to_string(fit));
}

FitResult fit_result_load(const std::filesystem::path& path) {
    return fit_result_from_string(read_text_file(path));
}

} // namespace prosim
