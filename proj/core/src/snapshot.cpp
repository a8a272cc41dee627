#include "prosim/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "prosim/error.hpp"

namespace prosim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw IoError("failed to format double");
    return std::string(buf, ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

ordered_json speaker_profile_to_json(const SpeakerProfile& p) {
    ordered_json j;
    j["alpha_general"] = p.alpha_general;
    j["alpha_referent"] = p.alpha_referent;
    j["stickiness"] = p.stickiness;
    j["retention"] = p.retention;
    j["declaration_weight"] = p.declaration_weight;
    j["alpha_topic"] = p.alpha_topic;
    j["observe_general_only"] = p.observe_general_only;
    return j;
}

SpeakerProfile speaker_profile_from_json(const json& j) {
    SpeakerProfile p;
    if (j.contains("preset")) p = SpeakerProfile::preset(j.at("preset").get<std::string>());
    if (j.contains("alpha_general")) p.alpha_general = j.at("alpha_general").get<double>();
    if (j.contains("alpha_referent")) p.alpha_referent = j.at("alpha_referent").get<double>();
    if (j.contains("stickiness")) p.stickiness = j.at("stickiness").get<double>();
    if (j.contains("retention")) p.retention = j.at("retention").get<double>();
    if (j.contains("declaration_weight"))
        p.declaration_weight = j.at("declaration_weight").get<double>();
    if (j.contains("alpha_topic")) p.alpha_topic = j.at("alpha_topic").get<double>();
    if (j.contains("observe_general_only"))
        p.observe_general_only = j.at("observe_general_only").get<bool>();
    p.validate();
    return p;
}

ordered_json lexicon_config_to_json(const LexiconConfig& cfg) {
    ordered_json j;
    ordered_json seeds = ordered_json::array();
    for (const auto& [f, w] : cfg.seed_forms) seeds.push_back({f.spec(), w});
    j["seeds"] = std::move(seeds);
    j["novelty_mass"] = cfg.novelty_mass;
    j["alphabet"] = cfg.char_alphabet;
    j["length_continue_prob"] = cfg.length_continue_prob;
    return j;
}

LexiconConfig lexicon_config_from_json(const json& j) {
    LexiconConfig cfg;
    if (j.contains("seeds")) {
        cfg.seed_forms.clear();
        for (const auto& e : j.at("seeds"))
            cfg.seed_forms.emplace_back(parse_form_spec(e.at(0).get<std::string>()),
                                        e.at(1).get<double>());
    } else {
        cfg = LexiconConfig::defaults();
    }
    if (j.contains("novelty_mass")) cfg.novelty_mass = j.at("novelty_mass").get<double>();
    if (j.contains("alphabet")) cfg.char_alphabet = j.at("alphabet").get<std::string>();
    if (j.contains("length_continue_prob"))
        cfg.length_continue_prob = j.at("length_continue_prob").get<double>();
    cfg.validate_and_normalize();
    return cfg;
}

ordered_json community_config_to_json(const CommunityConfig& cfg) {
    ordered_json j;
    ordered_json members = ordered_json::array();
    for (const auto& m : cfg.members) {
        ordered_json mj;
        mj["name"] = m.name;
        mj["profile"] = speaker_profile_to_json(m.profile);
        members.push_back(std::move(mj));
    }
    j["members"] = std::move(members);
    j["community_alpha"] = cfg.community_alpha;
    j["lexicon"] = lexicon_config_to_json(cfg.lexicon);
    ordered_json sched;
    sched["speaker_weights"] = cfg.schedule.speaker_weights;
    sched["referent_weights"] = cfg.schedule.referent_weights;
    sched["refs_per_discourse_mean"] = cfg.schedule.refs_per_discourse_mean;
    if (cfg.schedule.refs_per_discourse_fixed)
        sched["refs_per_discourse_fixed"] = *cfg.schedule.refs_per_discourse_fixed;
    else
        sched["refs_per_discourse_fixed"] = nullptr;
    ordered_json slots = ordered_json::array();
    for (const auto& sw : cfg.schedule.slot_weights)
        slots.push_back(std::vector<double>(sw.begin(), sw.end()));
    sched["slot_weights"] = std::move(slots);
    j["schedule"] = std::move(sched);
    j["seed"] = cfg.seed;
    j["self_weight"] = cfg.self_weight;
    j["frozen_members"] = cfg.frozen_members;
    return j;
}

CommunityConfig community_config_from_json(const json& j) {
    CommunityConfig cfg;
    if (!j.contains("members")) throw ValidationError("community config: missing \"members\"");
    for (const auto& mj : j.at("members")) {
        MemberSpec spec;
        spec.name = mj.contains("name")
                        ? mj.at("name").get<std::string>()
                        : "m" + std::to_string(cfg.members.size());
        if (mj.contains("profile")) spec.profile = speaker_profile_from_json(mj.at("profile"));
        cfg.members.push_back(std::move(spec));
    }
    if (j.contains("community_alpha")) cfg.community_alpha = j.at("community_alpha").get<double>();
    if (j.contains("lexicon")) cfg.lexicon = lexicon_config_from_json(j.at("lexicon"));
    if (j.contains("schedule")) {
        const auto& sj = j.at("schedule");
        if (sj.contains("speaker_weights"))
            cfg.schedule.speaker_weights = sj.at("speaker_weights").get<std::vector<double>>();
        if (sj.contains("referent_weights"))
            cfg.schedule.referent_weights = sj.at("referent_weights").get<std::vector<double>>();
        if (sj.contains("refs_per_discourse_mean"))
            cfg.schedule.refs_per_discourse_mean = sj.at("refs_per_discourse_mean").get<double>();
        if (sj.contains("refs_per_discourse_fixed") && !sj.at("refs_per_discourse_fixed").is_null())
            cfg.schedule.refs_per_discourse_fixed =
                sj.at("refs_per_discourse_fixed").get<std::uint32_t>();
        if (sj.contains("slot_weights")) {
            cfg.schedule.slot_weights.clear();
            for (const auto& row : sj.at("slot_weights")) {
                auto v = row.get<std::vector<double>>();
                if (v.size() != 5)
                    throw ValidationError("schedule: slot weight rows need 5 entries");
                std::array<double, 5> a;
                std::copy(v.begin(), v.end(), a.begin());
                cfg.schedule.slot_weights.push_back(a);
            }
        }
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("self_weight")) cfg.self_weight = j.at("self_weight").get<std::uint32_t>();
    if (j.contains("frozen_members"))
        cfg.frozen_members = j.at("frozen_members").get<std::vector<MemberId>>();
    cfg.validate();
    return cfg;
}

CommunityConfig community_config_from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("config parse failed for " + path.string() + ": " + e.what());
    }
    return community_config_from_json(j);
}

namespace {

ordered_json restaurant_to_json(const Restaurant& r) {
    ordered_json j;
    j["id"] = r.id;
    j["alpha"] = r.alpha;
    if (r.parent)
        j["parent"] = *r.parent;
    else
        j["parent"] = nullptr;
    j["depth"] = r.depth;
    j["next_table"] = r.next_table;
    ordered_json tables = ordered_json::array();
    for (const auto& [f, ts] : r.tables) {
        ordered_json rows = ordered_json::array();
        for (const auto& t : ts) rows.push_back({t.id, t.occupancy, t.parent_table});
        tables.push_back({f.spec(), std::move(rows)});
    }
    j["tables"] = std::move(tables);
    ordered_json direct = ordered_json::array();
    for (const auto& [f, n] : r.direct_counts) direct.push_back({f.spec(), n});
    j["direct"] = std::move(direct);
    return j;
}

Restaurant restaurant_from_json(const json& j) {
    Restaurant r;
    r.id = j.at("id").get<RestaurantId>();
    r.alpha = j.at("alpha").get<double>();
    if (!j.at("parent").is_null()) r.parent = j.at("parent").get<RestaurantId>();
    r.depth = j.at("depth").get<std::uint32_t>();
    r.next_table = j.at("next_table").get<TableId>();
    for (const auto& entry : j.at("tables")) {
        Form f = parse_form_spec(entry.at(0).get<std::string>());
        std::vector<Table> ts;
        for (const auto& row : entry.at(1)) {
            Table t;
            t.id = row.at(0).get<TableId>();
            t.occupancy = row.at(1).get<std::uint32_t>();
            t.parent_table = row.at(2).get<TableId>();
            r.total_customers += t.occupancy;
            ts.push_back(t);
        }
        r.tables.emplace(std::move(f), std::move(ts));
    }
    for (const auto& entry : j.at("direct"))
        r.direct_counts.emplace(parse_form_spec(entry.at(0).get<std::string>()),
                                entry.at(1).get<std::uint32_t>());
    return r;
}

} // namespace

std::string snapshot_to_string(const CommunityState& c) {
    ordered_json j;
    j["format"] = "prosim-snapshot";
    j["version"] = 1;
    j["config"] = community_config_to_json(c.cfg);
    j["clock"] = c.clock;
    j["steps"] = c.steps_taken;
    j["discourses"] = c.discourses_started;
    ordered_json rests = ordered_json::array();
    for (const auto& r : c.hier.restaurants()) rests.push_back(restaurant_to_json(r));
    j["restaurants"] = std::move(rests);
    ordered_json members = ordered_json::array();
    for (const auto& m : c.members) {
        ordered_json mj;
        mj["id"] = m.id;
        mj["general"] = m.general;
        ordered_json refs = ordered_json::array();
        for (const auto& [t, rid] : m.per_referent) refs.push_back({t, rid});
        mj["referents"] = std::move(refs);
        mj["topics"] = m.topics.counts();
        mj["witnessed"] = m.witnessed;
        members.push_back(std::move(mj));
    }
    j["members"] = std::move(members);
    return j.dump(2) + "\n";
}

void snapshot_save(const CommunityState& c, const std::filesystem::path& path) {
    write_text_file(path, snapshot_to_string(c));
}

CommunityState snapshot_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("snapshot parse failed (truncated or corrupt): ") + e.what());
    }
    if (!j.contains("format") || j.at("format") != "prosim-snapshot")
        throw IoError("not a prosim snapshot document");
    if (!j.contains("version") || !j.at("version").is_number_integer())
        throw IoError("snapshot missing version field");
    const int version = j.at("version").get<int>();
    if (version != 1)
        throw IoError("unsupported snapshot version " + std::to_string(version) +
                      " (this build reads version 1)");

    CommunityConfig cfg = community_config_from_json(j.at("config"));
    CommunityState c = new_community(std::move(cfg));
    c.clock = j.at("clock").get<std::uint64_t>();
    c.steps_taken = j.at("steps").get<std::uint64_t>();
    c.discourses_started = j.at("discourses").get<std::uint64_t>();

    std::vector<Restaurant> rests;
    for (const auto& rj : j.at("restaurants")) rests.push_back(restaurant_from_json(rj));
    c.hier.restore_restaurants(std::move(rests));

    const auto& members = j.at("members");
    if (members.size() != c.members.size())
        throw IoError("snapshot member count does not match its config");
    for (std::size_t i = 0; i < c.members.size(); ++i) {
        const auto& mj = members[i];
        SpeakerState& m = c.members[i];
        if (mj.at("id").get<MemberId>() != m.id) throw IoError("snapshot member ids out of order");
        m.general = mj.at("general").get<RestaurantId>();
        m.per_referent.clear();
        for (const auto& row : mj.at("referents"))
            m.per_referent.emplace(row.at(0).get<MemberId>(), row.at(1).get<RestaurantId>());
        m.topics.restore(mj.at("topics").get<std::vector<std::uint32_t>>());
        m.witnessed = mj.at("witnessed").get<std::uint64_t>();
    }
    community_audit(c);
    return c;
}

CommunityState snapshot_load(const std::filesystem::path& path) {
    return snapshot_from_string(read_text_file(path));
}

std::string event_log_to_string(const std::vector<LogEntry>& log) {
    std::string out;
    for (const auto& entry : log) {
        if (const auto* e = std::get_if<ReferenceEvent>(&entry)) {
            out += "R\t" + std::to_string(e->timestamp) + '\t' + std::to_string(e->speaker) +
                   '\t' + std::to_string(e->referent) + '\t' + std::to_string(e->discourse) +
                   '\t' + std::to_string(e->interaction) + '\t' + std::string(slot_name(e->slot)) +
                   '\t' + e->form.spec() + '\t' + e->surface + '\n';
        } else {
            const auto& d = std::get<DeclarationEvent>(entry);
            out += "D\t" + std::to_string(d.timestamp) + '\t' + std::to_string(d.declarer) + '\t';
            for (std::size_t i = 0; i < d.declared.size(); ++i) {
                if (i) out += ',';
                out += d.declared[i].first.spec() + '=' + format_double(d.declared[i].second);
            }
            out += '\n';
        }
    }
    return out;
}

void event_log_save(const std::vector<LogEntry>& log, const std::filesystem::path& path) {
    write_text_file(path, event_log_to_string(log));
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(std::string("event log: bad ") + what + " \"" + s + "\"");
    return v;
}

double parse_f64(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("event log: bad ") + what + " \"" + s + "\"");
    }
}

} // namespace

std::vector<LogEntry> event_log_parse(const std::string& text) {
    std::vector<LogEntry> log;
    std::size_t lineno = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split(line, '\t');
        const std::string where = " (line " + std::to_string(lineno) + ")";
        if (fields[0] == "R") {
            if (fields.size() != 9)
                throw ParseError("event log: reference record needs 9 fields" + where);
            ReferenceEvent e;
            e.timestamp = parse_u64(fields[1], "timestamp");
            e.speaker = static_cast<MemberId>(parse_u64(fields[2], "speaker"));
            e.referent = static_cast<MemberId>(parse_u64(fields[3], "referent"));
            e.discourse = parse_u64(fields[4], "discourse");
            e.interaction = static_cast<std::uint32_t>(parse_u64(fields[5], "interaction"));
            e.slot = parse_slot(fields[6]);
            e.form = parse_form_spec(fields[7]);
            e.surface = fields[8];
            log.emplace_back(std::move(e));
        } else if (fields[0] == "D") {
            if (fields.size() != 4)
                throw ParseError("event log: declaration record needs 4 fields" + where);
            DeclarationEvent d;
            d.timestamp = parse_u64(fields[1], "timestamp");
            d.declarer = static_cast<MemberId>(parse_u64(fields[2], "declarer"));
            for (const auto& item : split(fields[3], ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos)
                    throw ParseError("event log: declaration item needs form=weight" + where);
                d.declared.emplace_back(parse_form_spec(item.substr(0, eq)),
                                        parse_f64(item.substr(eq + 1), "weight"));
            }
            log.emplace_back(std::move(d));
        } else {
            throw ParseError("event log: unknown record type \"" + fields[0] + "\"" + where);
        }
    }
    return log;
}

std::vector<LogEntry> event_log_load(const std::filesystem::path& path) {
    return event_log_parse(read_text_file(path));
}

} // namespace prosim
