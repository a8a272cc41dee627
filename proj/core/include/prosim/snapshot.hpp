#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosim/community.hpp"

namespace prosim {

// All documents are canonical: given equal state they serialize to equal
// bytes, so snapshots and CSVs diff cleanly across runs.

nlohmann::ordered_json speaker_profile_to_json(const SpeakerProfile& p);
SpeakerProfile speaker_profile_from_json(const nlohmann::json& j);

nlohmann::ordered_json lexicon_config_to_json(const LexiconConfig& cfg);
LexiconConfig lexicon_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json community_config_to_json(const CommunityConfig& cfg);
CommunityConfig community_config_from_json(const nlohmann::json& j);
CommunityConfig community_config_from_file(const std::filesystem::path& path);

// Versioned whole-state snapshot: config, clocks, every restaurant in
// canonical order, member wiring. save/load is the identity on model state.
std::string snapshot_to_string(const CommunityState& c);
void snapshot_save(const CommunityState& c, const std::filesystem::path& path);
CommunityState snapshot_from_string(const std::string& text);
CommunityState snapshot_load(const std::filesystem::path& path);

// Line-delimited event log; one canonical record per line.
std::string event_log_to_string(const std::vector<LogEntry>& log);
void event_log_save(const std::vector<LogEntry>& log, const std::filesystem::path& path);
std::vector<LogEntry> event_log_parse(const std::string& text);
std::vector<LogEntry> event_log_load(const std::filesystem::path& path);

// Shortest round-trip decimal representation (used everywhere a double
// crosses a text boundary outside JSON).
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace prosim
