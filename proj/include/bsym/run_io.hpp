#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "bsym/system.hpp"

namespace bsym {

/// System descriptor: {"schema": 1, "chart": ..., "omega": ...,
/// "integrals": [{"c": ..., "g": ...}], "rank": ...}.
nlohmann::json system_to_json(const NCBSystem& sys);
NCBSystem system_from_json(const nlohmann::json& j);

NCBSystem load_system_file(const std::filesystem::path& path);
void save_system_file(const NCBSystem& sys, const std::filesystem::path& path);

/// Deterministic report writer: two-space indent, trailing newline, keys in
/// sorted order. Identical content => identical bytes.
void write_report(const nlohmann::json& report, const std::filesystem::path& path);

/// Side metadata (timestamp et al.) kept out of the deterministic report.
void write_run_meta(const std::filesystem::path& path, const std::string& command);

} // namespace bsym
