#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "mfg/mfe.hpp"
#include "mfg/model.hpp"

namespace mfg {

/// Build a GameModel from the configuration document:
///   {"model": "additive_noise" | "toy" | "tabular", "beta": ...,
///    "grid": {"min","max","points"}, "actions": {...},
///    "noise": {"sigma_trunc"}, "f"/"g"/"d": {"name","params"},
///    "mu0": {...}, "kernel"/"cost": tabular arrays}
GameModel model_from_json(const nlohmann::json& config);

GameModel load_model(const std::filesystem::path& config_path);

/// FNV-1a over the canonical (sorted-key, compact) config dump.
std::string model_hash(const nlohmann::json& config);

nlohmann::json constants_to_json(const GrowthConstants& constants);
nlohmann::json solution_to_json(const MfeSolution& solution);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mfg
