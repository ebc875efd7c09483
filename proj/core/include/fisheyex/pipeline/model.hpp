#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "fisheyex/nn/networks.hpp"
#include "fisheyex/polar.hpp"

namespace fisheyex::pipeline {

/// The trained networks plus the frame and grid they were trained on.
struct Model {
  int height = 0;
  int width = 0;
  double r_valid = 0.0;
  PolarGrid grid;
  std::optional<nn::Generator> generator;
  std::optional<nn::Perception> perception;
  std::optional<nn::Revision> revision;
  /// Fingerprint of the stage-1 model a stage-2 model was trained on.
  std::string stage1_fingerprint;

  /// key=value text of every present network, without the fingerprint line.
  std::string config_text() const;
  std::string fingerprint() const { return nn::fingerprint(config_text()); }
};

inline constexpr const char* kModelConfigName = "model.cfg";

/// model.cfg (config text + fingerprint line) and one CKP1 file per network.
/// Files are written to temporaries and renamed into place.
void save_model(const Model& model, const std::filesystem::path& dir);

/// Rebuilds the networks from model.cfg, checks its fingerprint, then loads
/// the checkpoints; any disagreement is a config_mismatch.
Model load_model(const std::filesystem::path& dir);

/// Parses "key=value" lines; blank lines and '#' comments are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);

}  // namespace fisheyex::pipeline
