#include "fisheyex/pipeline/model.hpp"

#include <sstream>

#include <fmt/core.h>

#include "fisheyex/ad/checkpoint.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"

namespace fs = std::filesystem;

namespace fisheyex::pipeline {

namespace {

constexpr const char* kGeneratorFile = "generator.ckp";
constexpr const char* kPerceptionFile = "perception.ckp";
constexpr const char* kRevisionFile = "revision.ckp";

class Fields {
 public:
  explicit Fields(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.contains(key); }
  const std::string& str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) fail(ErrorCode::config_mismatch, "model config lacks '" + key + "'");
    return it->second;
  }
  int integer(const std::string& key) const {
    try {
      std::size_t used = 0;
      const int v = std::stoi(str(key), &used);
      if (used == str(key).size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::config_mismatch, "model config value is not an integer: " + key);
  }
  double real(const std::string& key) const {
    try {
      return std::stod(str(key));
    } catch (const std::exception&) {
      fail(ErrorCode::config_mismatch, "model config value is not a number: " + key);
    }
  }

 private:
  std::map<std::string, std::string> kv_;
};

void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  write_bytes(tmp, bytes);
  fs::rename(tmp, path);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::unsupported_format, fmt::format("line {}: expected key=value", number));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string Model::config_text() const {
  std::string out = fmt::format("height={}\nwidth={}\nr_valid={:.17g}\ngrid={}\n", height, width, r_valid,
                                format_grid(grid));
  if (generator) out += nn::config_text(generator->config());
  if (perception) out += nn::config_text(perception->config());
  if (revision) out += nn::config_text(revision->config());
  if (!stage1_fingerprint.empty()) out += "stage1.fingerprint=" + stage1_fingerprint + "\n";
  return out;
}

void save_model(const Model& model, const fs::path& dir) {
  fs::create_directories(dir);
  if (model.generator) write_atomic(dir / kGeneratorFile, ad::encode_checkpoint(model.generator->params()));
  if (model.perception) write_atomic(dir / kPerceptionFile, ad::encode_checkpoint(model.perception->params()));
  if (model.revision) write_atomic(dir / kRevisionFile, ad::encode_checkpoint(model.revision->params()));
  const std::string text = model.config_text() + "fingerprint=" + model.fingerprint() + "\n";
  write_atomic(dir / kModelConfigName, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Model load_model(const fs::path& dir) {
  const fs::path cfg = dir / kModelConfigName;
  if (!fs::exists(cfg)) fail(ErrorCode::file_not_found, "no model.cfg in " + dir.string());
  const auto bytes = read_bytes(cfg);
  const Fields f(parse_key_values(std::string(bytes.begin(), bytes.end())));

  Model m;
  m.height = f.integer("height");
  m.width = f.integer("width");
  m.r_valid = f.real("r_valid");
  m.grid = parse_grid(f.str("grid"));
  if (f.has("generator.base_channels")) {
    nn::GeneratorConfig c;
    c.base_channels = f.integer("generator.base_channels");
    c.wrap_theta = f.integer("generator.wrap_theta") != 0;
    std::istringstream d(f.str("generator.dilations"));
    std::string item;
    for (int& v : c.dilations) {
      if (!std::getline(d, item, ',')) fail(ErrorCode::config_mismatch, "generator.dilations needs four values");
      v = std::stoi(item);
    }
    m.generator.emplace(c, 0);
  }
  if (f.has("perception.base_channels")) {
    nn::PerceptionConfig c;
    c.base_channels = f.integer("perception.base_channels");
    c.hidden = f.integer("perception.hidden");
    c.n_rho = f.integer("perception.n_rho");
    c.wrap_theta = f.integer("perception.wrap_theta") != 0;
    m.perception.emplace(c, 0);
  }
  if (f.has("revision.base_channels")) {
    nn::RevisionConfig c;
    c.base_channels = f.integer("revision.base_channels");
    c.residual_blocks = f.integer("revision.residual_blocks");
    m.revision.emplace(c, 0);
  }
  if (f.has("stage1.fingerprint")) m.stage1_fingerprint = f.str("stage1.fingerprint");
  if (m.fingerprint() != f.str("fingerprint")) {
    fail(ErrorCode::config_mismatch, fmt::format("model.cfg fingerprint {} does not match its contents ({})",
                                                 f.str("fingerprint"), m.fingerprint()));
  }
  if (m.perception && m.perception->config().n_rho != m.grid.n_rho) {
    fail(ErrorCode::config_mismatch, "perception output length differs from the grid's n_rho");
  }
  auto load = [&](ad::ParamStore<float>& store, const char* file) {
    const fs::path path = dir / file;
    if (!fs::exists(path)) fail(ErrorCode::file_not_found, "missing checkpoint " + path.string());
    ad::assign_checkpoint(store, ad::read_checkpoint(path));
  };
  if (m.generator) load(m.generator->params(), kGeneratorFile);
  if (m.perception) load(m.perception->params(), kPerceptionFile);
  if (m.revision) load(m.revision->params(), kRevisionFile);
  return m;
}

}  // namespace fisheyex::pipeline
