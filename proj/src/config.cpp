#include "fkpz/config.hpp"

#include <fstream>
#include <sstream>

namespace fkpz {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}
}  // namespace

KeyTree KeyTree::parse_string(const std::string& text) {
  KeyTree tree;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigInvalid("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigInvalid("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty())
      throw ConfigInvalid("line " + std::to_string(lineno) + ": empty key");
    tree.values_[section.empty() ? key : section + "." + key] = value;
  }
  return tree;
}

KeyTree KeyTree::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigInvalid("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str());
}

std::string KeyTree::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigInvalid("missing key '" + key + "'");
  return it->second;
}

double KeyTree::get_number(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t end;
    double x = std::stod(v, &end);
    if (end != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigInvalid("key '" + key + "' is not a number: '" + v + "'");
  }
}

int KeyTree::get_int(const std::string& key) const {
  double x = get_number(key);
  int i = static_cast<int>(x);
  if (i != x) throw ConfigInvalid("key '" + key + "' is not an integer");
  return i;
}

std::string KeyTree::get_string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
double KeyTree::get_number_or(const std::string& key, double fallback) const {
  return has(key) ? get_number(key) : fallback;
}
int KeyTree::get_int_or(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> KeyTree::get_number_list(const std::string& key) const {
  std::string v = get_string(key);
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigInvalid("key '" + key + "': bad list entry '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigInvalid("key '" + key + "': empty list");
  return out;
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Calibrate: return "calibrate";
    case ExperimentKind::KernelCheck: return "kernel-check";
    case ExperimentKind::GreenCheck: return "green-check";
    case ExperimentKind::SolveLinear: return "solve-linear";
    case ExperimentKind::Decay: return "decay";
    case ExperimentKind::SolveKpz: return "solve-kpz";
    case ExperimentKind::ScanAlpha: return "scan-alpha";
    case ExperimentKind::Drift: return "drift";
    case ExperimentKind::Blowup: return "blowup";
    case ExperimentKind::NonexistenceScan: return "nonexistence-scan";
  }
  return "?";
}

ExperimentKind kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ExperimentKind::NonexistenceScan); ++k)
    if (kind_name(static_cast<ExperimentKind>(k)) == name)
      return static_cast<ExperimentKind>(k);
  throw ConfigInvalid("run.kind: unknown experiment '" + name + "'");
}

ExperimentConfig ExperimentConfig::from_tree(const KeyTree& tree) {
  ExperimentConfig cfg;
  cfg.raw = tree;
  cfg.kind = kind_from_name(tree.get_string("run.kind"));

  cfg.dimension = tree.get_int_or("grid.dimension", 2);
  if (cfg.dimension != 1 && cfg.dimension != 2)
    throw ConfigInvalid("grid.dimension must be 1 or 2");
  cfg.shape = shape_from_name(
      tree.get_string_or("grid.shape", cfg.dimension == 1 ? "interval" : "ball"));
  cfg.h = tree.get_number_or("grid.h", cfg.h);
  if (!(cfg.h > 0.0)) throw ConfigInvalid("grid.h must be positive");

  if (!tree.has("physics.s")) throw ConfigInvalid("missing key 'physics.s'");
  cfg.s = tree.get_number("physics.s");
  if (!(cfg.s > 0.5 && cfg.s < 1.0)) throw ConfigInvalid("physics.s must lie in (0.5, 1)");
  cfg.convention =
      convention_from_name(tree.get_string_or("physics.convention", "fourier-symbol"));
  cfg.alpha = tree.get_number_or("physics.alpha", cfg.alpha);
  bool needs_alpha = cfg.kind == ExperimentKind::SolveKpz ||
                     cfg.kind == ExperimentKind::ScanAlpha ||
                     cfg.kind == ExperimentKind::Blowup;
  if (needs_alpha && !(cfg.alpha > 1.0)) throw ConfigInvalid("physics.alpha must exceed 1");
  cfg.T = tree.get_number_or("physics.T", cfg.T);
  if (!(cfg.T > 0.0)) throw ConfigInvalid("physics.T must be positive");
  cfg.dt = tree.get_number_or("physics.dt", cfg.dt);
  if (!(cfg.dt > 0.0)) throw ConfigInvalid("physics.dt must be positive");

  auto parse_expr = [&](const char* key) -> std::optional<Expr> {
    if (!tree.has(key)) return std::nullopt;
    try {
      return Expr::parse(tree.get_string(key));
    } catch (const Error& e) {
      throw ConfigInvalid(std::string(key) + ": " + e.what());
    }
  };
  cfg.f = parse_expr("data.f");
  cfg.u0 = parse_expr("data.u0");
  cfg.B1 = parse_expr("data.B1");
  cfg.B2 = parse_expr("data.B2");
  if (tree.has("data.beta")) cfg.beta = tree.get_number("data.beta");
  cfg.m = tree.get_number_or("data.m", 1.0);
  cfg.rho = tree.get_number_or("data.rho", 1.0);

  cfg.out_dir = tree.get_string_or("output.dir", "out");
  cfg.seed = static_cast<std::uint64_t>(tree.get_number_or("run.seed", 1234));
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_tree(KeyTree::parse_file(path));
}

}  // namespace fkpz
