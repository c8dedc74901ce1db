#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fkpz/expr.hpp"
#include "fkpz/fraclap.hpp"

namespace fkpz {

// Flat key tree parsed from the TOML-style sections of a config file; keys
// are addressed as "section.key".
class KeyTree {
public:
  static KeyTree parse_file(const std::string& path);
  static KeyTree parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_number_or(const std::string& key, double fallback) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::vector<double> get_number_list(const std::string& key) const;

  const std::map<std::string, std::string>& raw() const { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

private:
  std::map<std::string, std::string> values_;
};

enum class ExperimentKind {
  Calibrate,
  KernelCheck,
  GreenCheck,
  SolveLinear,
  Decay,
  SolveKpz,
  ScanAlpha,
  Drift,
  Blowup,
  NonexistenceScan,
};

std::string kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SolveLinear;
  // grid block
  int dimension = 2;
  Shape shape = Shape::Ball;
  double h = 1.0 / 16.0;
  // physics block
  double s = 0.75;
  Convention convention = Convention::FourierSymbol;
  double alpha = 2.0;
  double T = 0.5;
  double dt = 0.01;
  // data block
  std::optional<Expr> f;
  std::optional<Expr> u0;
  std::optional<Expr> B1, B2;
  std::optional<double> beta;
  double m = 1.0;
  double rho = 1.0;
  // output
  std::string out_dir = "out";
  std::uint64_t seed = 1234;

  KeyTree raw;  // echoed into the manifest

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_tree(const KeyTree& tree);
};

}  // namespace fkpz
