#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "pgm/filters.hpp"
#include "pgm/mixture.hpp"
#include "pgm/models.hpp"

namespace pgm {
namespace harness {

// ---- Raw config table -----------------------------------------------------------

/// One parsed value, remembering its source line for diagnostics.
struct ConfigValue {
  std::variant<bool, std::int64_t, double, std::string, std::vector<double>> value;
  int line = 0;
};

/// Sectioned key/value config file — a small TOML-style subset: `[section]`
/// headers (dots allowed), `key = value` lines with booleans, integers,
/// floats, quoted strings, and `[..]` numeric arrays, plus `#` comments.
/// Every parse or type error names the file:line and section.key involved.
class ConfigTable {
 public:
  [[nodiscard]] static ConfigTable parse_file(const std::string& path);
  [[nodiscard]] static ConfigTable parse_string(const std::string& text,
                                                const std::string& origin);

  [[nodiscard]] bool has_section(const std::string& section) const;
  [[nodiscard]] bool has(const std::string& section, const std::string& key) const;

  /// Section headers in file order (drives filter execution order).
  [[nodiscard]] const std::vector<std::string>& section_order() const noexcept {
    return order_;
  }

  // Typed getters. The plain forms throw ConfigError when the key is missing
  // or of the wrong type; the *_or forms substitute a default when missing.
  // Physics parameters always use the throwing forms: no silent defaults.
  [[nodiscard]] double get_double(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::int64_t get_int(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::string get_string(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::vector<double> get_array(const std::string& section,
                                              const std::string& key) const;
  [[nodiscard]] double get_double_or(const std::string& section, const std::string& key,
                                     double fallback) const;
  [[nodiscard]] std::int64_t get_int_or(const std::string& section, const std::string& key,
                                        std::int64_t fallback) const;
  [[nodiscard]] std::string get_string_or(const std::string& section, const std::string& key,
                                          const std::string& fallback) const;
  [[nodiscard]] bool get_bool_or(const std::string& section, const std::string& key,
                                 bool fallback) const;

 private:
  const ConfigValue& require(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& what) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  std::vector<std::string> order_;
};

// ---- Experiment configuration ------------------------------------------------------

/// One filter entry from a `[filter.<name>]` section.
struct FilterSpec {
  std::string name;
  std::string type;  ///< pgm | pf | ukf | gmukf | enkf
  int particles = 0;
  filters::PgmOptions pgm;
  filters::UnscentedParams ut;
};

/// Fully parsed experiment: campaign controls, filter list, and the raw
/// table from which the model and prior are built.
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  int runs = 0;
  int steps = 0;
  std::string out_dir = "out";
  bool trace = false;
  bool plot_log_scale = false;
  std::vector<FilterSpec> filters;
  ConfigTable raw;
};

[[nodiscard]] ExperimentConfig load_config(const std::string& path);
[[nodiscard]] ExperimentConfig config_from_string(const std::string& text,
                                                  const std::string& origin);

/// Materializes the `[model]` section. Every physics parameter must be
/// present explicitly; missing keys raise ConfigError naming the field.
[[nodiscard]] std::unique_ptr<models::StateSpaceModel> build_model(const ExperimentConfig& cfg);

/// Materializes the `[prior]` section against the model's state dimension.
/// Component i takes its mean from `mean_i` (full array) or `mean_fill_i`
/// (scalar replicated), and its covariance from `cov_i` (diagonal array),
/// `cov_iso_i` (scalar × I), or the shared `cov_scale` with
/// `cov_mode = "sqrt" | "direct"` selecting √s·I vs s·I.
[[nodiscard]] GaussianMixture build_prior(const ExperimentConfig& cfg, int state_dim);

}  // namespace harness
}  // namespace pgm
