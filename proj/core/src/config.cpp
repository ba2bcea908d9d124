#include "pgm/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pgm/errors.hpp"

namespace pgm {
namespace harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool in_quotes = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_quotes = !in_quotes;
    if (s[i] == '#' && !in_quotes) return s.substr(0, i);
  }
  return s;
}

bool parse_integer(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (std::size_t j = i; j < s.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(s[j]))) return false;
  try {
    out = std::stoll(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

bool parse_float(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ConfigTable ConfigTable::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

ConfigTable ConfigTable::parse_string(const std::string& text, const std::string& origin) {
  ConfigTable table;
  table.origin_ = origin;

  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  int line_no = 0;

  while (std::getline(in, raw_line)) {
    line_no += 1;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;

    const std::string where = origin + ":" + std::to_string(line_no);

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ": unterminated section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      if (!table.sections_.count(section)) {
        table.sections_[section] = {};
        table.order_.push_back(section);
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value_text = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    if (value_text.empty())
      throw ConfigError(where + ": missing value for '" + section + "." + key + "'");

    ConfigValue cv;
    cv.line = line_no;

    if (value_text == "true" || value_text == "false") {
      cv.value = (value_text == "true");
    } else if (value_text.front() == '"') {
      if (value_text.size() < 2 || value_text.back() != '"')
        throw ConfigError(where + ": unterminated string for '" + section + "." + key + "'");
      cv.value = value_text.substr(1, value_text.size() - 2);
    } else if (value_text.front() == '[') {
      if (value_text.back() != ']')
        throw ConfigError(where + ": unterminated array for '" + section + "." + key + "'");
      std::vector<double> items;
      std::string body = value_text.substr(1, value_text.size() - 2);
      std::istringstream parts(body);
      std::string item;
      while (std::getline(parts, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        double v = 0.0;
        if (!parse_float(t, v))
          throw ConfigError(where + ": bad array element '" + t + "' in '" + section + "." +
                            key + "'");
        items.push_back(v);
      }
      cv.value = std::move(items);
    } else {
      std::int64_t iv = 0;
      double fv = 0.0;
      if (parse_integer(value_text, iv))
        cv.value = iv;
      else if (parse_float(value_text, fv))
        cv.value = fv;
      else
        throw ConfigError(where + ": cannot parse value '" + value_text + "' for '" + section +
                          "." + key + "'");
    }

    table.sections_[section][key] = std::move(cv);
  }
  return table;
}

bool ConfigTable::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

bool ConfigTable::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

void ConfigTable::fail(const std::string& what) const {
  throw ConfigError(origin_ + ": " + what);
}

const ConfigValue& ConfigTable::require(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) fail("missing section [" + section + "]");
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) fail("missing field '" + section + "." + key + "'");
  return kit->second;
}

double ConfigTable::get_double(const std::string& section, const std::string& key) const {
  const auto& cv = require(section, key);
  if (const auto* d = std::get_if<double>(&cv.value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&cv.value)) return static_cast<double>(*i);
  fail("field '" + section + "." + key + "' (line " + std::to_string(cv.line) +
       ") must be a number");
}

std::int64_t ConfigTable::get_int(const std::string& section, const std::string& key) const {
  const auto& cv = require(section, key);
  if (const auto* i = std::get_if<std::int64_t>(&cv.value)) return *i;
  fail("field '" + section + "." + key + "' (line " + std::to_string(cv.line) +
       ") must be an integer");
}

std::string ConfigTable::get_string(const std::string& section, const std::string& key) const {
  const auto& cv = require(section, key);
  if (const auto* s = std::get_if<std::string>(&cv.value)) return *s;
  fail("field '" + section + "." + key + "' (line " + std::to_string(cv.line) +
       ") must be a quoted string");
}

std::vector<double> ConfigTable::get_array(const std::string& section,
                                           const std::string& key) const {
  const auto& cv = require(section, key);
  if (const auto* a = std::get_if<std::vector<double>>(&cv.value)) return *a;
  fail("field '" + section + "." + key + "' (line " + std::to_string(cv.line) +
       ") must be a numeric array");
}

double ConfigTable::get_double_or(const std::string& section, const std::string& key,
                                  double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t ConfigTable::get_int_or(const std::string& section, const std::string& key,
                                     std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::string ConfigTable::get_string_or(const std::string& section, const std::string& key,
                                       const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

bool ConfigTable::get_bool_or(const std::string& section, const std::string& key,
                              bool fallback) const {
  if (!has(section, key)) return fallback;
  const auto& cv = require(section, key);
  if (const auto* b = std::get_if<bool>(&cv.value)) return *b;
  fail("field '" + section + "." + key + "' (line " + std::to_string(cv.line) +
       ") must be true or false");
}

// ---- Experiment assembly -----------------------------------------------------------

namespace {

filters::UnscentedParams read_ut(const ConfigTable& t, const std::string& section) {
  filters::UnscentedParams ut;
  ut.alpha = t.get_double(section, "ut_alpha");
  ut.beta = t.get_double(section, "ut_beta");
  ut.lambda = t.get_double(section, "ut_lambda");
  return ut;
}

FilterSpec read_filter(const ConfigTable& t, const std::string& section) {
  FilterSpec spec;
  spec.name = section.substr(std::string("filter.").size());
  if (spec.name.empty()) throw ConfigError("empty filter name in section [" + section + "]");
  spec.type = t.get_string(section, "type");

  if (spec.type == "pgm") {
    spec.pgm.particle_count = static_cast<int>(t.get_int(section, "particles"));
    spec.pgm.m_max = static_cast<int>(t.get_int(section, "m_max"));
    spec.pgm.merge_tol = t.get_double(section, "merge_tol");
    spec.pgm.variant = static_cast<int>(t.get_int(section, "variant"));
    spec.pgm.ut = read_ut(t, section);
    spec.pgm.kmeans_restarts =
        static_cast<int>(t.get_int_or(section, "kmeans_restarts", spec.pgm.kmeans_restarts));
    spec.pgm.kmeans_max_iter =
        static_cast<int>(t.get_int_or(section, "kmeans_max_iter", spec.pgm.kmeans_max_iter));
    spec.particles = spec.pgm.particle_count;
  } else if (spec.type == "pf" || spec.type == "enkf") {
    spec.particles = static_cast<int>(t.get_int(section, "particles"));
  } else if (spec.type == "ukf" || spec.type == "gmukf") {
    spec.ut = read_ut(t, section);
  } else {
    throw ConfigError("unknown filter type '" + spec.type + "' in section [" + section +
                      "] (expected pgm, pf, ukf, gmukf, or enkf)");
  }
  return spec;
}

}  // namespace

ExperimentConfig config_from_string(const std::string& text, const std::string& origin) {
  ConfigTable table = ConfigTable::parse_string(text, origin);
  ExperimentConfig cfg;
  cfg.name = table.get_string("experiment", "name");
  cfg.steps = static_cast<int>(table.get_int("experiment", "steps"));
  cfg.runs = static_cast<int>(table.get_int("experiment", "runs"));
  cfg.seed = static_cast<std::uint64_t>(table.get_int("experiment", "seed"));
  cfg.out_dir = table.get_string_or("experiment", "out_dir", "out");
  cfg.trace = table.get_bool_or("experiment", "trace", false);
  cfg.plot_log_scale = table.get_bool_or("experiment", "plot_log_scale", false);
  if (cfg.steps < 1) throw ConfigError(origin + ": experiment.steps must be >= 1");
  if (cfg.runs < 1) throw ConfigError(origin + ": experiment.runs must be >= 1");

  for (const auto& section : table.section_order())
    if (section.rfind("filter.", 0) == 0) cfg.filters.push_back(read_filter(table, section));
  if (cfg.filters.empty())
    throw ConfigError(origin + ": no [filter.<name>] sections found");

  cfg.raw = std::move(table);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_string(buffer.str(), path);
}

std::unique_ptr<models::StateSpaceModel> build_model(const ExperimentConfig& cfg) {
  const ConfigTable& t = cfg.raw;
  const std::string id = t.get_string("model", "id");

  const auto noise_mode = [&]() {
    const std::string mode = t.get_string("model", "noise_mode");
    if (mode == "intensity") return models::NoiseMode::intensity;
    if (mode == "per_step") return models::NoiseMode::per_step;
    throw ConfigError("model.noise_mode must be \"intensity\" or \"per_step\", got \"" + mode +
                      "\"");
  };

  if (id == "scalar_growth") {
    return std::make_unique<models::ScalarGrowthModel>(
        t.get_double("model", "process_noise"), t.get_double("model", "meas_noise"),
        static_cast<int>(t.get_int("model", "meas_every")));
  }
  if (id == "lorenz63") {
    const std::string coords = t.get_string("model", "noise_coords");
    if (coords != "third" && coords != "all")
      throw ConfigError("model.noise_coords must be \"third\" or \"all\", got \"" + coords +
                        "\"");
    return std::make_unique<models::Lorenz63Model>(
        t.get_double("model", "dt"), t.get_double("model", "diffusion"),
        t.get_double("model", "meas_noise"), static_cast<int>(t.get_int("model", "meas_every")),
        noise_mode(), coords == "all", static_cast<int>(t.get_int_or("model", "substeps", 1)));
  }
  if (id == "lorenz96") {
    return std::make_unique<models::Lorenz96Model>(
        static_cast<int>(t.get_int("model", "dim")), t.get_double("model", "forcing"),
        t.get_double("model", "dt"), t.get_double("model", "diffusion"),
        t.get_double("model", "meas_noise"), static_cast<int>(t.get_int("model", "meas_every")),
        noise_mode(), static_cast<int>(t.get_int_or("model", "substeps", 1)));
  }
  if (id == "linear_gauss") {
    return std::make_unique<models::LinearGaussianModel>(
        t.get_double("model", "process_noise"), t.get_double("model", "meas_noise"),
        static_cast<int>(t.get_int("model", "meas_every")));
  }
  throw ConfigError("unknown model.id '" + id +
                    "' (expected scalar_growth, lorenz63, lorenz96, or linear_gauss)");
}

GaussianMixture build_prior(const ExperimentConfig& cfg, int state_dim) {
  const ConfigTable& t = cfg.raw;
  const std::vector<double> weights = t.get_array("prior", "weights");
  if (weights.empty()) throw ConfigError("prior.weights must not be empty");

  const bool shared_cov = t.has("prior", "cov_scale");
  Eigen::MatrixXd shared;
  if (shared_cov) {
    const double scale = t.get_double("prior", "cov_scale");
    const std::string mode = t.get_string("prior", "cov_mode");
    double value;
    if (mode == "sqrt")
      value = std::sqrt(scale);
    else if (mode == "direct")
      value = scale;
    else
      throw ConfigError("prior.cov_mode must be \"sqrt\" or \"direct\", got \"" + mode + "\"");
    shared = value * Eigen::MatrixXd::Identity(state_dim, state_dim);
  }

  std::vector<GaussianComponent> comps;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string idx = std::to_string(i + 1);

    Eigen::VectorXd mean(state_dim);
    if (t.has("prior", "mean_" + idx)) {
      const auto m = t.get_array("prior", "mean_" + idx);
      if (static_cast<int>(m.size()) != state_dim)
        throw ConfigError("prior.mean_" + idx + " must have " + std::to_string(state_dim) +
                          " entries");
      for (int j = 0; j < state_dim; ++j) mean(j) = m[j];
    } else if (t.has("prior", "mean_fill_" + idx)) {
      mean.setConstant(t.get_double("prior", "mean_fill_" + idx));
    } else {
      throw ConfigError("missing field 'prior.mean_" + idx + "' (or 'prior.mean_fill_" + idx +
                        "')");
    }

    Eigen::MatrixXd cov;
    if (shared_cov) {
      cov = shared;
    } else if (t.has("prior", "cov_" + idx)) {
      const auto diag = t.get_array("prior", "cov_" + idx);
      if (static_cast<int>(diag.size()) != state_dim)
        throw ConfigError("prior.cov_" + idx + " must have " + std::to_string(state_dim) +
                          " diagonal entries");
      cov = Eigen::MatrixXd::Zero(state_dim, state_dim);
      for (int j = 0; j < state_dim; ++j) cov(j, j) = diag[j];
    } else if (t.has("prior", "cov_iso_" + idx)) {
      cov = t.get_double("prior", "cov_iso_" + idx) *
            Eigen::MatrixXd::Identity(state_dim, state_dim);
    } else {
      throw ConfigError("missing field 'prior.cov_" + idx + "' (or 'prior.cov_iso_" + idx +
                        "', or shared 'prior.cov_scale')");
    }

    comps.emplace_back(weights[i], std::move(mean), std::move(cov));
  }
  return GaussianMixture(std::move(comps));
}

}  // namespace harness
}  // namespace pgm
