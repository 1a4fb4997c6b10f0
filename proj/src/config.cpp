#include "sectrack/config.hpp"

#include <array>
#include <fstream>
#include <set>
#include <string>

namespace sectrack {

namespace {

using nlohmann::json;

[[noreturn]] void fail_key(const std::string& key, const std::string& msg) {
  throw ConfigError("config key '" + key + "': " + msg);
}

// Typed section reader; tracks which keys were consumed and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(&j), prefix_(std::move(prefix)) {
    if (!j.is_object()) fail_key(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    if (!j_->contains(key)) return;
    try {
      target = j_->at(key).get<T>();
    } catch (const json::exception&) {
      fail_key(path(key), "has the wrong type");
    }
  }

  void get_point(const char* key, Point2& target) {
    std::array<double, 2> xy{target.x(), target.y()};
    get(key, xy);
    target = {xy[0], xy[1]};
  }

  template <typename Enum>
  void get_enum(const char* key, Enum& target, Enum (*from_string)(const std::string&)) {
    std::string s = to_string(target);
    get(key, s);
    try {
      target = from_string(s);
    } catch (const std::exception& e) {
      fail_key(path(key), e.what());
    }
  }

  bool has(const char* key) const { return j_->contains(key); }

  const json& sub(const char* key) {
    seen_.insert(key);
    return j_->at(key);
  }

  std::string path(const char* key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_->items()) {
      if (!seen_.count(k)) fail_key(path(k.c_str()), "unknown key");
    }
  }

 private:
  const json* j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

}  // namespace

std::string to_string(DetectorMode mode) {
  return mode == DetectorMode::delta ? "delta" : "mahalanobis";
}

std::string to_string(AttackKind kind) {
  return kind == AttackKind::location_perturbation ? "location_perturbation" : "rss_bias";
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::n_anchors: return "n_anchors";
    case SweepAxis::n_malicious: return "n_malicious";
    case SweepAxis::sigma_db: return "sigma_db";
    case SweepAxis::sigma_attack: return "sigma_attack";
  }
  return "n_anchors";
}

DetectorMode detector_mode_from_string(const std::string& s) {
  if (s == "delta") return DetectorMode::delta;
  if (s == "mahalanobis") return DetectorMode::mahalanobis;
  throw std::invalid_argument("expected one of: delta, mahalanobis (got '" + s + "')");
}

AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "location_perturbation") return AttackKind::location_perturbation;
  if (s == "rss_bias") return AttackKind::rss_bias;
  throw std::invalid_argument("expected one of: location_perturbation, rss_bias (got '" + s + "')");
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "n_anchors") return SweepAxis::n_anchors;
  if (s == "n_malicious") return SweepAxis::n_malicious;
  if (s == "sigma_db") return SweepAxis::sigma_db;
  if (s == "sigma_attack") return SweepAxis::sigma_attack;
  throw std::invalid_argument(
      "expected one of: n_anchors, n_malicious, sigma_db, sigma_attack (got '" + s + "')");
}

CliConfig parse_config(const json& root) {
  CliConfig cfg;
  Section top(root, "");
  top.get("seed", cfg.seed);

  if (top.has("scenario")) {
    Section s(top.sub("scenario"), "scenario");
    s.get("field_w_m", cfg.scenario.field_w_m);
    s.get("field_h_m", cfg.scenario.field_h_m);
    s.get("n_anchors", cfg.scenario.n_anchors);
    s.get("n_malicious", cfg.scenario.n_malicious);
    s.get("n_steps", cfg.scenario.n_steps);
    s.get_point("start_m", cfg.scenario.start_m);
    s.get_point("velocity_m_per_step", cfg.scenario.velocity_m_per_step);
    s.finish();
  }
  if (top.has("radio")) {
    Section s(top.sub("radio"), "radio");
    s.get("p0_db", cfg.scenario.radio.p0_db);
    s.get("alpha", cfg.scenario.radio.alpha);
    s.get("d0_m", cfg.scenario.radio.d0_m);
    s.get("sigma_db", cfg.scenario.radio.sigma_db);
    s.finish();
  }
  if (top.has("attack")) {
    Section s(top.sub("attack"), "attack");
    s.get_enum("kind", cfg.scenario.attack.kind, attack_kind_from_string);
    s.get("sigma_attack_m", cfg.scenario.attack.sigma_attack_m);
    s.get("bias_db", cfg.scenario.attack.bias_db);
    s.get("persistent", cfg.scenario.attack.persistent);
    s.finish();
  }
  if (top.has("detector")) {
    Section s(top.sub("detector"), "detector");
    s.get_enum("mode", cfg.detector.mode, detector_mode_from_string);
    s.get("gamma", cfg.detector.gamma);
    s.get("delta_floor_m", cfg.detector.delta_floor_m);
    s.get("warmup", cfg.detector.warmup);
    s.get("window", cfg.detector.window);
    s.get("maha_margin", cfg.detector.maha_margin);
    s.get("maha_floor", cfg.detector.maha_floor);
    s.get("maha_variance_floor", cfg.detector.maha_variance_floor);
    s.get("maha_confirm_steps", cfg.detector.maha_confirm_steps);
    s.get("min_anchors", cfg.detector.min_anchors);
    s.get("min_spread_m", cfg.detector.min_spread_m);
    s.finish();
  }
  if (top.has("tracker")) {
    Section s(top.sub("tracker"), "tracker");
    s.get("process_noise_q", cfg.tracker.process_noise_q);
    s.get("innovation_gate_sigma", cfg.tracker.innovation_gate_sigma);
    s.get("info_dominance_cap", cfg.tracker.info_dominance_cap);
    std::array<double, 4> diag{cfg.tracker.initial_cov_diag[0], cfg.tracker.initial_cov_diag[1],
                               cfg.tracker.initial_cov_diag[2], cfg.tracker.initial_cov_diag[3]};
    s.get("initial_cov_diag", diag);
    cfg.tracker.initial_cov_diag = {diag[0], diag[1], diag[2], diag[3]};
    s.finish();
  }
  if (top.has("sweep")) {
    Section s(top.sub("sweep"), "sweep");
    s.get_enum("axis", cfg.sweep.axis, sweep_axis_from_string);
    s.get("values", cfg.sweep.values);
    s.get("trials", cfg.sweep.trials);
    s.get("threads", cfg.sweep.threads);
    s.finish();
  }
  if (top.has("calibration")) {
    Section s(top.sub("calibration"), "calibration");
    s.get("runs", cfg.calibration.runs);
    s.get("percentile", cfg.calibration.percentile);
    s.get("delta_floor_percentile", cfg.calibration.delta_floor_percentile);
    s.get("maha_floor_percentile", cfg.calibration.maha_floor_percentile);
    s.finish();
  }
  if (top.has("output")) {
    Section s(top.sub("output"), "output");
    s.get("dir", cfg.output.dir);
    s.finish();
  }
  top.finish();

  cfg.scenario.seed = cfg.seed;
  return cfg;
}

json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);  // exceptions carry line/column diagnostics
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config ") + path + ": " + e.what());
  }
}

void apply_override(json& root, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like section.key=value (got '" + key_eq_value + "')");
  const std::string key = key_eq_value.substr(0, eq);
  const std::string value = key_eq_value.substr(eq + 1);

  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (part.empty()) throw ConfigError("override has an empty key segment: '" + key + "'");
    if (dot == std::string::npos) {
      json leaf = json::parse(value, nullptr, false);
      if (leaf.is_discarded()) leaf = value;  // raw string fallback
      (*node)[part] = leaf;
      break;
    }
    node = &(*node)[part];
    if (!node->is_object() && !node->is_null())
      throw ConfigError("override key '" + key.substr(0, dot) + "' is not a section");
    pos = dot + 1;
  }
}

namespace {

void check(bool ok, const char* key, const std::string& msg) {
  if (!ok) fail_key(key, msg);
}

}  // namespace

void validate(const CliConfig& cfg) {
  check(cfg.scenario.n_anchors >= 1, "scenario.n_anchors", "must be >= 1");
  check(cfg.scenario.n_malicious >= 0, "scenario.n_malicious", "must be >= 0");
  check(cfg.scenario.n_malicious < cfg.scenario.n_anchors, "scenario.n_malicious",
        "must be < scenario.n_anchors");
  check(cfg.scenario.n_steps >= 1, "scenario.n_steps", "must be >= 1");
  check(cfg.scenario.field_w_m > 0.0, "scenario.field_w_m", "must be > 0");
  check(cfg.scenario.field_h_m > 0.0, "scenario.field_h_m", "must be > 0");
  check(cfg.scenario.n_anchors >= cfg.detector.min_anchors, "scenario.n_anchors",
        "must be >= detector.min_anchors");
  check(cfg.scenario.radio.alpha > 0.0, "radio.alpha", "must be > 0");
  check(cfg.scenario.radio.sigma_db >= 0.0, "radio.sigma_db", "must be >= 0");
  check(cfg.scenario.radio.d0_m == 1.0, "radio.d0_m",
        "must be 1.0 (the measurement model folds the reference distance in at 1 m)");
  check(cfg.scenario.attack.sigma_attack_m >= 0.0, "attack.sigma_attack_m", "must be >= 0");
  check(cfg.detector.gamma >= 0.0, "detector.gamma", "must be >= 0");
  check(cfg.detector.delta_floor_m >= 0.0, "detector.delta_floor_m", "must be >= 0");
  check(cfg.detector.maha_floor >= 0.0, "detector.maha_floor", "must be >= 0");
  check(cfg.detector.maha_variance_floor >= 0.0, "detector.maha_variance_floor", "must be >= 0");
  check(cfg.detector.maha_confirm_steps >= 1, "detector.maha_confirm_steps", "must be >= 1");
  check(cfg.detector.warmup >= 0, "detector.warmup", "must be >= 0");
  check(cfg.detector.window >= 2, "detector.window", "must be >= 2");
  check(cfg.detector.maha_margin >= 1.0, "detector.maha_margin", "must be >= 1");
  check(cfg.detector.min_anchors >= 3, "detector.min_anchors", "must be >= 3");
  check(cfg.detector.min_spread_m >= 0.0, "detector.min_spread_m", "must be >= 0");
  check(cfg.tracker.process_noise_q >= 0.0, "tracker.process_noise_q", "must be >= 0");
  check(cfg.tracker.innovation_gate_sigma >= 0.0, "tracker.innovation_gate_sigma", "must be >= 0");
  check(cfg.tracker.info_dominance_cap >= 0.0, "tracker.info_dominance_cap", "must be >= 0");
  check(cfg.tracker.initial_cov_diag.minCoeff() >= 0.0, "tracker.initial_cov_diag",
        "entries must be >= 0");
  check(cfg.sweep.trials >= 1, "sweep.trials", "must be >= 1");
  check(cfg.sweep.threads >= 0, "sweep.threads", "must be >= 0");
  check(cfg.calibration.runs >= 1, "calibration.runs", "must be >= 1");
  check(cfg.calibration.percentile > 0.0 && cfg.calibration.percentile <= 100.0,
        "calibration.percentile", "must be in (0, 100]");
  check(cfg.calibration.delta_floor_percentile > 0.0 &&
            cfg.calibration.delta_floor_percentile <= 100.0,
        "calibration.delta_floor_percentile", "must be in (0, 100]");
  check(cfg.calibration.maha_floor_percentile > 0.0 &&
            cfg.calibration.maha_floor_percentile <= 100.0,
        "calibration.maha_floor_percentile", "must be in (0, 100]");
}

nlohmann::ordered_json to_json(const CliConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["scenario"] = {{"field_w_m", cfg.scenario.field_w_m},
                   {"field_h_m", cfg.scenario.field_h_m},
                   {"n_anchors", cfg.scenario.n_anchors},
                   {"n_malicious", cfg.scenario.n_malicious},
                   {"n_steps", cfg.scenario.n_steps},
                   {"start_m", {cfg.scenario.start_m.x(), cfg.scenario.start_m.y()}},
                   {"velocity_m_per_step",
                    {cfg.scenario.velocity_m_per_step.x(), cfg.scenario.velocity_m_per_step.y()}}};
  j["radio"] = {{"p0_db", cfg.scenario.radio.p0_db},
                {"alpha", cfg.scenario.radio.alpha},
                {"d0_m", cfg.scenario.radio.d0_m},
                {"sigma_db", cfg.scenario.radio.sigma_db}};
  j["attack"] = {{"kind", to_string(cfg.scenario.attack.kind)},
                 {"sigma_attack_m", cfg.scenario.attack.sigma_attack_m},
                 {"bias_db", cfg.scenario.attack.bias_db},
                 {"persistent", cfg.scenario.attack.persistent}};
  j["detector"] = {{"mode", to_string(cfg.detector.mode)},
                   {"gamma", cfg.detector.gamma},
                   {"delta_floor_m", cfg.detector.delta_floor_m},
                   {"warmup", cfg.detector.warmup},
                   {"window", cfg.detector.window},
                   {"maha_margin", cfg.detector.maha_margin},
                   {"maha_floor", cfg.detector.maha_floor},
                   {"maha_variance_floor", cfg.detector.maha_variance_floor},
                   {"maha_confirm_steps", cfg.detector.maha_confirm_steps},
                   {"min_anchors", cfg.detector.min_anchors},
                   {"min_spread_m", cfg.detector.min_spread_m}};
  j["tracker"] = {{"process_noise_q", cfg.tracker.process_noise_q},
                  {"innovation_gate_sigma", cfg.tracker.innovation_gate_sigma},
                  {"info_dominance_cap", cfg.tracker.info_dominance_cap},
                  {"initial_cov_diag",
                   {cfg.tracker.initial_cov_diag[0], cfg.tracker.initial_cov_diag[1],
                    cfg.tracker.initial_cov_diag[2], cfg.tracker.initial_cov_diag[3]}}};
  j["sweep"] = {{"axis", to_string(cfg.sweep.axis)},
                {"values", cfg.sweep.values},
                {"trials", cfg.sweep.trials},
                {"threads", cfg.sweep.threads}};
  j["calibration"] = {{"runs", cfg.calibration.runs},
                      {"percentile", cfg.calibration.percentile},
                      {"delta_floor_percentile", cfg.calibration.delta_floor_percentile},
                      {"maha_floor_percentile", cfg.calibration.maha_floor_percentile}};
  j["output"] = {{"dir", cfg.output.dir}};
  return j;
}

}  // namespace sectrack
