#pragma once

// JSON run configuration: instance construction, point budget, tolerance
// overrides, check selection and output paths. Unknown keys are rejected at
// every level so that typos fail loudly instead of silently using defaults.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmob/metrics.hpp"

namespace kmob {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> v{"kahler",      "solution", "extended",
                                          "nullity",     "equivalence", "mobility",
                                          "f_poly",      "cproj",    "cone"};
  return v;
}

struct RunConfig {
  json raw;  // config echo for the report
  InstancePtr instance;
  int point_count = 8;
  std::uint64_t seed = 1;
  std::map<std::string, double> tolerances;
  std::vector<std::string> checks;  // expanded, dependency-ordered
  std::string report_path;
  std::string csv_path;
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

inline double get_num(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  if (!j[key].is_number()) throw ConfigError(where + ": \"" + key + "\" must be a number");
  return j[key].get<double>();
}

inline Polynomial parse_poly(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ConfigError(where + ": polynomial must be a nonempty coefficient array");
  std::vector<double> c;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": polynomial coefficients must be numbers");
    c.push_back(v.get<double>());
  }
  return Polynomial(c);
}

inline std::pair<double, double> parse_box(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": interval must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline InstancePtr parse_instance(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("instance: missing string field \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  InstancePtr inst;
  if (kind == "space_form") {
    reject_unknown(j, {"kind", "m", "c", "half_width", "scale"}, "instance(space_form)");
    const int m = static_cast<int>(get_num(j, "m", "space_form"));
    const double c = get_num(j, "c", "space_form");
    const double hw = j.contains("half_width") ? get_num(j, "half_width", "space_form") : 0.5;
    inst = std::make_shared<SpaceFormInstance>(m, c, hw);
  } else if (kind == "orthotoric4d") {
    reject_unknown(j, {"kind", "F1", "F2", "box1", "box2", "delta", "scale"},
                   "instance(orthotoric4d)");
    if (!j.contains("F1") || !j.contains("F2") || !j.contains("box1") || !j.contains("box2"))
      throw ConfigError("orthotoric4d: needs F1, F2, box1, box2");
    inst = make_orthotoric4d(parse_poly(j["F1"], "F1"), parse_poly(j["F2"], "F2"),
                             parse_box(j["box1"], "box1"), parse_box(j["box2"], "box2"),
                             j.contains("delta") ? get_num(j, "delta", "orthotoric4d") : 0.02);
  } else if (kind == "bundle") {
    reject_unknown(j, {"kind", "thetas", "etas", "boxes", "delta", "label", "scale"},
                   "instance(bundle)");
    if (!j.contains("thetas") || !j["thetas"].is_array())
      throw ConfigError("bundle: \"thetas\" must be an array of coefficient arrays");
    std::vector<Polynomial> thetas;
    for (const auto& t : j["thetas"]) thetas.push_back(parse_poly(t, "thetas"));
    std::vector<EtaBlock> etas;
    if (j.contains("etas")) {
      if (!j["etas"].is_array()) throw ConfigError("bundle: \"etas\" must be an array");
      for (const auto& e : j["etas"]) {
        reject_unknown(e, {"eta", "mult", "c"}, "bundle.etas[]");
        etas.push_back({get_num(e, "eta", "etas"),
                        static_cast<int>(e.contains("mult") ? get_num(e, "mult", "etas") : 1),
                        get_num(e, "c", "etas")});
      }
    }
    if (!j.contains("boxes") || !j["boxes"].is_array())
      throw ConfigError("bundle: \"boxes\" must be an array of intervals");
    std::vector<std::pair<double, double>> boxes;
    for (const auto& b : j["boxes"]) boxes.push_back(parse_box(b, "boxes"));
    inst = std::make_shared<BundleInstance>(
        thetas, etas, boxes, j.contains("delta") ? get_num(j, "delta", "bundle") : 0.02,
        j.contains("label") && j["label"].is_string() ? j["label"].get<std::string>()
                                                      : std::string("bundle"));
  } else if (kind == "product") {
    reject_unknown(j, {"kind", "factors", "eigenvalues", "half_width", "scale"},
                   "instance(product)");
    if (!j.contains("factors") || !j["factors"].is_array() || !j.contains("eigenvalues") ||
        !j["eigenvalues"].is_array())
      throw ConfigError("product: needs \"factors\" and \"eigenvalues\" arrays");
    std::vector<std::pair<int, double>> factors;
    for (const auto& f : j["factors"]) {
      if (!f.is_array() || f.size() != 2)
        throw ConfigError("product: each factor is [complex_dim, curvature]");
      factors.push_back({f[0].get<int>(), f[1].get<double>()});
    }
    std::vector<double> consts;
    for (const auto& c : j["eigenvalues"]) consts.push_back(c.get<double>());
    inst = std::make_shared<ProductInstance>(
        factors, consts, j.contains("half_width") ? get_num(j, "half_width", "product") : 0.4);
  } else {
    throw ConfigError("instance: unknown kind \"" + kind + "\"");
  }
  if (j.contains("scale"))
    inst = std::make_shared<ScaledInstance>(inst, get_num(j, "scale", "instance"));
  return inst;
}

// Expand "all" and order by dependency: kahler, solution, extended first.
inline std::vector<std::string> order_checks(std::vector<std::string> req) {
  std::set<std::string> want;
  for (const auto& c : req) {
    if (c == "all") {
      for (const auto& k : known_checks()) want.insert(k);
    } else {
      bool known = false;
      for (const auto& k : known_checks()) known = known || (k == c);
      if (!known) throw ConfigError("checks: unknown check \"" + c + "\"");
      want.insert(c);
    }
  }
  // checks that consume the fitted constant pull in the estimation chain
  for (const auto& c : {"nullity", "equivalence", "f_poly", "cone"})
    if (want.count(c)) want.insert("extended");
  if (want.count("extended")) want.insert("solution");
  if (want.count("solution")) want.insert("kahler");
  std::vector<std::string> out;
  for (const auto& k : known_checks())
    if (want.count(k)) out.push_back(k);
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  detail::reject_unknown(j, {"instance", "points", "tolerances", "checks", "output"},
                         "config");
  if (!j.contains("instance")) throw ConfigError("config: missing \"instance\"");
  RunConfig cfg;
  cfg.raw = j;
  try {
    cfg.instance = detail::parse_instance(j["instance"]);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConstructionError(std::string("instance construction failed: ") + e.what());
  }
  if (j.contains("points")) {
    detail::reject_unknown(j["points"], {"count", "seed"}, "points");
    if (j["points"].contains("count"))
      cfg.point_count = static_cast<int>(detail::get_num(j["points"], "count", "points"));
    if (j["points"].contains("seed"))
      cfg.seed = static_cast<std::uint64_t>(detail::get_num(j["points"], "seed", "points"));
    if (cfg.point_count < 1) throw ConfigError("points.count must be >= 1");
  }
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) throw ConfigError("tolerances: expected an object");
    for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
      bool known = false;
      for (const auto& k : known_checks()) known = known || (k == it.key());
      if (!known) throw ConfigError("tolerances: unknown check \"" + it.key() + "\"");
      if (!it.value().is_number())
        throw ConfigError("tolerances: values must be numbers");
      cfg.tolerances[it.key()] = it.value().get<double>();
    }
  }
  std::vector<std::string> req;
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("checks: expected an array");
    for (const auto& c : j["checks"]) {
      if (!c.is_string()) throw ConfigError("checks: entries must be strings");
      req.push_back(c.get<std::string>());
    }
  } else {
    req.push_back("all");
  }
  cfg.checks = detail::order_checks(req);
  if (j.contains("output")) {
    detail::reject_unknown(j["output"], {"report", "csv"}, "output");
    if (j["output"].contains("report"))
      cfg.report_path = j["output"]["report"].get<std::string>();
    if (j["output"].contains("csv")) cfg.csv_path = j["output"]["csv"].get<std::string>();
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace kmob
