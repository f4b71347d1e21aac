#pragma once

// Plain-text instance configuration:
//
//   # comment
//   alpha  = (-1 + 1*sqrt(5)) / 2
//   Q      = 2
//   phi    = [[1], [-1]]
//   k_max  = 40
//   trials = 200000
//   seed   = 20240817
//   out    = out
//   format = csv
//   cap_explicit_block   = 10000000
//   cap_streaming        = 12000000
//   cap_cf               = 10000
//   cap_max_level        = 4096
//   cap_period_extension = 10000
//
// `key = value` per line, `#` comments, JSON for the nested phi array.
// Validation (centering, irrationality, lattice certificate) runs eagerly.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renorm/blocks.hpp"
#include "renorm/stats.hpp"
#include "renorm/surd.hpp"

namespace renorm {

struct InstanceConfig {
  std::string origin;  // file path or "<inline>"
  Surd alpha;
  int Q = 0;
  int d = 0;
  std::vector<Vec> phi;
  int k_max = 40;
  Caps caps;
  std::int64_t trials = 200'000;
  std::uint64_t seed = 20240817;
  std::string out_dir = "out";
  std::string format = "csv";
  LatticeCertificate lattice;

  StepCocycle cocycle() const { return StepCocycle(Q, phi); }
  RenormModel model() const { return RenormModel(alpha, cocycle(), caps); }
};

namespace detail {

inline std::int64_t parse_int(const std::string& v, const std::string& key, int line) {
  try {
    size_t used = 0;
    std::int64_t r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line) + ": key '" + key +
                       "' expects an integer, got '" + v + "'");
  }
}

}  // namespace detail

inline InstanceConfig parse_config_text(const std::string& text,
                                        const std::string& origin) {
  InstanceConfig cfg;
  cfg.origin = origin;
  bool saw_alpha = false, saw_q = false, saw_phi = false;
  nlohmann::json phi_json;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (size_t h = s.find('#'); h != std::string::npos) s.erase(h);
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
    size_t b = 0;
    while (b < s.size() && is_space(static_cast<unsigned char>(s[b]))) ++b;
    s.erase(0, b);
    if (s.empty()) continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line) + ": expected 'key = value', got '" +
                         s + "'");
    std::string key = s.substr(0, eq), val = s.substr(eq + 1);
    while (!key.empty() && is_space(static_cast<unsigned char>(key.back()))) key.pop_back();
    size_t vb = 0;
    while (vb < val.size() && is_space(static_cast<unsigned char>(val[vb]))) ++vb;
    val.erase(0, vb);
    if (key.empty() || val.empty())
      throw config_error("line " + std::to_string(line) + ": empty key or value");

    if (key == "alpha") {
      try {
        cfg.alpha = Surd::parse(val);
      } catch (const std::exception& e) {
        throw config_error("line " + std::to_string(line) + ": alpha: " + e.what());
      }
      saw_alpha = true;
    } else if (key == "Q") {
      cfg.Q = static_cast<int>(detail::parse_int(val, key, line));
      saw_q = true;
    } else if (key == "phi") {
      phi_json = nlohmann::json::parse(val, nullptr, false);
      if (phi_json.is_discarded() || !phi_json.is_array())
        throw config_error("line " + std::to_string(line) +
                           ": phi expects a JSON array of integer vectors");
      saw_phi = true;
    } else if (key == "k_max") {
      cfg.k_max = static_cast<int>(detail::parse_int(val, key, line));
    } else if (key == "trials") {
      cfg.trials = detail::parse_int(val, key, line);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::parse_int(val, key, line));
    } else if (key == "out") {
      cfg.out_dir = val;
    } else if (key == "format") {
      if (val != "csv" && val != "json")
        throw config_error("line " + std::to_string(line) + ": format must be csv or json");
      cfg.format = val;
    } else if (key == "cap_explicit_block") {
      cfg.caps.explicit_block = detail::parse_int(val, key, line);
    } else if (key == "cap_streaming") {
      cfg.caps.streaming = detail::parse_int(val, key, line);
    } else if (key == "cap_cf") {
      cfg.caps.cf = static_cast<int>(detail::parse_int(val, key, line));
    } else if (key == "cap_max_level") {
      cfg.caps.max_level = static_cast<int>(detail::parse_int(val, key, line));
    } else if (key == "cap_period_extension") {
      cfg.caps.period_extension = static_cast<int>(detail::parse_int(val, key, line));
    } else {
      throw config_error("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  if (!saw_alpha) throw config_error(origin + ": missing key 'alpha'");
  if (!saw_q) throw config_error(origin + ": missing key 'Q'");
  if (!saw_phi) throw config_error(origin + ": missing key 'phi'");
  if (cfg.Q < 1) throw config_error(origin + ": Q must be >= 1");
  if (static_cast<int>(phi_json.size()) != cfg.Q)
    throw config_error(origin + ": phi must list exactly Q vectors");

  for (const auto& row : phi_json) {
    if (!row.is_array() || row.empty() || static_cast<int>(row.size()) > kMaxDim)
      throw config_error(origin + ": each phi entry must be a vector of 1.." +
                         std::to_string(kMaxDim) + " integers");
    Vec v(static_cast<int>(row.size()));
    for (size_t i = 0; i < row.size(); ++i) {
      if (!row[i].is_number_integer())
        throw config_error(origin + ": phi entries must be integers");
      v[static_cast<int>(i)] = row[i].get<std::int64_t>();
    }
    cfg.phi.push_back(v);
  }
  cfg.d = cfg.phi.front().dim;

  if (cfg.k_max < 1) throw config_error(origin + ": k_max must be >= 1");
  if (cfg.trials < 1) throw config_error(origin + ": trials must be >= 1");
  if (cfg.caps.explicit_block < 1 || cfg.caps.streaming < 1 || cfg.caps.cf < 1 ||
      cfg.caps.max_level < 1 || cfg.caps.period_extension < 1)
    throw config_error(origin + ": caps must be positive");

  // Eager validation: centering (cocycle constructor), irrationality and
  // range of alpha (model constructor), and the lattice certificate.
  StepCocycle phi_checked = cfg.cocycle();
  if (cfg.alpha.is_rational())
    throw config_error(origin + ": alpha must be a quadratic irrational, got a rational");
  RenormModel probe(cfg.alpha, phi_checked, cfg.caps);
  (void)probe;
  cfg.lattice = lattice_check(phi_checked);
  return cfg;
}

inline InstanceConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

/// Built-in reference instances.
inline InstanceConfig reference_instance_a() {
  InstanceConfig cfg = parse_config_text(
      "alpha = (-1 + 1*sqrt(5)) / 2\n"
      "Q = 2\n"
      "phi = [[1], [-1]]\n"
      "cap_streaming = 12000000\n",
      "<instance-a>");
  return cfg;
}

inline InstanceConfig reference_instance_b() {
  InstanceConfig cfg = parse_config_text(
      "alpha = (-1 + 1*sqrt(2)) / 1\n"
      "Q = 3\n"
      "phi = [[1,0], [0,1], [-1,-1]]\n"
      "cap_streaming = 12000000\n",
      "<instance-b>");
  return cfg;
}

}  // namespace renorm
