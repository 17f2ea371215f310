#include "ehn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace ehn {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Failures while converting one value; rethrown with line and key.
struct ValueError {
  std::string what;
};

template <typename T>
T parse_number(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end)
    throw ValueError{"'" + std::string(s) + "' is not a valid " +
                     (std::is_integral_v<T> ? "integer" : "number")};
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw ValueError{"'" + std::string(s) + "' is not finite"};
  return v;
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  for (auto item : split(s, ',')) out.push_back(parse_number<double>(item));
  return out;
}

std::vector<HarvestOutcome> parse_harvest(std::string_view s) {
  std::vector<HarvestOutcome> out;
  for (auto item : split(s, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw ValueError{"harvest entry '" + std::string(item) + "' must be units:prob"};
    out.push_back({parse_number<int>(trim(item.substr(0, colon))),
                   parse_number<double>(trim(item.substr(colon + 1)))});
  }
  return out;
}

std::optional<double> parse_limit(std::string_view s) {
  if (s == "unbounded") return std::nullopt;
  return parse_number<double>(s);
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

struct KeySpec {
  bool required;
  Setter set;
};

const std::map<std::string, KeySpec, std::less<>>& key_table() {
  static const std::map<std::string, KeySpec, std::less<>> table = {
      {"e_max", {true, [](auto& c, auto v) { c.model.e_max = parse_number<int>(v); }}},
      {"q_lp_max", {true, [](auto& c, auto v) { c.model.q_lp_max = parse_number<int>(v); }}},
      {"q_hp_max", {true, [](auto& c, auto v) { c.model.q_hp_max = parse_number<int>(v); }}},
      {"k_tx", {true, [](auto& c, auto v) { c.model.k_tx = parse_number<int>(v); }}},
      {"mu", {true, [](auto& c, auto v) { c.model.mu = parse_number<double>(v); }}},
      {"harvest", {true, [](auto& c, auto v) { c.model.harvest = parse_harvest(v); }}},
      {"arrival_lp", {true, [](auto& c, auto v) { c.model.arrival_lp = parse_list(v); }}},
      {"arrival_hp", {true, [](auto& c, auto v) { c.model.arrival_hp = parse_list(v); }}},
      {"weight_lp", {true, [](auto& c, auto v) { c.model.weight_lp = parse_number<double>(v); }}},
      {"weight_hp", {true, [](auto& c, auto v) { c.model.weight_hp = parse_number<double>(v); }}},
      {"loss_limit_lp", {true, [](auto& c, auto v) { c.model.loss_limit_lp = parse_limit(v); }}},
      {"loss_limit_hp", {true, [](auto& c, auto v) { c.model.loss_limit_hp = parse_limit(v); }}},
      {"slots", {false, [](auto& c, auto v) { c.slots = parse_number<std::uint64_t>(v); }}},
      {"warmup", {false, [](auto& c, auto v) { c.warmup_slots = parse_number<std::uint64_t>(v); }}},
      {"seed", {false, [](auto& c, auto v) { c.seed = parse_number<std::uint64_t>(v); }}},
      {"sweep_weights", {false, [](auto& c, auto v) { c.sweep_weights = parse_list(v); }}},
      {"sweep_rates", {false, [](auto& c, auto v) { c.sweep_rates = parse_list(v); }}},
      {"out_dir",
       {false,
        [](auto& c, auto v) {
          if (v.empty()) throw ValueError{"empty path"};
          c.out_dir = std::string(v);
        }}},
      {"slice_energy", {false, [](auto& c, auto v) { c.slice_energy = parse_number<int>(v); }}},
  };
  return table;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
  return out;
}

std::vector<double> grid(double first, double step, int count) {
  std::vector<double> out;
  // Multiply rather than accumulate so grid points print exactly.
  for (int i = 0; i < count; ++i) out.push_back(std::round((first + step * i) * 1e12) / 1e12);
  return out;
}

}  // namespace

std::vector<double> default_sweep_weights() { return grid(0.50, 0.05, 10); }
std::vector<double> default_sweep_rates() { return grid(0.05, 0.05, 9); }

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  cfg.sweep_weights = default_sweep_weights();
  cfg.sweep_rates = default_sweep_rates();
  const auto& table = key_table();
  std::map<std::string, std::size_t, std::less<>> seen;

  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no, "");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'", line_no, key);
    if (auto [prev, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                            "' (first set on line " + std::to_string(prev->second) + ")",
                        line_no, key);
    try {
      it->second.set(cfg, value);
    } catch (const ValueError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "': " + e.what,
                        line_no, key);
    }
  }

  std::vector<std::string> missing;
  for (const auto& [key, spec] : table)
    if (spec.required && !seen.contains(key)) missing.push_back(key);
  if (!missing.empty()) {
    std::string msg = "missing required keys:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg, 0, missing.front());
  }

  try {
    cfg.model.validate();
  } catch (const ModelError& e) {
    const std::string what = e.what();
    const std::string key = what.substr(0, what.find_first_of(" :"));
    const auto at = seen.find(key);
    throw ConfigError(what, at == seen.end() ? 0 : at->second, key);
  }
  if (cfg.slots < 1) throw ConfigError("slots must be >= 1", seen["slots"], "slots");
  if (cfg.warmup_slots >= cfg.slots)
    throw ConfigError("warmup must be smaller than slots", seen["warmup"], "warmup");
  for (double w : cfg.sweep_weights)
    if (w < 0.0 || w > 1.0)
      throw ConfigError("sweep_weights entries must lie in [0,1]", seen["sweep_weights"], "sweep_weights");
  for (double r : cfg.sweep_rates)
    if (r < 0.0 || r > 1.0)
      throw ConfigError("sweep_rates entries must lie in [0,1]", seen["sweep_rates"], "sweep_rates");
  if (cfg.slice_energy < 0 || cfg.slice_energy > cfg.model.e_max)
    throw ConfigError("slice_energy must lie in [0, e_max]", seen["slice_energy"], "slice_energy");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const ExperimentConfig& c) {
  const auto& m = c.model;
  std::ostringstream out;
  const auto limit = [](const std::optional<double>& l) { return l ? fmt(*l) : std::string("unbounded"); };
  std::string harvest;
  for (std::size_t i = 0; i < m.harvest.size(); ++i)
    harvest += (i ? "," : "") + std::to_string(m.harvest[i].units) + ":" + fmt(m.harvest[i].prob);
  out << "e_max = " << m.e_max << "\n"
      << "q_lp_max = " << m.q_lp_max << "\n"
      << "q_hp_max = " << m.q_hp_max << "\n"
      << "k_tx = " << m.k_tx << "\n"
      << "mu = " << fmt(m.mu) << "\n"
      << "harvest = " << harvest << "\n"
      << "arrival_lp = " << fmt_list(m.arrival_lp) << "\n"
      << "arrival_hp = " << fmt_list(m.arrival_hp) << "\n"
      << "weight_lp = " << fmt(m.weight_lp) << "\n"
      << "weight_hp = " << fmt(m.weight_hp) << "\n"
      << "loss_limit_lp = " << limit(m.loss_limit_lp) << "\n"
      << "loss_limit_hp = " << limit(m.loss_limit_hp) << "\n"
      << "slots = " << c.slots << "\n"
      << "warmup = " << c.warmup_slots << "\n"
      << "seed = " << c.seed << "\n"
      << "sweep_weights = " << fmt_list(c.sweep_weights) << "\n"
      << "sweep_rates = " << fmt_list(c.sweep_rates) << "\n"
      << "out_dir = " << c.out_dir << "\n"
      << "slice_energy = " << c.slice_energy << "\n";
  return out.str();
}

}  // namespace ehn
