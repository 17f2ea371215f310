#include "ehn/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ehn::csv {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string("nan");
}

namespace {

std::string int_text(long long v) { return std::to_string(v); }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end) throw CsvError("not a number: '" + s + "'");
  return v;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw CsvError("no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  return parse_double(rows.at(row).at(column(name)));
}

const std::string& Table::text(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

Table parse_table(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(t.header.size()) + " fields, found " +
                     std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (first) throw CsvError("empty CSV (no header)");
  return t;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_table(buf.str());
  } catch (const CsvError& e) {
    throw CsvError(path.string() + ": " + e.what());
  }
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CsvError("cannot write " + path.string());
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!out) throw CsvError("write failed for " + path.string());
}

Table policy_table(const StateSpace& space, const Policy& policy, std::optional<int> energy) {
  Table t{kPolicyHeader, {}};
  for (std::size_t i = 0; i < space.size(); ++i) {
    const State& s = space.state(i);
    if (energy && s.e != *energy) continue;
    const auto& p = policy[i];
    t.rows.push_back({int_text(s.e), int_text(s.q_lp), int_text(s.q_hp), format_number(p[0]),
                      format_number(p[1]), format_number(p[2])});
  }
  return t;
}

Policy read_policy(const std::filesystem::path& path, const StateSpace& space) {
  const Table t = read_table(path);
  for (const auto& name : kPolicyHeader) t.column(name);
  std::vector<std::array<double, kNumActions>> probs(space.size());
  std::vector<char> seen(space.size(), 0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto as_int = [&](const std::string& name) {
      const double v = t.number(r, name);
      if (v != std::floor(v)) throw CsvError(path.string() + ": non-integer " + name);
      return static_cast<int>(v);
    };
    const State s{as_int("e"), as_int("q_lp"), as_int("q_hp")};
    if (!space.contains(s))
      throw CsvError(path.string() + ": row " + std::to_string(r + 2) + " is outside the state space");
    const std::size_t i = space.index(s);
    if (seen[i]++)
      throw CsvError(path.string() + ": duplicate state on row " + std::to_string(r + 2));
    probs[i] = {t.number(r, "p_harvest"), t.number(r, "p_tx_lp"), t.number(r, "p_tx_hp")};
  }
  const auto missing = std::count(seen.begin(), seen.end(), 0);
  if (missing > 0)
    throw CsvError(path.string() + ": " + std::to_string(missing) + " states have no row");
  // Files hold 9 significant digits; renormalize the rounding away.
  for (auto& row : probs) {
    double total = 0.0;
    for (double p : row) total += p;
    if (!(total > 0.0) || std::abs(total - 1.0) > 1e-6)
      throw CsvError(path.string() + ": a policy row does not sum to 1");
    for (double& p : row) p /= total;
  }
  Policy policy(std::move(probs));
  try {
    policy.validate();
  } catch (const ModelError& e) {
    throw CsvError(path.string() + ": " + e.what());
  }
  return policy;
}

Table report_table(const SolveReport& report) {
  const bool ok = report.feasible();
  const double nan = std::nan("");
  return {kReportHeader,
          {{to_string(report.status), format_number(ok ? report.objective : nan),
            format_number(ok ? report.constraint_lp : nan),
            format_number(ok ? report.constraint_hp : nan), std::to_string(report.iterations)}}};
}

Table metrics_table(std::span<const std::pair<std::string, Metrics>> rows) {
  Table t{kMetricsHeader, {}};
  for (const auto& [label, m] : rows)
    t.rows.push_back({label, format_number(m.throughput_lp), format_number(m.throughput_hp),
                      format_number(m.loss_lp), format_number(m.loss_hp), format_number(m.drop_lp),
                      format_number(m.drop_hp), format_number(m.delay_lp),
                      format_number(m.delay_hp), format_number(m.objective)});
  return t;
}

Table sim_metrics_table(std::span<const std::pair<std::string, SimTrace>> rows,
                        const SimConfig& cfg) {
  Table t{kSimMetricsHeader, {}};
  const auto est = [](std::vector<std::string>& r, const Estimate& e) {
    r.push_back(format_number(e.mean));
    r.push_back(format_number(e.std_error));
  };
  const auto opt_est = [](std::vector<std::string>& r, const std::optional<Estimate>& e) {
    r.push_back(format_number(e ? std::optional<double>(e->mean) : std::nullopt));
    r.push_back(format_number(e ? std::optional<double>(e->std_error) : std::nullopt));
  };
  for (const auto& [label, trace] : rows) {
    const auto& m = trace.metrics;
    std::vector<std::string> r{label};
    est(r, m.throughput_lp);
    est(r, m.throughput_hp);
    est(r, m.loss_lp);
    est(r, m.loss_hp);
    est(r, m.drop_lp);
    est(r, m.drop_hp);
    opt_est(r, m.delay_lp);
    opt_est(r, m.delay_hp);
    est(r, m.objective);
    r.push_back(std::to_string(cfg.slots));
    r.push_back(std::to_string(cfg.warmup_slots));
    r.push_back(trace.generator);
    r.push_back(std::to_string(trace.seed));
    t.rows.push_back(std::move(r));
  }
  return t;
}

Table weight_sweep_table(std::span<const WeightRow> rows) {
  Table t{kWeightSweepHeader, {}};
  const double nan = std::nan("");
  for (const auto& row : rows) {
    const auto& m = row.point.metrics;
    const auto get = [&](auto field) { return m ? format_number((*m).*field) : format_number(nan); };
    t.rows.push_back({format_number(row.w_hp), get(&Metrics::throughput_lp),
                      get(&Metrics::throughput_hp), m ? format_number(m->delay_lp) : "nan",
                      m ? format_number(m->delay_hp) : "nan", get(&Metrics::loss_lp),
                      get(&Metrics::loss_hp), get(&Metrics::objective),
                      to_string(row.point.report.status)});
  }
  return t;
}

Table arrival_sweep_table(std::span<const ArrivalRow> rows) {
  Table t{kArrivalSweepHeader, {}};
  const double nan = std::nan("");
  for (const auto& row : rows) {
    const auto& m = row.optimal.metrics;
    const auto& st = row.static_metrics;
    const auto opt = [&](auto field) { return m ? format_number((*m).*field) : format_number(nan); };
    const auto sta = [&](auto field) { return st ? format_number((*st).*field) : format_number(nan); };
    t.rows.push_back({format_number(row.rate), opt(&Metrics::loss_lp), opt(&Metrics::loss_hp),
                      sta(&Metrics::loss_lp), sta(&Metrics::loss_hp), opt(&Metrics::throughput_lp),
                      opt(&Metrics::throughput_hp), sta(&Metrics::throughput_lp),
                      sta(&Metrics::throughput_hp), to_string(row.optimal.report.status)});
  }
  return t;
}

Table trace_table(std::span<const SlotRecord> records) {
  Table t{kTraceHeader, {}};
  t.rows.reserve(records.size());
  for (const auto& r : records)
    t.rows.push_back({std::to_string(r.slot), int_text(r.state.e), int_text(r.state.q_lp),
                      int_text(r.state.q_hp), std::string(to_string(r.action)),
                      r.tx_success ? "1" : "0", int_text(r.arrivals_lp), int_text(r.arrivals_hp),
                      int_text(r.drops_lp), int_text(r.drops_hp)});
  return t;
}

}  // namespace ehn::csv
