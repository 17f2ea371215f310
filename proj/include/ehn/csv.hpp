#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ehn/cmdp.hpp"
#include "ehn/evaluate.hpp"
#include "ehn/experiments.hpp"
#include "ehn/simulator.hpp"

namespace ehn::csv {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numbers are written with 9 significant digits; missing values as `nan`.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws CsvError
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
};

Table read_table(const std::filesystem::path& path);
Table parse_table(const std::string& text);
void write_table(const std::filesystem::path& path, const Table& table);

// Fixed schemas. Each builder returns the table; callers write it.
inline const std::vector<std::string> kPolicyHeader{"e",         "q_lp",    "q_hp",
                                                    "p_harvest", "p_tx_lp", "p_tx_hp"};
inline const std::vector<std::string> kReportHeader{"status", "objective", "loss_lp", "loss_hp",
                                                    "iterations"};
inline const std::vector<std::string> kMetricsHeader{
    "policy",  "thr_lp",  "thr_hp",   "loss_lp",  "loss_hp",  "drop_lp",
    "drop_hp", "delay_lp", "delay_hp", "objective"};
inline const std::vector<std::string> kSimMetricsHeader{
    "policy",      "thr_lp",   "thr_lp_se",   "thr_hp",    "thr_hp_se",    "loss_lp",
    "loss_lp_se",  "loss_hp",  "loss_hp_se",  "drop_lp",   "drop_lp_se",   "drop_hp",
    "drop_hp_se",  "delay_lp", "delay_lp_se", "delay_hp",  "delay_hp_se",  "objective",
    "objective_se", "slots",   "warmup",      "generator", "seed"};
inline const std::vector<std::string> kWeightSweepHeader{
    "w_hp", "thr_lp", "thr_hp", "delay_lp", "delay_hp", "loss_lp", "loss_hp", "objective", "status"};
inline const std::vector<std::string> kArrivalSweepHeader{
    "rate",          "opt_loss_lp",   "opt_loss_hp", "static_loss_lp", "static_loss_hp",
    "opt_thr_lp",    "opt_thr_hp",    "static_thr_lp", "static_thr_hp", "status"};
inline const std::vector<std::string> kTraceHeader{"slot",   "e",      "q_lp",    "q_hp",
                                                   "action", "tx_success", "arr_lp", "arr_hp",
                                                   "drop_lp", "drop_hp"};

/// Every state in index order; with `energy`, only that battery level.
Table policy_table(const StateSpace& space, const Policy& policy,
                   std::optional<int> energy = std::nullopt);
/// Reads a full policy file and checks it covers `space` exactly once.
Policy read_policy(const std::filesystem::path& path, const StateSpace& space);

Table report_table(const SolveReport& report);
Table metrics_table(std::span<const std::pair<std::string, Metrics>> rows);
Table sim_metrics_table(std::span<const std::pair<std::string, SimTrace>> rows,
                        const SimConfig& cfg);
Table weight_sweep_table(std::span<const WeightRow> rows);
Table arrival_sweep_table(std::span<const ArrivalRow> rows);
Table trace_table(std::span<const SlotRecord> records);

}  // namespace ehn::csv
