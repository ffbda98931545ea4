#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "intact/metrics.hpp"
#include "intact/types.hpp"

namespace intact {

struct TrainSummary {
  int best_epoch = -1;
  int stopped_epoch = 0;
  double best_val_elbo = 0.0;
  double wall_seconds = 0.0;  // informational
  bool grad_clip_enabled = false;
};

// One experiment run. Everything except wall_seconds and timestamp is a
// deterministic function of (config, master seed, run coordinates).
struct RunRecord {
  std::string kind;             // synthetic | ihdp | verify_ident | verify_thm3
  nlohmann::json coordinates;   // run coordinates within the sweep
  std::uint64_t seed = 0;       // derived per-run seed
  std::string config_hash;
  std::optional<EvalReport> pre_report;
  std::optional<EvalReport> post_report;
  TrainSummary train_summary;
  std::string timestamp;        // informational
  bool failed = false;
  std::string error;
  nlohmann::json extra;         // diagnostics, scatter data, verify results

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// 16-hex FNV-1a digest of a canonical JSON dump
std::string config_hash_of(const nlohmann::json& canonical_config);

// Structural validation against schema/run_record.schema.v1.json.
bool validate_run_record(const nlohmann::json& j, std::string* why = nullptr);

void write_records_jsonl(const std::string& path,
                         const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_jsonl(const std::string& path);

// Aggregated outputs: per-group mean/std CSV, a markdown results table, and
// recovered-vs-true latent scatter plots for records carrying scatter data.
void render_csv_summary(const std::vector<RunRecord>& records,
                        const std::string& path);
void render_markdown_table(const std::vector<RunRecord>& records,
                           const std::string& path);
// returns the files written, one per record with scatter data
std::vector<std::string> render_scatter_plots(
    const std::vector<RunRecord>& records, const std::string& out_dir);

void write_scatter_svg(const std::string& path, const VectorXd& z_true,
                       const VectorXd& z_hat, const VectorXi& t,
                       const std::string& title);

}  // namespace intact
