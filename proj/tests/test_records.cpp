#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "intact/checkpoint.hpp"
#include "intact/record.hpp"
#include "test_util.hpp"

using namespace intact;
namespace fs = std::filesystem;

namespace {

RunRecord sample_record(double alpha, double pehe) {
  RunRecord r;
  r.kind = "synthetic";
  r.coordinates = {{"structure", "proxy"}, {"family", "nonlinear"},
                   {"alpha", alpha}, {"beta", 0.2}, {"dgp_index", 0}};
  r.seed = 42;
  r.config_hash = "0123456789abcdef";
  EvalReport post;
  post.eps_ate = 0.1;
  post.sqrt_pehe = pehe;
  post.mode = EstimateMode::post;
  post.split = "train+val";
  AffineFit fit;
  fit.a0 = 1.0;
  fit.a1 = 1.1;
  fit.r2_pooled = 0.9;
  fit.group_consistency = 0.09;
  post.affine = fit;
  r.post_report = post;
  r.train_summary.best_epoch = 3;
  r.train_summary.stopped_epoch = 14;
  r.train_summary.best_val_elbo = -1.25;
  r.timestamp = "2000-01-01T00:00:00Z";
  r.extra = {{"rejected_draws", 0}};
  return r;
}

}  // namespace

TEST_CASE("run records round-trip through JSON and validate") {
  RunRecord r = sample_record(0.2, 0.7);
  nlohmann::json j = r.to_json();
  std::string why;
  CHECK(validate_run_record(j, &why));

  RunRecord back = RunRecord::from_json(j);
  CHECK(back.to_json() == j);

  nlohmann::json broken = j;
  broken.erase("seed");
  CHECK_FALSE(validate_run_record(broken, &why));
  CHECK(why.find("seed") != std::string::npos);

  broken = j;
  broken["post"]["mode"] = "sideways";
  CHECK_FALSE(validate_run_record(broken, &why));

  broken = j;
  broken["kind"] = "mystery";
  CHECK_FALSE(validate_run_record(broken, &why));

  broken = j;
  broken["train"].erase("best_epoch");
  CHECK_FALSE(validate_run_record(broken, &why));
}

TEST_CASE("schema document and validator agree on the emitted shape") {
  std::ifstream in(std::string(SCHEMA_DIR) + "/run_record.schema.v1.json");
  REQUIRE(in);
  nlohmann::json schema = nlohmann::json::parse(in);
  // every required key of the schema is present in an emitted record
  nlohmann::json j = sample_record(0.2, 0.7).to_json();
  for (const auto& key : schema.at("required"))
    CHECK(j.contains(key.get<std::string>()));
  CHECK(j["schema"] == schema["$id"]);
}

TEST_CASE("jsonl write/read round trip") {
  std::vector<RunRecord> records = {sample_record(0.2, 0.7),
                                    sample_record(0.4, 0.9)};
  const std::string path = "records_test.jsonl";
  write_records_jsonl(path, records);
  auto back = read_records_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].to_json() == records[0].to_json());
  CHECK(back[1].to_json() == records[1].to_json());
  std::remove(path.c_str());
}

TEST_CASE("csv summary has one data row per group and mode") {
  std::vector<RunRecord> records = {sample_record(0.2, 0.7),
                                    sample_record(0.4, 0.9)};
  const std::string path = "summary_test.csv";
  render_csv_summary(records, path);
  std::ifstream in(path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 3);  // header + two groups (post mode only)
  std::remove(path.c_str());
}

TEST_CASE("markdown table mirrors the results layout") {
  std::vector<RunRecord> records = {sample_record(0.2, 0.7),
                                    sample_record(0.2, 0.8)};
  const std::string path = "table_test.md";
  render_markdown_table(records, path);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("| method |") != std::string::npos);
  CHECK(text.find("eps_ate") != std::string::npos);
  CHECK(text.find("sqrt_pehe") != std::string::npos);
  CHECK(text.find("±") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("scatter plots are emitted per record with deterministic names") {
  RunRecord r = sample_record(0.2, 0.7);
  r.extra["scatter"] = {{"z_true", std::vector<double>{0, 1, 2, 3}},
                        {"z_hat", std::vector<double>{0.1, 1.2, 1.9, 3.1}},
                        {"t", std::vector<int>{0, 1, 0, 1}}};
  const std::string dir = "plots_test";
  auto files = render_scatter_plots({r}, dir);
  REQUIRE(files.size() == 1);
  CHECK(files[0].find("scatter_synthetic") != std::string::npos);
  std::ifstream in(files[0]);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(text.find("circle") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("checkpoints round-trip parameters and configuration") {
  ModelConfig cfg;
  cfg.covariate_dim = 4;
  cfg.latent_dim = 2;
  cfg.hidden = {8, 8};
  cfg.separate_decoder_heads = true;
  auto params = init_params(cfg, 99);
  const std::string path = "ckpt_test.bin";
  save_checkpoint(path, params);
  ModelParams back = load_checkpoint(path);
  CHECK(back.theta == params.theta);
  CHECK(back.config.hidden == cfg.hidden);
  CHECK(back.config.separate_decoder_heads == cfg.separate_decoder_heads);
  CHECK(back.nets.size() == params.nets.size());
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_checkpoint("missing_ckpt.bin"), io_error);
}

TEST_CASE("config hash is stable and input-sensitive") {
  nlohmann::json a = {{"x", 1}, {"y", "z"}};
  CHECK(config_hash_of(a) == config_hash_of(a));
  CHECK(config_hash_of(a).size() == 16);
  nlohmann::json b = {{"x", 2}, {"y", "z"}};
  CHECK(config_hash_of(a) != config_hash_of(b));
}
