#include "intact/record.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace intact {

namespace {

nlohmann::json affine_to_json(const AffineFit& f) {
  return {{"a0", f.a0}, {"b0", f.b0}, {"r2_0", f.r2_0},
          {"a1", f.a1}, {"b1", f.b1}, {"r2_1", f.r2_1},
          {"a_pooled", f.a_pooled}, {"b_pooled", f.b_pooled},
          {"r2_pooled", f.r2_pooled},
          {"group_consistency", f.group_consistency}};
}

AffineFit affine_from_json(const nlohmann::json& j) {
  AffineFit f;
  f.a0 = j.at("a0");
  f.b0 = j.at("b0");
  f.r2_0 = j.at("r2_0");
  f.a1 = j.at("a1");
  f.b1 = j.at("b1");
  f.r2_1 = j.at("r2_1");
  f.a_pooled = j.at("a_pooled");
  f.b_pooled = j.at("b_pooled");
  f.r2_pooled = j.at("r2_pooled");
  f.group_consistency = j.at("group_consistency");
  return f;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["eps_ate"] = r.eps_ate;
  j["sqrt_pehe"] = r.sqrt_pehe;
  j["mode"] = mode_name(r.mode);
  j["split"] = r.split;
  j["affine"] = r.affine ? affine_to_json(*r.affine) : nlohmann::json(nullptr);
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.eps_ate = j.at("eps_ate");
  r.sqrt_pehe = j.at("sqrt_pehe");
  r.mode = j.at("mode") == "pre" ? EstimateMode::pre : EstimateMode::post;
  r.split = j.at("split");
  if (!j.at("affine").is_null()) r.affine = affine_from_json(j.at("affine"));
  return r;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string group_label(const RunRecord& r) {
  std::ostringstream os;
  os << r.kind;
  for (const auto& [key, value] : r.coordinates.items()) {
    if (key == "dgp_index" || key == "rep_index") continue;
    os << ' ' << key << '=';
    if (value.is_string())
      os << value.get<std::string>();
    else
      os << value.dump();
  }
  return os.str();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["schema"] = "run_record.v1";
  j["kind"] = kind;
  j["coordinates"] = coordinates;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["pre"] = pre_report ? report_to_json(*pre_report) : nlohmann::json(nullptr);
  j["post"] = post_report ? report_to_json(*post_report) : nlohmann::json(nullptr);
  j["train"] = {{"best_epoch", train_summary.best_epoch},
                {"stopped_epoch", train_summary.stopped_epoch},
                {"best_val_elbo", train_summary.best_val_elbo},
                {"wall_seconds", train_summary.wall_seconds},
                {"grad_clip_enabled", train_summary.grad_clip_enabled}};
  j["timestamp"] = timestamp;
  j["failed"] = failed;
  j["error"] = error;
  j["extra"] = extra;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.kind = j.at("kind");
  r.coordinates = j.at("coordinates");
  r.seed = j.at("seed");
  r.config_hash = j.at("config_hash");
  if (!j.at("pre").is_null()) r.pre_report = report_from_json(j.at("pre"));
  if (!j.at("post").is_null()) r.post_report = report_from_json(j.at("post"));
  const auto& t = j.at("train");
  r.train_summary.best_epoch = t.at("best_epoch");
  r.train_summary.stopped_epoch = t.at("stopped_epoch");
  r.train_summary.best_val_elbo = t.at("best_val_elbo");
  r.train_summary.wall_seconds = t.at("wall_seconds");
  r.train_summary.grad_clip_enabled = t.at("grad_clip_enabled");
  r.timestamp = j.at("timestamp");
  r.failed = j.at("failed");
  r.error = j.at("error");
  r.extra = j.at("extra");
  return r;
}

std::string config_hash_of(const nlohmann::json& canonical_config) {
  const std::string dump = canonical_config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

bool validate_run_record(const nlohmann::json& j, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (!j.is_object()) return fail("record is not an object");
  if (j.value("schema", "") != "run_record.v1")
    return fail("schema tag is not run_record.v1");
  const char* str_keys[] = {"kind", "config_hash", "timestamp", "error"};
  for (const char* k : str_keys)
    if (!j.contains(k) || !j[k].is_string())
      return fail(std::string("missing string field ") + k);
  const std::string kind = j["kind"];
  if (kind != "synthetic" && kind != "ihdp" && kind != "verify_ident" &&
      kind != "verify_thm3")
    return fail("unknown kind " + kind);
  if (!j.contains("coordinates") || !j["coordinates"].is_object())
    return fail("missing coordinates object");
  if (!j.contains("seed") || !j["seed"].is_number())
    return fail("missing numeric seed");
  if (!j.contains("failed") || !j["failed"].is_boolean())
    return fail("missing boolean failed");
  for (const char* k : {"pre", "post"}) {
    if (!j.contains(k)) return fail(std::string("missing field ") + k);
    const auto& rep = j[k];
    if (rep.is_null()) continue;
    if (!rep.is_object()) return fail(std::string(k) + " is not an object");
    for (const char* f : {"eps_ate", "sqrt_pehe"})
      if (!rep.contains(f) || !rep[f].is_number())
        return fail(std::string(k) + " lacks numeric " + f);
    if (!rep.contains("mode") || !rep["mode"].is_string() ||
        (rep["mode"] != "pre" && rep["mode"] != "post"))
      return fail(std::string(k) + " has invalid mode");
    if (!rep.contains("split") || !rep["split"].is_string())
      return fail(std::string(k) + " lacks split");
    if (!rep.contains("affine")) return fail(std::string(k) + " lacks affine");
  }
  if (!j.contains("train") || !j["train"].is_object())
    return fail("missing train summary");
  const auto& t = j["train"];
  for (const char* f : {"best_epoch", "stopped_epoch", "best_val_elbo",
                        "wall_seconds"})
    if (!t.contains(f) || !t[f].is_number())
      return fail(std::string("train summary lacks numeric ") + f);
  if (!t.contains("grad_clip_enabled") || !t["grad_clip_enabled"].is_boolean())
    return fail("train summary lacks grad_clip_enabled");
  if (!j.contains("extra")) return fail("missing extra");
  return true;
}

void write_records_jsonl(const std::string& path,
                         const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<RunRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open records file " + path);
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
  }
  return out;
}

void render_csv_summary(const std::vector<RunRecord>& records,
                        const std::string& path) {
  if (records.empty()) throw io_error("render: no records");
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    if (!r.failed) groups[group_label(r)].push_back(&r);

  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << "group,mode,n,eps_ate_mean,eps_ate_std,sqrt_pehe_mean,sqrt_pehe_std,"
         "r2_pooled_mean,group_consistency_mean\n";
  out.precision(10);
  for (const auto& [label, rs] : groups) {
    for (int mode = 0; mode < 2; ++mode) {
      std::vector<double> ate, pehe, r2, gc;
      for (const auto* r : rs) {
        const auto& rep = mode == 0 ? r->post_report : r->pre_report;
        if (!rep) continue;
        ate.push_back(rep->eps_ate);
        pehe.push_back(rep->sqrt_pehe);
        if (rep->affine) {
          r2.push_back(rep->affine->r2_pooled);
          gc.push_back(rep->affine->group_consistency);
        }
      }
      if (ate.empty()) continue;
      out << '"' << label << "\"," << (mode == 0 ? "post" : "pre") << ','
          << ate.size() << ',' << mean_of(ate) << ',' << std_of(ate) << ','
          << mean_of(pehe) << ',' << std_of(pehe) << ','
          << (r2.empty() ? std::nan("") : mean_of(r2)) << ','
          << (gc.empty() ? std::nan("") : mean_of(gc)) << '\n';
    }
  }
}

void render_markdown_table(const std::vector<RunRecord>& records,
                           const std::string& path) {
  if (records.empty()) throw io_error("render: no records");
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    if (!r.failed) groups[group_label(r)].push_back(&r);

  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << "| method | eps_ate (post/pre) | sqrt_pehe (post/pre) | runs |\n";
  out << "|---|---|---|---|\n";
  for (const auto& [label, rs] : groups) {
    std::vector<double> ate[2], pehe[2];
    for (const auto* r : rs) {
      if (r->post_report) {
        ate[0].push_back(r->post_report->eps_ate);
        pehe[0].push_back(r->post_report->sqrt_pehe);
      }
      if (r->pre_report) {
        ate[1].push_back(r->pre_report->eps_ate);
        pehe[1].push_back(r->pre_report->sqrt_pehe);
      }
    }
    auto cell = [&](std::vector<double>* v) {
      std::string s;
      for (int m = 0; m < 2; ++m) {
        if (m) s += " / ";
        if (v[m].empty()) {
          s += "-";
          continue;
        }
        const double sem =
            std_of(v[m]) / std::sqrt(static_cast<double>(v[m].size()));
        s += fmt(mean_of(v[m]), 3) + " ±" + fmt(sem, 3);
      }
      return s;
    };
    out << "| " << label << " | " << cell(ate) << " | " << cell(pehe) << " | "
        << rs.size() << " |\n";
  }
}

void write_scatter_svg(const std::string& path, const VectorXd& z_true,
                       const VectorXd& z_hat, const VectorXi& t,
                       const std::string& title) {
  if (z_true.size() != z_hat.size() || z_true.size() != t.size())
    throw std::invalid_argument("write_scatter_svg: length mismatch");
  const double w = 480, h = 360, m = 45;
  double x0 = z_true.minCoeff(), x1 = z_true.maxCoeff();
  double y0 = z_hat.minCoeff(), y1 = z_hat.maxCoeff();
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  auto sx = [&](double v) { return m + (v - x0) / (x1 - x0) * (w - 2 * m); };
  auto sy = [&](double v) { return h - m - (v - y0) / (y1 - y0) * (h - 2 * m); };

  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m
      << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m
      << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" "
         "font-size=\"13\">" << title << "</text>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
      << "\" text-anchor=\"middle\" font-size=\"11\">true latent</text>\n";
  out << "<text x=\"14\" y=\"" << h / 2
      << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 "
         "14 " << h / 2 << ")\">recovered latent</text>\n";
  for (Index i = 0; i < z_true.size(); ++i) {
    out << "<circle cx=\"" << sx(z_true[i]) << "\" cy=\"" << sy(z_hat[i])
        << "\" r=\"2\" fill=\"" << (t[i] == 0 ? "#1f77b4" : "#ff7f0e")
        << "\" fill-opacity=\"0.6\"/>\n";
  }
  out << "</svg>\n";
}

std::vector<std::string> render_scatter_plots(
    const std::vector<RunRecord>& records, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> files;
  for (const auto& r : records) {
    if (r.failed || !r.extra.is_object() || !r.extra.contains("scatter"))
      continue;
    const auto& s = r.extra["scatter"];
    auto zt = s.at("z_true").get<std::vector<double>>();
    auto zh = s.at("z_hat").get<std::vector<double>>();
    auto tv = s.at("t").get<std::vector<int>>();
    VectorXd z_true = Eigen::Map<VectorXd>(zt.data(), static_cast<Index>(zt.size()));
    VectorXd z_hat = Eigen::Map<VectorXd>(zh.data(), static_cast<Index>(zh.size()));
    VectorXi t(static_cast<Index>(tv.size()));
    for (std::size_t i = 0; i < tv.size(); ++i) t[static_cast<Index>(i)] = tv[i];

    std::ostringstream name;
    name << "scatter_" << r.kind;
    for (const auto& [key, value] : r.coordinates.items()) {
      name << '_' << key << '-';
      if (value.is_string())
        name << value.get<std::string>();
      else
        name << value.dump();
    }
    name << ".svg";
    const std::string path =
        (std::filesystem::path(out_dir) / name.str()).string();
    write_scatter_svg(path, z_true, z_hat, t, group_label(r));
    files.push_back(path);
  }
  return files;
}

}  // namespace intact
