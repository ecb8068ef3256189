#include "atekit/report.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

namespace atekit::report {

namespace {

Json cell_json(const diagnostics::Cell& c) { return c.value ? Json(*c.value) : Json(nullptr); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

Json estimand_json(const Estimand& e) {
  Json j;
  j["kind"] = std::string(to_string(e.kind));
  if (e.kind == Estimand::Kind::Trimmed) j["alpha"] = e.alpha;
  return j;
}

}  // namespace

Json config_to_json(const RunConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["bootstrap_reps"] = cfg.bootstrap_reps;
  j["half_sample_reps"] = cfg.half_sample_reps;
  j["dml_folds"] = cfg.dml_folds;
  j["trim_alpha"] = cfg.trim_alpha;
  j["clip_eta"] = cfg.clip_eta;
  j["histogram_bins"] = cfg.histogram_bins;
  j["hajek"] = cfg.hajek;
  j["nuisance_family"] = std::string(to_string(cfg.nuisance_family));
  j["linmod"] = {{"cv_folds", cfg.linmod.cv_folds},
                 {"grid_size", cfg.linmod.grid_size},
                 {"min_ratio", cfg.linmod.min_ratio},
                 {"enet_mix", cfg.linmod.enet_mix},
                 {"selection_rule", std::string(to_string(cfg.linmod.selection_rule))},
                 {"prediction_rule", std::string(to_string(cfg.linmod.prediction_rule))},
                 {"max_sweeps", cfg.linmod.max_sweeps},
                 {"tol", cfg.linmod.tol}};
  j["forest"] = {{"n_trees", cfg.forest.n_trees}, {"mtry", cfg.forest.mtry}, {"min_leaf", cfg.forest.min_leaf}};
  j["balance"] = {{"zeta", cfg.balance.zeta}, {"max_iter", cfg.balance.max_iter}, {"tol", cfg.balance.tol}};
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json point_estimate_to_json(const PointEstimate& pe) {
  Json j;
  j["method"] = std::string(to_string(pe.method));
  j["estimand"] = std::string(to_string(pe.estimand.kind));
  j["estimate"] = pe.value;
  j["se"] = pe.se;
  j["n_used"] = pe.n_used;
  j["notes"] = pe.notes;
  return j;
}

Json report_to_json(const diagnostics::DiagnosticsReport& rep, const std::vector<std::string>& names) {
  auto column_name = [&](std::size_t c) { return c < names.size() ? names[c] : "x" + std::to_string(c); };
  Json out;
  Json rows = Json::array();
  Json failures = Json::array();
  Json skipped = Json::array();
  Json method_notes = Json::object();
  for (const auto& r : rep.rows) {
    const std::string m(to_string(r.method));
    Json row;
    row["method"] = m;
    const std::pair<const char*, const diagnostics::Cell*> cells[] = {
        {"estimate", &r.estimate}, {"se", &r.se},   {"trimmed", &r.trimmed}, {"sbb", &r.sbb},
        {"covsplit_mean", &r.covsplit_mean}, {"covsplit_std", &r.covsplit_std}};
    for (const auto& [name, c] : cells) {
      row[name] = cell_json(*c);
      if (!c->value) failures.push_back({{"method", m}, {"field", name}, {"error", c->error}});
    }
    rows.push_back(row);
    for (const auto& s : r.skipped_covariates) {
      skipped.push_back({{"method", m}, {"column", s.column}, {"name", column_name(s.column)}, {"reason", s.reason}});
    }
    method_notes[m] = r.notes;
  }
  out["rows"] = rows;

  Json bias;
  if (rep.bias_summary) {
    const auto& s = *rep.bias_summary;
    bias["mean"] = s.mean;
    bias["q025"] = s.q025;
    bias["q25"] = s.q25;
    bias["median"] = s.median;
    bias["q75"] = s.q75;
    bias["q975"] = s.q975;
    bias["n"] = s.b_values.size();
    bias["sd_y"] = s.sd_y;
    bias["phat"] = s.phat;
    bias["degenerate_outcome"] = s.degenerate_outcome;
    if (rep.aggregate) {
      bias["aggregate_bias"] = rep.aggregate->B;
      bias["naive_minus_dre"] =
          rep.aggregate->naive_minus_reference ? Json(*rep.aggregate->naive_minus_reference) : Json(nullptr);
    }
    Json hist = Json::array();
    for (const auto& b : s.histogram) hist.push_back({{"bin_left", b.left}, {"bin_right", b.right}, {"count", b.count}});
    bias["histogram"] = hist;
  } else {
    bias["error"] = rep.bias_summary_error;
  }
  out["bias_summary"] = bias;

  Json bounds;
  bounds["weighted_estimand"] = "overlap";
  const std::pair<const char*, const diagnostics::Cell*> bcells[] = {
      {"ate_bound", &rep.bounds.ate_bound},
      {"weighted_bound", &rep.bounds.weighted_bound},
      {"ratio", &rep.bounds.ratio},
      {"weighted_bound_mean_weight_normalized", &rep.bounds.weighted_bound_mean_weight_normalized},
      {"ate_bound_decomposition", &rep.bounds.ate_bound_decomposition}};
  for (const auto& [name, c] : bcells) {
    bounds[name] = cell_json(*c);
    if (!c->value) failures.push_back({{"method", nullptr}, {"field", name}, {"error", c->error}});
  }
  out["bounds"] = bounds;

  Json meta;
  meta["seed"] = rep.config.seed;
  meta["config_hash"] = config_hash(rep.config);
  meta["config"] = config_to_json(rep.config);
  meta["estimand"] = estimand_json(rep.estimand);
  meta["skipped_covariates"] = skipped;
  meta["cell_failures"] = failures;
  meta["method_notes"] = method_notes;
  meta["notes"] = rep.notes;
  out["meta"] = meta;
  return out;
}

std::string histogram_csv(const std::vector<diagnostics::HistogramBin>& bins) {
  std::string out = "bin_left,bin_right,count\n";
  for (const auto& b : bins) out += fmt(b.left) + "," + fmt(b.right) + "," + std::to_string(b.count) + "\n";
  return out;
}

std::string histogram_svg(const std::vector<diagnostics::HistogramBin>& bins) {
  const double width = 640, height = 360, margin = 40;
  std::size_t top = 1;
  for (const auto& b : bins) top = std::max(top, b.count);
  const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;
  const double bar_w = bins.empty() ? 0.0 : plot_w / static_cast<double>(bins.size());
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" viewBox=\"0 0 640 360\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"360\" fill=\"white\"/>\n";
  char buf[256];
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double h = plot_h * static_cast<double>(bins[k].count) / static_cast<double>(top);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"steelblue\" stroke=\"white\"/>\n",
                  margin + bar_w * static_cast<double>(k), margin + plot_h - h, bar_w, h);
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", margin,
                margin + plot_h, margin + plot_w, margin + plot_h);
  s += buf;
  if (!bins.empty()) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\">%s</text>\n", margin,
                  height - 15.0, fmt_short(bins.front().left).c_str());
    s += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" text-anchor=\"end\">%s</text>\n",
                  margin + plot_w, height - 15.0, fmt_short(bins.back().right).c_str());
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\">max count %zu</text>\n", margin,
                margin - 10.0, top);
  s += buf;
  s += "</svg>\n";
  return s;
}

}  // namespace atekit::report
