#include "breakscope/json_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace breakscope {

namespace {

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json double_vector(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(finite_or_null(x));
  return arr;
}

}  // namespace

json score_json(const MdlScore& score) {
  json j;
  j["value"] = finite_or_null(score.value);
  j["degenerate"] = !std::isfinite(score.value);
  j["per_segment"] = double_vector(score.per_segment);
  j["penalties"] = {{"ln_plus_m", score.penalties.ln_plus_m},
                    {"break_count_log_T", score.penalties.break_count_log_T},
                    {"segment_length_sum", score.penalties.segment_length_sum}};
  return j;
}

json method_result_json(const MethodResult& res, const TimeSeriesDataset& ds,
                        int time_offset) {
  json j;
  j["method"] = method_name(res.method);
  json breaks = json::array();
  for (int b : res.segmentation.breaks()) breaks.push_back(b + time_offset);
  j["breaks"] = breaks;
  j["num_breaks"] = res.segmentation.num_breaks();
  j["score"] = score_json(res.score);

  json params = json::array();
  for (int i = 0; i < res.segmentation.num_segments(); ++i) {
    const auto st = ds.try_segment_stats(res.segmentation.boundary(i),
                                         res.segmentation.boundary(i + 1));
    json p;
    p["start"] = res.segmentation.boundary(i) + time_offset + 1;
    p["end"] = res.segmentation.boundary(i + 1) + time_offset;
    if (st) {
      p["beta"] = std::vector<double>(st->beta_hat.data(),
                                      st->beta_hat.data() + st->beta_hat.size());
      p["sigma2"] = st->ssr / st->n;
    } else {
      p["beta"] = nullptr;
      p["sigma2"] = nullptr;
    }
    params.push_back(std::move(p));
  }
  j["per_segment_params"] = params;
  j["runtime_ms"] = res.runtime_ms;

  json trace = json::array();
  for (const auto& e : res.diagnostics)
    trace.push_back({{"a", e.a + time_offset},
                     {"b", e.b + time_offset},
                     {"tau", e.tau + time_offset},
                     {"stat", finite_or_null(e.stat)},
                     {"accepted", e.accepted}});
  j["diagnostics"] = trace;
  return j;
}

json replication_report_json(const ReplicationReport& report) {
  json j;
  j["dgp"] = std::string(1, report.dgp);
  j["T"] = report.T;
  j["n_reps"] = report.n_reps;
  j["base_seed"] = report.base_seed;
  j["exact_distance"] = report.exact_distance;
  json methods = json::array();
  for (const auto& m : report.methods) {
    json mj;
    mj["method"] = m.method;
    mj["m_histogram"] = {{"m0", m.m_histogram[0]},
                         {"m1", m.m_histogram[1]},
                         {"m2", m.m_histogram[2]},
                         {"m3_plus", m.m_histogram[3]}};
    mj["correct_m_rate"] = m.correct_m_rate(report.n_reps);
    mj["exact_rate"] = m.exact_rate(report.n_reps);
    mj["n_failed"] = m.n_failed;
    mj["mean_mdl"] = finite_or_null(m.mean_mdl);
    mj["mean_runtime_ms"] = m.mean_runtime_ms;
    mj["mean_abs_break_err"] = double_vector(m.mean_abs_break_err);
    methods.push_back(std::move(mj));
  }
  j["methods"] = methods;
  return j;
}

json posterior_study_json(const PosteriorProbStudy& study) {
  json j;
  j["dgp"] = std::string(1, study.dgp);
  j["n_reps"] = study.n_reps;
  j["methods"] = study.methods;
  j["mean_posterior"] = double_vector(study.mean_posterior);
  j["mix_rate"] = study.mix_rate;
  return j;
}

json forecast_scores_json(const ForecastScores& scores) {
  json j;
  j["models"] = scores.models;
  j["horizons"] = scores.horizons;
  j["origins"] = scores.origins;
  j["skipped_windows"] = scores.skipped_windows;
  json table = json::array();
  for (std::size_t m = 0; m < scores.models.size(); ++m) {
    json row;
    row["model"] = scores.models[m];
    row["rmsfe"] = double_vector(scores.rmsfe[m]);
    row["mafe"] = double_vector(scores.mafe[m]);
    table.push_back(std::move(row));
  }
  j["scores"] = table;
  return j;
}

json tau_draws_json(const TauDraws& draws, int time_offset) {
  json j;
  json rows = json::array();
  for (Eigen::Index r = 0; r < draws.draws.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < draws.draws.cols(); ++c)
      row.push_back(draws.draws(r, c) + time_offset);
    rows.push_back(std::move(row));
  }
  j["draws"] = rows;
  j["accept_rate"] = draws.accept_rate;
  j["pooled_accept_rate"] = draws.pooled_accept_rate;
  return j;
}

json intervals_json(const std::vector<CredibleInterval>& intervals) {
  json arr = json::array();
  for (const auto& ci : intervals)
    arr.push_back({{"name", ci.name},
                   {"lower", finite_or_null(ci.lower)},
                   {"upper", finite_or_null(ci.upper)}});
  return arr;
}

json result_envelope(const std::string& command, json config_echo,
                     json results, std::int64_t elapsed_ms) {
  json j;
  j["schema_version"] = "1";
  j["command"] = command;
  j["config_echo"] = std::move(config_echo);
  j["results"] = std::move(results);
  j["timing"] = {{"elapsed_ms", elapsed_ms}};
  return j;
}

void write_json(const std::string& path, const json& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace breakscope
