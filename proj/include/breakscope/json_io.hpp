#pragma once

#include "breakscope/bayes.hpp"
#include "breakscope/detect.hpp"
#include "breakscope/select.hpp"
#include "breakscope/simlab.hpp"

#include <json.hpp>

#include <string>

namespace breakscope {

using nlohmann::json;

// Break indices and segment spans are reported on the raw 1-based time
// axis; time_offset is the number of presample observations the effective
// sample dropped (the AR order for lagged designs).
json method_result_json(const MethodResult& res, const TimeSeriesDataset& ds,
                        int time_offset);
json score_json(const MdlScore& score);
json replication_report_json(const ReplicationReport& report);
json posterior_study_json(const PosteriorProbStudy& study);
json forecast_scores_json(const ForecastScores& scores);
json tau_draws_json(const TauDraws& draws, int time_offset);
json intervals_json(const std::vector<CredibleInterval>& intervals);

// Stable top-level envelope shared by every subcommand.
json result_envelope(const std::string& command, json config_echo,
                     json results, std::int64_t elapsed_ms);

void write_json(const std::string& path, const json& doc);

}  // namespace breakscope
