#pragma once

#include "cpo/conformal.hpp"
#include "cpo/rep_points.hpp"
#include "cpo/robust_opt.hpp"
#include "cpo/samplers.hpp"

#include <json.hpp>

#include <string>

namespace cpo {

using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Json to_json(const Points& m); // list of columns
Vector vector_from_json(const Json& j);
Points points_from_json(const Json& j);
Matrix matrix_from_json(const Json& j); // list of rows
Json matrix_rows_to_json(const Matrix& m);

/// +inf is written as the string "inf".
Json real_to_json(double value);
double real_from_json(const Json& j);

Json task_to_json(const std::string& name, const TaskOptions& options);
std::pair<std::string, TaskOptions> task_from_json(const Json& j);

/// {score_kind, alpha, q_hat, K, seed, n_cal, task, payload}
Json region_to_json(const CalibratedRegion& region, const std::string& task, const TaskOptions& options);
/// Rebuilds the region; the sampler must belong to the task named in `j`.
CalibratedRegion region_from_json(const Json& j, std::shared_ptr<const ConditionalSampler> sampler);

/// {w, robust_value, worst_case_c, iterations, seed}
Json opt_result_to_json(const OptResult& result);

/// {rps, components, projection_variances}
Json summary_to_json(const RegionSummary& summary);

} // namespace cpo
