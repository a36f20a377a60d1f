#include "cpo/serialization.hpp"

#include "cpo/errors.hpp"

#include <cmath>

namespace cpo {

Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

Json to_json(const Points& m) {
    Json out = Json::array();
    for (Index j = 0; j < m.cols(); ++j)
        out.push_back(to_json(Vector(m.col(j))));
    return out;
}

Json matrix_rows_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Index i = 0; i < m.rows(); ++i)
        out.push_back(to_json(Vector(m.row(i).transpose())));
    return out;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array())
        throw InvalidArgument("expected a JSON array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Index>(i)] = j[i].get<double>();
    return v;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array())
        throw InvalidArgument("expected a JSON array of rows");
    if (j.empty())
        return Matrix(0, 0);
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(static_cast<Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector row = vector_from_json(j[i]);
        if (row.size() != cols)
            throw InvalidArgument("ragged matrix in JSON");
        m.row(static_cast<Index>(i)) = row.transpose();
    }
    return m;
}

Points points_from_json(const Json& j) {
    return matrix_from_json(j).transpose();
}

Json real_to_json(double value) {
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    if (std::isnan(value))
        return "nan";
    return value;
}

double real_from_json(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return kInf;
        if (s == "-inf")
            return -kInf;
        if (s == "nan")
            return std::nan("");
        throw InvalidArgument("unrecognized number string '" + s + "'");
    }
    return j.get<double>();
}

Json task_to_json(const std::string& name, const TaskOptions& options) {
    Json j;
    j["name"] = name;
    j["dim"] = options.dim;
    j["grid_rows"] = options.grid_rows;
    j["grid_cols"] = options.grid_cols;
    j["abc"] = {{"tolerance", options.abc.tolerance},
                {"pilot_quantile", options.abc.pilot_quantile},
                {"pilot_size", options.abc.pilot_size},
                {"budget", options.abc.budget}};
    return j;
}

std::pair<std::string, TaskOptions> task_from_json(const Json& j) {
    TaskOptions options;
    options.dim = j.at("dim").get<Index>();
    options.grid_rows = j.at("grid_rows").get<Index>();
    options.grid_cols = j.at("grid_cols").get<Index>();
    const Json& abc = j.at("abc");
    options.abc.tolerance = abc.at("tolerance").get<double>();
    options.abc.pilot_quantile = abc.at("pilot_quantile").get<double>();
    options.abc.pilot_size = abc.at("pilot_size").get<Index>();
    options.abc.budget = abc.at("budget").get<Index>();
    return {j.at("name").get<std::string>(), options};
}

Json region_to_json(const CalibratedRegion& region, const std::string& task, const TaskOptions& options) {
    Json j;
    const ScoreKind kind = kind_of(region.score);
    j["score_kind"] = to_string(kind);
    j["alpha"] = region.alpha;
    j["q_hat"] = real_to_json(region.q_hat);
    j["n_cal"] = region.n_cal;
    j["task"] = task_to_json(task, options);
    if (const auto* g = std::get_if<GpcpScore>(&region.score)) {
        j["K"] = g->k();
        j["seed"] = g->seed();
        j["payload"] = {{"metric", "euclidean"}};
    } else {
        const auto& b = std::get<BaselineScore>(region.score);
        j["K"] = b.draws();
        j["seed"] = b.seed();
        Json payload;
        payload["center"] = to_json(b.center());
        payload["scales"] = to_json(b.scales());
        payload["shape"] = matrix_rows_to_json(b.shape());
        j["payload"] = payload;
    }
    return j;
}

CalibratedRegion region_from_json(const Json& j, std::shared_ptr<const ConditionalSampler> sampler) {
    try {
        const ScoreKind kind = score_kind_from_string(j.at("score_kind").get<std::string>());
        const auto k = j.at("K").get<Index>();
        const auto seed = j.at("seed").get<std::uint64_t>();
        auto make_score = [&]() -> Score {
            if (kind == ScoreKind::Gpcp)
                return GpcpScore(sampler, k, seed);
            const Json& p = j.at("payload");
            return BaselineScore::from_parts(kind, vector_from_json(p.at("center")), vector_from_json(p.at("scales")),
                                             matrix_from_json(p.at("shape")), sampler, k, seed);
        };
        CalibratedRegion region{make_score()};
        region.q_hat = real_from_json(j.at("q_hat"));
        region.alpha = j.at("alpha").get<double>();
        region.n_cal = j.at("n_cal").get<Index>();
        return region;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed region artifact: ") + e.what());
    }
}

Json opt_result_to_json(const OptResult& result) {
    Json j;
    j["w"] = to_json(result.w_avg);
    j["robust_value"] = real_to_json(result.robust_value);
    j["worst_case_c"] = to_json(result.worst_case_c);
    j["iterations"] = result.iterations;
    j["seed"] = result.seed;
    return j;
}

Json summary_to_json(const RegionSummary& summary) {
    Json j;
    j["rps"] = to_json(summary.rps);
    Json comps = Json::array();
    for (std::size_t g = 0; g < summary.component_sizes.size(); ++g) {
        Json members = Json::array();
        for (std::size_t r = 0; r < summary.rp_component.size(); ++r)
            if (summary.rp_component[r] == static_cast<Index>(g))
                members.push_back(r);
        comps.push_back({{"size", summary.component_sizes[g]}, {"rps", members}});
    }
    j["components"] = comps;
    j["projection_variances"] = matrix_rows_to_json(summary.projection_variances);
    return j;
}

} // namespace cpo
