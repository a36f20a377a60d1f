#include "cpo/errors.hpp"
#include "cpo/serialization.hpp"

#include <doctest.h>

using namespace cpo;

TEST_CASE("vectors and matrices round trip exactly") {
    Vector v(3);
    v << 0.1, 1.0 / 3.0, -2.5e-300;
    CHECK(vector_from_json(Json::parse(to_json(v).dump())) == v);
    Points p(2, 3);
    p << 1, 2, 3, 4, 5, 6.000000000000001;
    CHECK(points_from_json(Json::parse(to_json(p).dump())) == p);
    CHECK(real_from_json(real_to_json(kInf)) == kInf);
    CHECK(real_to_json(kInf) == "inf");
}

TEST_CASE("calibrated regions round trip bit-exactly") {
    const TaskOptions opts{.dim = 3};
    const Task task = make_task("gaussian_linear", opts);
    const Dataset cal = draw_dataset(task, 200, 1);
    const Dataset train = draw_dataset(task, 100, 2);
    const Dataset probe = draw_dataset(task, 20, 3);
    std::vector<Score> scores{GpcpScore(task.sampler, 4, 11), BaselineScore::box(train.c),
                              BaselineScore::ellipsoid(train.c), BaselineScore::ptc_box(train.c, task.sampler, 30, 5),
                              BaselineScore::ptc_ellipsoid(task.sampler, 30, 5)};
    for (const Score& score : scores) {
        const CalibratedRegion region = calibrate(score, cal, 0.1);
        const std::string text = region_to_json(region, task.name, opts).dump(2);
        const Json parsed = Json::parse(text);
        const auto [name, back_opts] = task_from_json(parsed.at("task"));
        CHECK(name == "gaussian_linear");
        CHECK(back_opts.dim == 3);
        const CalibratedRegion back = region_from_json(parsed, task.sampler);
        CHECK(kind_of(back.score) == kind_of(region.score));
        CHECK(back.q_hat == region.q_hat);
        CHECK(back.alpha == region.alpha);
        CHECK(back.n_cal == region.n_cal);
        CHECK(region_to_json(back, name, back_opts).dump(2) == text);
        for (Index i = 0; i < probe.size(); ++i)
            CHECK(evaluate(back.score, probe.x.col(i), probe.c.col(i)) ==
                  evaluate(region.score, probe.x.col(i), probe.c.col(i)));
    }
}

TEST_CASE("unbounded regions serialize their sentinel") {
    const Task task = make_task("constant");
    const Dataset cal = draw_dataset(task, 5, 1);
    const CalibratedRegion region = calibrate(GpcpScore(task.sampler, 1, 0), cal, 0.05);
    const Json j = region_to_json(region, task.name, {});
    CHECK(j["q_hat"] == "inf");
    CHECK_FALSE(region_from_json(j, task.sampler).bounded());
}

TEST_CASE("malformed artifacts are rejected") {
    const Task task = make_task("constant");
    CHECK_THROWS_AS(region_from_json(Json::parse("{\"score_kind\": \"gpcp\"}"), task.sampler), InvalidArgument);
    CHECK_THROWS_AS(region_from_json(Json::parse("{\"score_kind\": \"blob\", \"K\": 1, \"seed\": 0}"), task.sampler),
                    InvalidArgument);
}

TEST_CASE("optimizer and summary documents carry their fields") {
    OptResult r;
    r.w_avg = Vector::Ones(2);
    r.worst_case_c = Vector::Zero(2);
    r.robust_value = -1.5;
    r.iterations = 10;
    r.seed = 4;
    const Json j = opt_result_to_json(r);
    for (const char* key : {"w", "robust_value", "worst_case_c", "iterations", "seed"})
        CHECK(j.contains(key));

    Points centers(2, 1);
    centers << 0, 0;
    Rng rng(1);
    RpOptions opts;
    opts.count = 3;
    opts.samples_per_ball = 100;
    const RegionSummary s = cpo_rps(centers, 1.0, opts, rng);
    const Json k = summary_to_json(s);
    CHECK(k["rps"].size() == 3);
    CHECK(k["components"].size() == 1);
    CHECK(k["projection_variances"].size() == 3);
}
