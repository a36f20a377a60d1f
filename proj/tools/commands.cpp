#include "commands.hpp"

#include "svg.hpp"

#include "cpo/errors.hpp"
#include "cpo/rep_points.hpp"
#include "cpo/robust_opt.hpp"
#include "cpo/serialization.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace cpo::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
    key = trim(key);
    while (!key.empty() && key.front() == '-')
        key.erase(key.begin());
    for (char& c : key)
        if (c == '-')
            c = '_';
    return key;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(trim(value));
    T out{};
    in >> out;
    if (in.fail() || !in.eof())
        throw InvalidArgument("config: cannot parse '" + value + "' for " + key);
    return out;
}

std::string fmt(double v, const char* spec = "%.10g") {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& value) {
    const std::string key = normalize_key(raw_key);
    if (key == "task")
        c.task = trim(value);
    else if (key == "alpha")
        c.alpha = parse_number<double>(key, value);
    else if (key == "k_max")
        c.k_max = parse_number<Index>(key, value);
    else if (key == "epsilon")
        c.epsilon = parse_number<double>(key, value);
    else if (key == "samples_per_ball")
        c.samples_per_ball = parse_number<Index>(key, value);
    else if (key == "steps")
        c.steps = parse_number<Index>(key, value);
    else if (key == "eta")
        c.eta = parse_number<double>(key, value);
    else if (key == "rp_count")
        c.rp_count = parse_number<Index>(key, value);
    else if (key == "seed")
        c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "out")
        c.out = trim(value);
    else if (key == "score")
        c.score = trim(value);
    else if (key == "k")
        c.k = parse_number<Index>(key, value);
    else if (key == "ptc_draws")
        c.ptc_draws = parse_number<Index>(key, value);
    else if (key == "n_cal")
        c.n_cal = parse_number<Index>(key, value);
    else if (key == "n_cal2")
        c.n_cal2 = parse_number<Index>(key, value);
    else if (key == "n_train")
        c.n_train = parse_number<Index>(key, value);
    else if (key == "n_test")
        c.n_test = parse_number<Index>(key, value);
    else if (key == "instances")
        c.instances = parse_number<Index>(key, value);
    else if (key == "dim")
        c.dim = parse_number<Index>(key, value);
    else if (key == "grid_rows")
        c.grid_rows = parse_number<Index>(key, value);
    else if (key == "grid_cols")
        c.grid_cols = parse_number<Index>(key, value);
    else if (key == "x_index")
        c.x_index = parse_number<Index>(key, value);
    else if (key == "connect_radius")
        c.connect_radius = parse_number<double>(key, value);
    else if (key == "region")
        c.region = trim(value);
    else
        throw InvalidArgument("config: unknown key '" + raw_key + "'");
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("config: cannot open " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config: line " + std::to_string(number) + " is not key = value");
        out[normalize_key(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok)
            throw InvalidArgument("config: " + msg);
    };
    require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
    require(k_max >= 2, "k_max must be at least 2");
    require(samples_per_ball >= 1, "samples_per_ball must be positive");
    require(steps >= 1, "steps must be positive");
    require(rp_count >= 1, "rp_count must be positive");
    require(k >= 0, "k must be nonnegative");
    require(ptc_draws >= 2, "ptc_draws must be at least 2");
    require(n_cal >= 1 && n_cal2 >= 1 && n_train >= 1 && n_test >= 1, "split sizes must be positive");
    require(instances >= 1, "instances must be positive");
    require(dim >= 0, "dim must be nonnegative");
    require(grid_rows >= 1 && grid_cols >= 1 && grid_rows * grid_cols >= 2, "grid needs at least two nodes");
    require(x_index >= 0, "x_index must be nonnegative");
    require(!out.empty(), "out must be set");
    score_kind_from_string(score);
}

std::string RunConfig::canonical() const {
    // Paths are left out so the same run written to two places hashes alike.
    std::ostringstream os;
    os << "alpha=" << fmt(alpha, "%.17g") << "\nconnect_radius=" << fmt(connect_radius, "%.17g")
       << "\ndim=" << dim << "\nepsilon=" << fmt(epsilon, "%.17g") << "\neta=" << fmt(eta, "%.17g")
       << "\ngrid_cols=" << grid_cols << "\ngrid_rows=" << grid_rows << "\ninstances=" << instances
       << "\nk=" << k << "\nk_max=" << k_max << "\nn_cal=" << n_cal << "\nn_cal2=" << n_cal2
       << "\nn_test=" << n_test << "\nn_train=" << n_train << "\nptc_draws=" << ptc_draws
       << "\nrp_count=" << rp_count << "\nsamples_per_ball=" << samples_per_ball << "\nscore=" << score
       << "\nseed=" << seed << "\nsteps=" << steps << "\ntask=" << task << "\nx_index=" << x_index << "\n";
    return os.str();
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
}

void write_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw InvalidArgument("cannot write " + tmp.string());
        out << contents;
        if (!out)
            throw InvalidArgument("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces

namespace {

TaskOptions task_options(const RunConfig& c) {
    TaskOptions o;
    o.dim = c.dim;
    o.grid_rows = c.grid_rows;
    o.grid_cols = c.grid_cols;
    return o;
}

// Independent data streams per role.
std::uint64_t stream(const RunConfig& c, std::string_view role) { return derive_seed(c.seed, role); }

Json stamp(const RunConfig& c) {
    Json j;
    j["config_hash"] = c.hash();
    j["seed"] = c.seed;
    return j;
}

std::string csv_header(const RunConfig& c) { return "# config_hash=" + c.hash() + " seed=" + std::to_string(c.seed) + "\n"; }

std::string svg_stamp(const RunConfig& c) {
    return "<!-- config_hash=" + c.hash() + " seed=" + std::to_string(c.seed) + " -->\n";
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Score build_score(ScoreKind kind, const Task& task, const RunConfig& c, Index k) {
    const std::uint64_t score_seed = stream(c, "score");
    switch (kind) {
    case ScoreKind::Gpcp:
        return GpcpScore(task.sampler, k, score_seed);
    case ScoreKind::Box:
        return BaselineScore::box(draw_dataset(task, c.n_train, stream(c, "train")).c);
    case ScoreKind::Ellipsoid:
        return BaselineScore::ellipsoid(draw_dataset(task, c.n_train, stream(c, "train")).c);
    case ScoreKind::PtcBox:
        return BaselineScore::ptc_box(draw_dataset(task, c.n_train, stream(c, "train")).c, task.sampler,
                                      c.ptc_draws, score_seed);
    case ScoreKind::PtcEllipsoid:
        return BaselineScore::ptc_ellipsoid(task.sampler, c.ptc_draws, score_seed);
    }
    throw InvalidArgument("unknown score kind");
}

SelectKOptions select_k_options(const RunConfig& c) {
    SelectKOptions o;
    o.alpha = c.alpha;
    o.k_max = c.k_max;
    o.epsilon = c.epsilon;
    o.samples_per_ball = c.samples_per_ball;
    o.seed = stream(c, "score");
    return o;
}

struct Calibration {
    CalibratedRegion region;
    Json select_k; // null unless K was selected
};

Calibration calibrate_kind(ScoreKind kind, const Task& task, const RunConfig& c, const Dataset& cal1) {
    Index k = c.k;
    Json selected = nullptr;
    if (kind == ScoreKind::Gpcp && k == 0) {
        const Dataset cal2 = draw_dataset(task, c.n_cal2, stream(c, "cal2"));
        const SelectKResult r = select_k(task.sampler, cal1, cal2, select_k_options(c));
        k = r.k_star;
        selected = {{"k_star", r.k_star}, {"converged", r.converged}, {"epsilon", r.epsilon}};
    }
    return {calibrate(build_score(kind, task, c, k), cal1, c.alpha), selected};
}

Json region_document(const RunConfig& c, const Calibration& cal) {
    Json j = region_to_json(cal.region, c.task, task_options(c));
    const Json s = stamp(c);
    j["config_hash"] = s["config_hash"];
    j["lineage"] = {{"calibration", "cal1"}, {"volume", cal.select_k.is_null() ? "none" : "cal2"}};
    if (!cal.select_k.is_null())
        j["select_k"] = cal.select_k;
    return j;
}

struct LoadedRegion {
    CalibratedRegion region;
    std::string bytes_hash;
};

LoadedRegion load_region(const RunConfig& c, const Task& task) {
    std::ifstream in(c.region, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open region artifact " + c.region);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("region artifact is not valid JSON: ") + e.what());
    }
    const auto [name, options] = task_from_json(j.at("task"));
    if (name != task.name)
        throw InvalidArgument("region artifact was calibrated for task '" + name + "', not '" + task.name + "'");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return {region_from_json(j, task.sampler), buf};
}

// Fresh decision problem for test instance i.
struct Problem {
    FeasibleSet feasible;
    Objective objective;
    std::string description;
};

Problem make_problem(const Task& task, const RunConfig& c, Index i) {
    Rng rng(derive_seed(stream(c, "instance"), static_cast<std::uint64_t>(i)));
    if (task.routing) {
        const Graph& g = *task.routing->graph;
        std::uniform_int_distribution<Index> node(0, g.num_nodes() - 1);
        const Index s = node(rng);
        Index t = node(rng);
        while (t == s)
            t = node(rng);
        FeasibleSet f = FeasibleSet::affine_box(build_incidence(g), flow_demand(g.num_nodes(), s, t));
        const double l = f.max_norm();
        return {std::move(f), Objective::linear(l), "route " + std::to_string(s) + "->" + std::to_string(t)};
    }
    const KnapsackInstance inst = sample_knapsack_instance(task.dim_c, rng);
    FeasibleSet f = FeasibleSet::box_budget(inst.weights, inst.budget);
    const double l = f.max_norm();
    return {std::move(f), Objective::linear_neg(l), "knapsack B=" + fmt(inst.budget, "%.6g")};
}

OptOptions opt_options(const RunConfig& c, Index i) {
    OptOptions o;
    o.steps = c.steps;
    o.eta = c.eta;
    o.seed = derive_seed(stream(c, "opt"), static_cast<std::uint64_t>(i));
    return o;
}

struct MethodRow {
    std::string method;
    double robust{0};
    double nominal{0};
    bool covered{false};
    double delta{0};
    double bound{0};
    OptResult result;
};

MethodRow evaluate_method(const std::string& name, const CalibratedRegion& region, const Vector& x,
                          const Vector& c_true, const Problem& p, const OptOptions& opts, double nominal) {
    const UncertaintySet set = region_set(region, x);
    MethodRow row;
    row.method = name;
    row.result = robust_minimize(set, p.objective, p.feasible, opts);
    row.robust = row.result.robust_value;
    row.nominal = nominal;
    row.covered = contains(region, x, c_true);
    row.delta = row.robust - nominal;
    row.bound = p.objective.lipschitz_c * set_diameter(set);
    return row;
}

const std::vector<ScoreKind>& method_order() {
    static const std::vector<ScoreKind> order{ScoreKind::Box, ScoreKind::PtcBox, ScoreKind::Ellipsoid,
                                              ScoreKind::PtcEllipsoid, ScoreKind::Gpcp};
    return order;
}

std::string method_name(ScoreKind k) {
    switch (k) {
    case ScoreKind::Box:
        return "Box";
    case ScoreKind::PtcBox:
        return "PTC-B";
    case ScoreKind::Ellipsoid:
        return "Ellipsoid";
    case ScoreKind::PtcEllipsoid:
        return "PTC-E";
    case ScoreKind::Gpcp:
        return "CPO";
    }
    return "?";
}

std::vector<std::string> split_tasks(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!trim(item).empty())
            out.push_back(trim(item));
    if (out.empty())
        throw InvalidArgument("config: task is empty");
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Commands

std::vector<fs::path> cmd_calibrate(const RunConfig& c) {
    c.validate();
    const Task task = make_task(c.task, task_options(c));
    const Dataset cal1 = draw_dataset(task, c.n_cal, stream(c, "cal1"));
    const Calibration cal = calibrate_kind(score_kind_from_string(c.score), task, c, cal1);
    const fs::path path = fs::path(c.out) / "region.json";
    write_atomic(path, dump(region_document(c, cal)));
    return {path};
}

std::vector<fs::path> cmd_select_k(const RunConfig& c) {
    c.validate();
    const Task task = make_task(c.task, task_options(c));
    const Dataset cal1 = draw_dataset(task, c.n_cal, stream(c, "cal1"));
    const Dataset cal2 = draw_dataset(task, c.n_cal2, stream(c, "cal2"));
    const SelectKResult r = select_k(task.sampler, cal1, cal2, select_k_options(c));

    std::ostringstream csv;
    csv << csv_header(c) << "K,q_hat,volume,volume_se\n";
    for (std::size_t k = 0; k < r.volume.size(); ++k)
        csv << k + 1 << ',' << fmt(r.q_hat[k]) << ',' << fmt(r.volume[k]) << ',' << fmt(r.volume_se[k]) << '\n';

    Json j = stamp(c);
    j["task"] = c.task;
    j["k_star"] = r.k_star;
    j["converged"] = r.converged;
    j["epsilon"] = r.epsilon;
    j["q_hat"] = r.q_hat;
    j["volume"] = r.volume;
    j["volume_se"] = r.volume_se;
    j["lineage"] = {{"calibration", "cal1"}, {"volume", "cal2"}};

    std::vector<std::string> labels;
    for (std::size_t k = 0; k < r.volume.size(); ++k)
        labels.push_back(std::to_string(k + 1));
    const fs::path dir(c.out);
    write_atomic(dir / "select_k.csv", csv.str());
    write_atomic(dir / "select_k.json", dump(j));
    write_atomic(dir / "select_k.svg",
                 svg_stamp(c) + svg::bar_chart("union volume by K (K* = " + std::to_string(r.k_star) + ")", labels,
                                               r.volume));
    return {dir / "select_k.csv", dir / "select_k.json", dir / "select_k.svg"};
}

std::vector<fs::path> cmd_optimize(const RunConfig& c) {
    c.validate();
    const Task task = make_task(c.task, task_options(c));
    const Dataset cal1 = draw_dataset(task, c.n_cal, stream(c, "cal1"));

    std::vector<std::pair<std::string, CalibratedRegion>> methods;
    std::string region_hash = "none";
    std::optional<LoadedRegion> loaded;
    if (!c.region.empty())
        loaded = load_region(c, task);
    for (ScoreKind kind : method_order()) {
        if (loaded && kind_of(loaded->region.score) == kind) {
            region_hash = loaded->bytes_hash;
            methods.emplace_back(method_name(kind), loaded->region);
        } else {
            methods.emplace_back(method_name(kind), calibrate_kind(kind, task, c, cal1).region);
        }
    }

    const Dataset test = draw_dataset(task, c.instances, stream(c, "test"));
    std::ostringstream csv;
    csv << csv_header(c) << "instance,method,robust_objective,nominal_optimum,covered,delta,gap_bound\n";
    Json results = Json::array();
    for (Index i = 0; i < c.instances; ++i) {
        const Vector x = test.x.col(i);
        const Vector c_true = test.c.col(i);
        const Problem p = make_problem(task, c, i);
        const OptOptions opts = opt_options(c, i);
        const double nominal = nominal_optimum(p.objective, p.feasible, c_true, opts);
        Json inst;
        inst["instance"] = i;
        inst["problem"] = p.description;
        for (const auto& [name, region] : methods) {
            const MethodRow row = evaluate_method(name, region, x, c_true, p, opts, nominal);
            csv << i << ',' << name << ',' << fmt(row.robust) << ',' << fmt(row.nominal) << ','
                << (row.covered ? 1 : 0) << ',' << fmt(row.delta) << ',' << fmt(row.bound) << '\n';
            Json m = opt_result_to_json(row.result);
            m["covered"] = row.covered;
            inst[name] = m;
        }
        csv << i << ",Nominal," << fmt(nominal) << ',' << fmt(nominal) << ",1,0,0\n";
        inst["Nominal"] = {{"value", nominal}};
        results.push_back(inst);
    }
    Json j = stamp(c);
    j["task"] = c.task;
    j["region_hash"] = region_hash;
    j["instances"] = results;
    const fs::path dir(c.out);
    write_atomic(dir / "optimize.csv", csv.str());
    write_atomic(dir / "optimize.json", dump(j));
    return {dir / "optimize.csv", dir / "optimize.json"};
}

std::vector<fs::path> cmd_rps(const RunConfig& c) {
    c.validate();
    const Task task = make_task(c.task, task_options(c));
    CalibratedRegion region{GpcpScore(task.sampler, 1, 0)};
    std::string region_hash = "none";
    if (!c.region.empty()) {
        LoadedRegion loaded = load_region(c, task);
        region = std::move(loaded.region);
        region_hash = loaded.bytes_hash;
    } else {
        const Dataset cal1 = draw_dataset(task, c.n_cal, stream(c, "cal1"));
        region = calibrate_kind(ScoreKind::Gpcp, task, c, cal1).region;
    }
    if (!std::holds_alternative<GpcpScore>(region.score))
        throw InvalidArgument("rps: the region artifact must use the gpcp score");

    const Dataset test = draw_dataset(task, c.x_index + 1, stream(c, "test"));
    const Vector x = test.x.col(c.x_index);
    RpOptions opts;
    opts.count = c.rp_count;
    opts.samples_per_ball = c.samples_per_ball;
    opts.connect_radius = c.connect_radius;
    Rng rng(stream(c, "rps"));
    const RegionSummary s = cpo_rps(x, region, opts, rng);

    Json j = stamp(c);
    j["task"] = c.task;
    j["region_hash"] = region_hash;
    j["x_index"] = c.x_index;
    j["q_hat"] = real_to_json(region.q_hat);
    const Json body = summary_to_json(s);
    for (auto it = body.begin(); it != body.end(); ++it)
        j[it.key()] = it.value();

    // Per-coordinate variance, summed over RPs; for routing the coordinates are edges.
    const Index dim = s.projection_variances.cols();
    std::ostringstream csv;
    csv << csv_header(c);
    const Graph* graph = task.routing ? task.routing->graph.get() : nullptr;
    csv << (graph ? "rp,edge,src,dst,variance\n" : "rp,dim,variance\n");
    for (Index r = 0; r < s.projection_variances.rows(); ++r)
        for (Index d = 0; d < dim; ++d) {
            csv << r << ',' << d << ',';
            if (graph)
                csv << graph->node_labels[static_cast<std::size_t>(graph->edges[static_cast<std::size_t>(d)].src)]
                    << ','
                    << graph->node_labels[static_cast<std::size_t>(graph->edges[static_cast<std::size_t>(d)].dst)]
                    << ',';
            csv << fmt(s.projection_variances(r, d)) << '\n';
        }

    std::vector<std::string> labels;
    std::vector<double> totals;
    for (Index d = 0; d < dim; ++d) {
        labels.push_back(graph ? "e" + std::to_string(d) : "c" + std::to_string(d));
        totals.push_back(s.projection_variances.col(d).sum());
    }
    const fs::path dir(c.out);
    std::vector<fs::path> written{dir / "rps.json", dir / "variances.csv", dir / "variances.svg"};
    write_atomic(dir / "rps.json", dump(j));
    write_atomic(dir / "variances.csv", csv.str());
    write_atomic(dir / "variances.svg", svg_stamp(c) + svg::bar_chart("projection variance by coordinate", labels, totals));
    if (s.rps.rows() == 2) {
        std::vector<svg::Series> series{{"region sample", "#9ecae1", s.sample.points, 1.0},
                                        {"representative points", "#d62728", s.rps, 4.0}};
        write_atomic(dir / "rps.svg", svg_stamp(c) + svg::scatter("representative points", series));
        written.push_back(dir / "rps.svg");
    }
    return written;
}

std::vector<fs::path> cmd_bench(const RunConfig& base) {
    base.validate();
    std::ostringstream csv, table;
    csv << csv_header(base) << "task,method,coverage,objective_mean,objective_sd,instances\n";
    table << "<!-- config_hash=" << base.hash() << " seed=" << base.seed << " -->\n";
    table << "| task | method | coverage | objective |\n|---|---|---|---|\n";
    Json j = stamp(base);
    j["tasks"] = Json::object();

    for (const std::string& name : split_tasks(base.task)) {
        RunConfig c = base;
        c.task = name;
        const Task task = make_task(name, task_options(c));
        const Dataset cal1 = draw_dataset(task, c.n_cal, stream(c, "cal1"));
        const Dataset test = draw_dataset(task, c.n_test, stream(c, "test"));

        std::vector<std::pair<std::string, CalibratedRegion>> methods;
        for (ScoreKind kind : method_order())
            methods.emplace_back(method_name(kind), calibrate_kind(kind, task, c, cal1).region);

        std::vector<std::vector<double>> objectives(methods.size() + 1);
        for (Index i = 0; i < c.instances; ++i) {
            const Vector x = test.x.col(i % test.size());
            const Vector c_true = test.c.col(i % test.size());
            const Problem p = make_problem(task, c, i);
            const OptOptions opts = opt_options(c, i);
            const double nominal = nominal_optimum(p.objective, p.feasible, c_true, opts);
            for (std::size_t m = 0; m < methods.size(); ++m)
                objectives[m].push_back(
                    evaluate_method(methods[m].first, methods[m].second, x, c_true, p, opts, nominal).robust);
            objectives.back().push_back(nominal);
        }

        Json tj = Json::object();
        for (std::size_t m = 0; m <= methods.size(); ++m) {
            const bool nominal = m == methods.size();
            const std::string method = nominal ? "Nominal" : methods[m].first;
            const double cov = nominal ? kInf : coverage(methods[m].second, test);
            const auto& v = objectives[m];
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double var = 0;
            for (double a : v)
                var += (a - mean) * (a - mean);
            const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
            csv << name << ',' << method << ',' << (nominal ? "" : fmt(cov)) << ',' << fmt(mean) << ',' << fmt(sd)
                << ',' << v.size() << '\n';
            table << "| " << name << " | " << method << " | " << (nominal ? "-" : fmt(cov, "%.2f")) << " | "
                  << fmt(mean, "%.2f") << " (" << fmt(sd, "%.2f") << ") |\n";
            Json mj{{"objective_mean", mean}, {"objective_sd", sd}};
            if (!nominal)
                mj["coverage"] = cov;
            tj[method] = mj;
        }
        j["tasks"][name] = tj;
    }
    const fs::path dir(base.out);
    write_atomic(dir / "bench.csv", csv.str());
    write_atomic(dir / "bench.md", table.str());
    write_atomic(dir / "bench.json", dump(j));
    return {dir / "bench.csv", dir / "bench.md", dir / "bench.json"};
}

// ---------------------------------------------------------------------------
// Entry point

namespace {

void report_failure(const std::string& kind, const std::string& message, int code) {
    Json j{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << j.dump() << std::endl;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"Conformal predict-then-optimize toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    std::map<std::string, std::string> flags;

    struct Flag {
        const char* name;
        const char* help;
    };
    const std::vector<Flag> all_flags{
        {"--task", "task name (comma-separated list for bench)"},
        {"--alpha", "miscoverage level"},
        {"--k-max", "largest K tried by K selection"},
        {"--epsilon", "volume tolerance for K selection; negative means 1% of the K=1 volume"},
        {"--samples-per-ball", "Monte Carlo samples per ball (M)"},
        {"--steps", "optimizer iterations (T)"},
        {"--eta", "optimizer step size; 0 picks it automatically"},
        {"--rp-count", "number of representative points (N)"},
        {"--seed", "master seed"},
        {"--out", "output directory"},
        {"--score", "gpcp, box, ptc-b, ellipsoid or ptc-e"},
        {"--k", "GPCP draws per x; 0 selects K first"},
        {"--ptc-draws", "conditional draws for PTC-B / PTC-E"},
        {"--n-cal", "calibration split size"},
        {"--n-cal2", "volume split size for K selection"},
        {"--n-train", "training draws for the box / ellipsoid baselines"},
        {"--n-test", "test points for coverage"},
        {"--instances", "optimization instances"},
        {"--dim", "task dimension (0 keeps the default)"},
        {"--grid-rows", "routing grid rows"},
        {"--grid-cols", "routing grid columns"},
        {"--x-index", "test point whose region is summarized"},
        {"--connect-radius", "edge radius for region components; 0 uses q_hat"},
        {"--region", "calibration artifact to load"},
    };

    using Command = std::vector<fs::path> (*)(const RunConfig&);
    const std::vector<std::tuple<const char*, const char*, Command>> commands{
        {"calibrate", "calibrate a region and write region.json", cmd_calibrate},
        {"select-k", "volume curve over K and the selected K*", cmd_select_k},
        {"optimize", "robust decisions for CPO and the baselines", cmd_optimize},
        {"rps", "representative points of a region", cmd_rps},
        {"bench", "coverage and objective tables per task", cmd_bench},
    };
    Command chosen = nullptr;
    for (const auto& [name, help, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key = value file; flags override it");
        for (const Flag& f : all_flags) {
            const std::string key = normalize_key(f.name);
            sub->add_option_function<std::string>(
                f.name, [&flags, key](const std::string& v) { flags[key] = v; }, f.help);
        }
        sub->callback([&chosen, fn = fn] { chosen = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_failure("config", e.what(), kExitConfig);
        return kExitConfig;
    }

    try {
        RunConfig config;
        if (!config_path.empty())
            for (const auto& [k, v] : read_config_file(config_path))
                apply_setting(config, k, v);
        for (const auto& [k, v] : flags)
            apply_setting(config, k, v);
        for (const fs::path& p : chosen(config))
            std::cout << p.string() << '\n';
        return kExitOk;
    } catch (const UnboundedRegion& e) {
        report_failure("unbounded_region", e.what(), kExitInfeasible);
        return kExitInfeasible;
    } catch (const Infeasible& e) {
        report_failure("infeasible", e.what(), kExitInfeasible);
        return kExitInfeasible;
    } catch (const NumericFailure& e) {
        report_failure("numeric_failure", e.what(), kExitNumeric);
        return kExitNumeric;
    } catch (const InvalidArgument& e) {
        report_failure("config", e.what(), kExitConfig);
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        report_failure("config", e.what(), kExitConfig);
        return kExitConfig;
    }
}

} // namespace cpo::cli
