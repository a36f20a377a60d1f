#include "cpo/samplers.hpp"

#include "cpo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cpo {

void ConditionalSampler::check_x(const Vector& x) const {
    if (x.size() != dim_x())
        throw InvalidArgument("sampler: expected x of dimension " + std::to_string(dim_x()) + ", got " +
                              std::to_string(x.size()));
}

// ---------------------------------------------------------------------------
// Truncated normal

double log_normal_cdf(double t) {
    if (t > -30.0)
        return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
    // Asymptotic series of the Mills ratio.
    const double t2 = t * t;
    const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
    return -0.5 * t2 - std::log(-t) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

namespace {

// log(Phi(b) - Phi(a)) for a < b.
double log_normal_mass(double a, double b) {
    if (a >= 0.0)
        return log_normal_mass(-b, -a);
    if (b <= 0.0) {
        const double lb = log_normal_cdf(b);
        const double la = log_normal_cdf(a);
        return lb + std::log1p(-std::exp(la - lb));
    }
    return std::log(0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2)));
}

// Standard normal restricted to [a, b] with 0 <= a < b (b may be +inf).
double one_sided_truncated(double a, double b, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double root = std::sqrt(a * a + 4.0);
    const double lambda = 0.5 * (a + root);
    const double uniform_width = 2.0 * std::sqrt(std::numbers::e) / (a + root) * std::exp(0.25 * (a * a - a * root));
    if (b - a < uniform_width) {
        std::uniform_real_distribution<double> proposal(a, b);
        for (;;) {
            const double z = proposal(rng);
            if (unit(rng) <= std::exp(0.5 * (a * a - z * z)))
                return z;
        }
    }
    std::exponential_distribution<double> expo(lambda);
    for (;;) {
        const double z = a + expo(rng);
        if (z > b)
            continue;
        const double d = z - lambda;
        if (unit(rng) <= std::exp(-0.5 * d * d))
            return z;
    }
}

double standard_truncated(double a, double b, Rng& rng) {
    if (a >= 0.0)
        return one_sided_truncated(a, b, rng);
    if (b <= 0.0)
        return -one_sided_truncated(-b, -a, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (b - a >= std::sqrt(2.0 * std::numbers::pi)) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (;;) {
            const double z = normal(rng);
            if (z >= a && z <= b)
                return z;
        }
    }
    std::uniform_real_distribution<double> proposal(a, b);
    for (;;) {
        const double z = proposal(rng);
        if (unit(rng) <= std::exp(-0.5 * z * z))
            return z;
    }
}

} // namespace

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
    if (!(lo <= hi))
        throw InvalidArgument("sample_truncated_normal: empty interval");
    if (sd <= 0.0)
        return std::clamp(mean, lo, hi);
    if (lo == hi)
        return lo;
    const double z = standard_truncated((lo - mean) / sd, (hi - mean) / sd, rng);
    return std::clamp(mean + sd * z, lo, hi);
}

// ---------------------------------------------------------------------------

Points GaussianLinearSampler::sample(const Vector& x, Index n, Rng& rng) const {
    check_x(x);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vector mean = 0.5 * x;
    const double sd = std::sqrt(0.05);
    Points out(dim_, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < dim_; ++i)
            out(i, j) = mean[i] + sd * normal(rng);
    return out;
}

Points GaussianLinearUniformSampler::sample(const Vector& x, Index n, Rng& rng) const {
    check_x(x);
    const double sd = std::sqrt(0.1);
    Points out(dim_, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < dim_; ++i)
            out(i, j) = sample_truncated_normal(x[i], sd, -1.0, 1.0, rng);
    return out;
}

double GaussianMixtureSampler::broad_responsibility(const Vector& x) const {
    check_x(x);
    auto log_box_mass = [&](double var) {
        const double sd = std::sqrt(var);
        double acc = 0.0;
        for (Index i = 0; i < 2; ++i)
            acc += log_normal_mass((-kBoxHalfWidth - x[i]) / sd, (kBoxHalfWidth - x[i]) / sd);
        return acc;
    };
    const double lb = log_box_mass(kBroadVar);
    const double ln = log_box_mass(kNarrowVar);
    return 1.0 / (1.0 + std::exp(ln - lb));
}

Points GaussianMixtureSampler::sample(const Vector& x, Index n, Rng& rng) const {
    const double broad = broad_responsibility(x);
    std::bernoulli_distribution pick_broad(broad);
    Points out(2, n);
    for (Index j = 0; j < n; ++j) {
        const double sd = std::sqrt(pick_broad(rng) ? kBroadVar : kNarrowVar);
        for (Index i = 0; i < 2; ++i)
            out(i, j) = sample_truncated_normal(x[i], sd, -kBoxHalfWidth, kBoxHalfWidth, rng);
    }
    return out;
}

Vector two_moons_simulate(const Vector& w, double angle, double radius) {
    if (w.size() != 2)
        throw InvalidArgument("two_moons_simulate: w must be 2-dimensional");
    Vector x(2);
    x[0] = radius * std::cos(angle) + 0.25 - std::abs(w[0] + w[1]) / std::numbers::sqrt2;
    x[1] = radius * std::sin(angle) + (-w[0] + w[1]) / std::numbers::sqrt2;
    return x;
}

namespace {

Vector two_moons_prior(Rng& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector w(2);
    w[0] = unif(rng);
    w[1] = unif(rng);
    return w;
}

Vector two_moons_forward(const Vector& w, Rng& rng) {
    std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
    std::normal_distribution<double> radius(0.1, 0.01);
    const double a = angle(rng);
    const double r = radius(rng);
    return two_moons_simulate(w, a, r);
}

} // namespace

double TwoMoonsAbcSampler::pilot_tolerance(const Vector& x, Rng& rng) const {
    check_x(x);
    if (options_.pilot_size < 1)
        throw InvalidArgument("two_moons abc: pilot_size must be positive");
    std::vector<double> dist(static_cast<std::size_t>(options_.pilot_size));
    for (auto& d : dist)
        d = (two_moons_forward(two_moons_prior(rng), rng) - x).norm();
    const auto k = static_cast<std::size_t>(
        std::clamp<double>(std::ceil(options_.pilot_quantile * static_cast<double>(dist.size())) - 1.0, 0.0,
                           static_cast<double>(dist.size() - 1)));
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    return dist[k];
}

Points TwoMoonsAbcSampler::sample(const Vector& x, Index n, Rng& rng) const {
    check_x(x);
    const double tol = options_.tolerance > 0 ? options_.tolerance : pilot_tolerance(x, rng);
    Points out(2, n);
    Index accepted = 0;
    Index attempts = 0;
    while (accepted < n) {
        if (attempts >= options_.budget) {
            std::ostringstream msg;
            msg << "two_moons abc: acceptance below floor (accepted " << accepted << " of " << n << " after "
                << attempts << " simulations, tolerance " << tol << ")";
            throw NumericFailure(msg.str());
        }
        ++attempts;
        const Vector w = two_moons_prior(rng);
        if ((two_moons_forward(w, rng) - x).norm() <= tol)
            out.col(accepted++) = w;
    }
    return out;
}

Points ConstantSampler::sample(const Vector& x, Index n, Rng&) const {
    check_x(x);
    return point_.replicate(1, n);
}

// ---------------------------------------------------------------------------
// Precipitation

Matrix render_bumps(const std::vector<Bump>& bumps, const PrecipModel& model) {
    Matrix field = Matrix::Zero(model.width, model.height);
    for (const Bump& b : bumps) {
        const double inv = 1.0 / (2.0 * b.width * b.width);
        for (Index py = 0; py < model.height; ++py)
            for (Index px = 0; px < model.width; ++px) {
                const double dx = static_cast<double>(px) - b.px;
                const double dy = static_cast<double>(py) - b.py;
                field(px, py) += b.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
            }
    }
    return field;
}

Matrix smooth_noise(const PrecipModel& model, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> freq(0.0, 2.0 * std::numbers::pi / 8.0);
    Matrix field = Matrix::Zero(model.width, model.height);
    for (int mode = 0; mode < 3; ++mode) {
        const double amp = model.noise_amplitude * normal(rng);
        const double kx = freq(rng);
        const double ky = freq(rng);
        const double ph = phase(rng);
        for (Index py = 0; py < model.height; ++py)
            for (Index px = 0; px < model.width; ++px)
                field(px, py) += amp * std::cos(kx * static_cast<double>(px) + ky * static_cast<double>(py) + ph);
    }
    return field;
}

std::vector<Bump> fit_bumps(const Matrix& frame, const PrecipModel& model) {
    std::vector<Bump> peaks;
    for (Index py = 0; py < frame.cols(); ++py)
        for (Index px = 0; px < frame.rows(); ++px) {
            const double v = frame(px, py);
            if (v < model.peak_threshold)
                continue;
            bool is_max = true;
            for (Index dy = -1; dy <= 1 && is_max; ++dy)
                for (Index dx = -1; dx <= 1; ++dx) {
                    const Index qx = px + dx;
                    const Index qy = py + dy;
                    if ((dx || dy) && qx >= 0 && qy >= 0 && qx < frame.rows() && qy < frame.cols() &&
                        frame(qx, qy) > v) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max)
                peaks.push_back({static_cast<double>(px), static_cast<double>(py), v, model.bump_width});
        }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Bump& a, const Bump& b) { return a.amplitude > b.amplitude; });
    std::vector<Bump> kept;
    for (const Bump& p : peaks) {
        const bool near = std::any_of(kept.begin(), kept.end(), [&](const Bump& k) {
            return std::hypot(k.px - p.px, k.py - p.py) < 2.0 * model.bump_width;
        });
        if (!near)
            kept.push_back(p);
        if (kept.size() == 3)
            break;
    }
    return kept;
}

std::vector<Matrix> PrecipFieldSampler::frames(const Vector& x) const {
    check_x(x);
    const Index size = model_.width * model_.height;
    std::vector<Matrix> out;
    for (Index t = 0; t < model_.frames; ++t)
        out.emplace_back(Eigen::Map<const Matrix>(x.data() + t * size, model_.width, model_.height));
    return out;
}

Points PrecipFieldSampler::sample(const Vector& x, Index n, Rng& rng) const {
    const auto conditioning = frames(x);
    std::vector<Bump> bumps;
    std::vector<Eigen::Vector2d> velocity;
    if (!conditioning.empty()) {
        bumps = fit_bumps(conditioning.back(), model_);
        const std::vector<Bump> previous =
            conditioning.size() >= 2 ? fit_bumps(conditioning[conditioning.size() - 2], model_) : std::vector<Bump>{};
        for (const Bump& b : bumps) {
            Eigen::Vector2d v = Eigen::Vector2d::Zero();
            double best = 2.0 * model_.bump_width;
            for (const Bump& p : previous) {
                const double d = std::hypot(b.px - p.px, b.py - p.py);
                if (d < best) {
                    best = d;
                    v = {b.px - p.px, b.py - p.py};
                }
            }
            velocity.push_back(v);
        }
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    Points out(dim_c(), n);
    std::vector<Bump> moved(bumps.size());
    for (Index j = 0; j < n; ++j) {
        for (std::size_t b = 0; b < bumps.size(); ++b) {
            moved[b] = bumps[b];
            moved[b].px += velocity[b].x() + model_.move_sd * normal(rng);
            moved[b].py += velocity[b].y() + model_.move_sd * normal(rng);
            moved[b].amplitude *= std::exp(model_.amplitude_log_sd * normal(rng));
        }
        Matrix field = render_bumps(moved, model_) + smooth_noise(model_, rng);
        field = field.cwiseMax(0.0);
        out.col(j) = Eigen::Map<const Vector>(field.data(), field.size());
    }
    return out;
}

EdgeWeightSampler::EdgeWeightSampler(std::shared_ptr<const PrecipFieldSampler> field,
                                     std::shared_ptr<const Graph> graph, BoundingBox bbox)
    : field_(std::move(field)), graph_(std::move(graph)), bbox_(bbox), nominal_(graph_->nominal_costs()) {}

Points EdgeWeightSampler::sample(const Vector& x, Index n, Rng& rng) const {
    const Points fields = field_->sample(x, n, rng);
    const PrecipModel& m = field_->model();
    Points out(dim_c(), n);
    PrecipGrid grid{Matrix(m.width, m.height), bbox_};
    for (Index j = 0; j < n; ++j) {
        grid.values = Eigen::Map<const Matrix>(fields.col(j).data(), m.width, m.height);
        out.col(j) = precip_to_edge_weights(grid, *graph_, nominal_);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

Vector gaussian(Index dim, double var, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(var));
    Vector v(dim);
    for (Index i = 0; i < dim; ++i)
        v[i] = normal(rng);
    return v;
}

Task sbi_task(std::string name, Index dim, std::function<Vector(Rng&)> prior,
              std::function<Vector(const Vector&, Rng&)> simulate, std::shared_ptr<const ConditionalSampler> sampler) {
    Task t;
    t.name = std::move(name);
    t.dim_x = sampler->dim_x();
    t.dim_c = dim;
    t.prior = std::move(prior);
    t.simulate = std::move(simulate);
    t.joint = [prior = t.prior, simulate = t.simulate](Rng& rng) {
        Vector c = prior(rng);
        Vector x = simulate(c, rng);
        return std::pair{std::move(x), std::move(c)};
    };
    t.sampler = std::move(sampler);
    return t;
}

Task routing_task(const TaskOptions& options) {
    auto model = std::make_shared<RoutingModel>();
    model->graph = std::make_shared<const Graph>(grid_graph(options.grid_rows, options.grid_cols));
    model->bbox = {-0.5, static_cast<double>(options.grid_cols) - 0.5, -0.5,
                   static_cast<double>(options.grid_rows) - 0.5};
    model->precip.width = 2 * options.grid_cols;
    model->precip.height = 2 * options.grid_rows;
    const PrecipModel pm = model->precip;
    auto field = std::make_shared<const PrecipFieldSampler>(pm);

    Task t;
    t.name = "routing_grid";
    t.dim_x = field->dim_x();
    t.dim_c = model->graph->num_edges();
    t.sampler = std::make_shared<const EdgeWeightSampler>(field, model->graph, model->bbox);
    t.routing = model;
    t.joint = [model, pm](Rng& rng) {
        std::uniform_int_distribution<int> count(1, 3);
        std::uniform_real_distribution<double> ux(0.0, static_cast<double>(pm.width - 1));
        std::uniform_real_distribution<double> uy(0.0, static_cast<double>(pm.height - 1));
        std::uniform_real_distribution<double> amp(0.5, 1.5);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Bump> bumps(static_cast<std::size_t>(count(rng)));
        for (Bump& b : bumps)
            b = {ux(rng), uy(rng), amp(rng), pm.bump_width};
        const Eigen::Vector2d velocity(normal(rng), normal(rng));

        Vector x(pm.frames * pm.width * pm.height);
        for (Index f = 0; f < pm.frames; ++f) {
            std::vector<Bump> at = bumps;
            for (Bump& b : at) {
                b.px += velocity.x() * static_cast<double>(f);
                b.py += velocity.y() * static_cast<double>(f);
            }
            PrecipModel quiet = pm;
            quiet.noise_amplitude = 0.2 * pm.noise_amplitude;
            Matrix frame = (render_bumps(at, pm) + smooth_noise(quiet, rng)).cwiseMax(0.0);
            x.segment(f * pm.width * pm.height, pm.width * pm.height) =
                Eigen::Map<const Vector>(frame.data(), frame.size());
        }
        for (Bump& b : bumps) {
            b.px += velocity.x() * static_cast<double>(pm.frames) + pm.move_sd * normal(rng);
            b.py += velocity.y() * static_cast<double>(pm.frames) + pm.move_sd * normal(rng);
            b.amplitude *= std::exp(pm.amplitude_log_sd * normal(rng));
        }
        PrecipGrid future{(render_bumps(bumps, pm) + smooth_noise(pm, rng)).cwiseMax(0.0), model->bbox};
        Vector c = precip_to_edge_weights(future, *model->graph);
        return std::pair{std::move(x), std::move(c)};
    };
    return t;
}

} // namespace

std::vector<std::string> task_names() {
    return {"constant", "gaussian_linear", "gaussian_linear_uniform", "gaussian_mixture", "routing_grid",
            "two_moons"};
}

Task make_task(const std::string& name, const TaskOptions& options) {
    if (name == "gaussian_linear") {
        const Index dim = options.dim > 0 ? options.dim : 10;
        return sbi_task(
            name, dim, [dim](Rng& rng) { return gaussian(dim, 0.1, rng); },
            [dim](const Vector& c, Rng& rng) { return Vector(c + gaussian(dim, 0.1, rng)); },
            std::make_shared<const GaussianLinearSampler>(dim));
    }
    if (name == "gaussian_linear_uniform") {
        const Index dim = options.dim > 0 ? options.dim : 10;
        return sbi_task(
            name, dim,
            [dim](Rng& rng) {
                std::uniform_real_distribution<double> unif(-1.0, 1.0);
                Vector c(dim);
                for (Index i = 0; i < dim; ++i)
                    c[i] = unif(rng);
                return c;
            },
            [dim](const Vector& c, Rng& rng) { return Vector(c + gaussian(dim, 0.1, rng)); },
            std::make_shared<const GaussianLinearUniformSampler>(dim));
    }
    if (name == "gaussian_mixture") {
        return sbi_task(
            name, 2,
            [](Rng& rng) {
                std::uniform_real_distribution<double> unif(-10.0, 10.0);
                Vector c(2);
                c[0] = unif(rng);
                c[1] = unif(rng);
                return c;
            },
            [](const Vector& c, Rng& rng) {
                std::bernoulli_distribution broad(0.5);
                const double var = broad(rng) ? 1.0 : 0.01;
                return Vector(c + gaussian(2, var, rng));
            },
            std::make_shared<const GaussianMixtureSampler>());
    }
    if (name == "two_moons") {
        return sbi_task(name, 2, two_moons_prior, two_moons_forward,
                        std::make_shared<const TwoMoonsAbcSampler>(options.abc));
    }
    if (name == "constant") {
        return sbi_task(
            name, 2, [](Rng& rng) { return gaussian(2, 1.0, rng); },
            [](const Vector& c, Rng& rng) { return Vector(c + gaussian(2, 1.0, rng)); },
            std::make_shared<const ConstantSampler>(2, Vector::Zero(2)));
    }
    if (name == "routing_grid")
        return routing_task(options);

    std::string known;
    for (const auto& n : task_names())
        known += (known.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown task '" + name + "'; available: " + known);
}

Dataset draw_dataset(const Task& task, Index n, std::uint64_t seed) {
    if (n < 0)
        throw InvalidArgument("draw_dataset: negative size");
    Dataset d{Points(task.dim_x, n), Points(task.dim_c, n)};
    for (Index i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        auto [x, c] = task.joint(rng);
        d.x.col(i) = x;
        d.c.col(i) = c;
    }
    return d;
}

} // namespace cpo
