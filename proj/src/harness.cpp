#include "mlab/harness.hpp"

#include "mlab/kdtree.hpp"
#include "mlab/parallel.hpp"
#include "mlab/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace mlab::harness {

const char* to_string(Estimator e)
{
    switch (e) {
    case Estimator::pointcloud: return "pointcloud";
    case Estimator::slab: return "slab";
    case Estimator::deconv: return "deconv";
    }
    return "?";
}

const char* to_string(Abscissa a)
{
    return a == Abscissa::log_n ? "log_n" : "loglog_n";
}

namespace {

void require(bool ok, const std::string& msg)
{
    if (!ok) {
        throw ConfigError(msg);
    }
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "model.manifold", "model.ambient_dim", "model.radius", "model.minor_radius", "model.noise", "model.pi",
        "model.clutter_halfwidth", "estimator.kind", "slab.K", "slab.b1", "slab.b2", "slab.net_fraction",
        "slab.family_count", "slab.family_offset", "deconv.k", "deconv.L", "deconv.delta", "deconv.grid_spacing",
        "deconv.box_halfwidth", "deconv.calibration_spacing", "experiment.n", "experiment.reps", "experiment.seed",
        "experiment.threads", "experiment.loss_resolution", "output.csv", "output.summary", "output.json",
        "output.record_runtime"};
    return keys;
}

std::size_t intrinsic_dim_of(const ModelSpec& m)
{
    return m.manifold == "torus" ? 2 : 1;
}

}  // namespace

void ExperimentConfig::validate() const
{
    require(model.manifold == "circle" || model.manifold == "segment" || model.manifold == "torus",
            "model.manifold must be circle, segment or torus");
    require(model.ambient_dim >= 1 && model.ambient_dim <= 3, "model.ambient_dim must be 1, 2 or 3");
    require(model.manifold != "circle" || model.ambient_dim >= 2, "a circle needs model.ambient_dim >= 2");
    require(model.manifold != "torus" || model.ambient_dim == 3, "a torus needs model.ambient_dim = 3");
    require(model.radius > 0.0, "model.radius must be positive");
    require(model.manifold != "torus" || (model.minor_radius > 0.0 && model.minor_radius < model.radius),
            "model.minor_radius must lie in (0, model.radius)");
    if (model.noise == sampling::ModelTag::clutter) {
        require(model.pi > 0.0 && model.pi <= 1.0, "model.pi must lie in (0, 1]");
        require(model.clutter_halfwidth > 0.0, "model.clutter_halfwidth must be positive");
    }
    if (estimator == Estimator::deconv) {
        require(model.noise == sampling::ModelTag::additive, "estimator deconv requires model.noise = additive");
        require(deconv.L > 1.0, "deconv.L must exceed 1");
        require(deconv.delta > 0.0 && deconv.delta < 1.0, "deconv.delta must lie in (0, 1)");
        require(deconv.k >= 0, "deconv.k must be nonnegative");
        require(deconv.grid_spacing > 0.0 && deconv.calibration_spacing > 0.0, "deconv grid spacings must be positive");
        require(deconv.box_halfwidth > 0.0, "deconv.box_halfwidth must be positive");
        require(model.ambient_dim > intrinsic_dim_of(model), "deconvolution needs ambient_dim > intrinsic dimension");
    } else {
        require(model.noise != sampling::ModelTag::additive,
                std::string("estimator ") + to_string(estimator) + " does not apply to additive noise");
    }
    if (estimator == Estimator::slab) {
        require(slab.K > 0.0 && slab.b1 > 0.0 && slab.b2 > 0.0, "slab.K, slab.b1 and slab.b2 must be positive");
        require(slab.net_fraction > 0.0 && slab.net_fraction <= 0.5, "slab.net_fraction must lie in (0, 0.5]");
        require(slab.family_offset > 0.0, "slab.family_offset must be positive");
        require(model.ambient_dim >= 2, "offset families need model.ambient_dim >= 2");
    }
    require(!n_list.empty(), "experiment.n is empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        require(n_list[i] >= 3, "every n must be at least 3");
        require(i == 0 || n_list[i] > n_list[i - 1], "experiment.n must be strictly increasing");
    }
    require(reps >= 1, "experiment.reps must be at least 1");
    require(loss_resolution > 0.0, "experiment.loss_resolution must be positive");
}

ExperimentConfig ExperimentConfig::from_config(const Config& c)
{
    for (const auto& [key, value] : c.entries()) {
        if (!known_keys().count(key)) {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    ExperimentConfig e;
    auto& m = e.model;
    m.manifold = c.get_string("model.manifold", m.manifold);
    m.ambient_dim = static_cast<std::size_t>(c.get_int("model.ambient_dim", static_cast<long>(m.ambient_dim)));
    m.radius = c.get_double("model.radius", m.radius);
    m.minor_radius = c.get_double("model.minor_radius", m.minor_radius);
    const std::string noise = c.get_string("model.noise", "noiseless");
    if (noise == "noiseless") {
        m.noise = sampling::ModelTag::noiseless;
    } else if (noise == "clutter") {
        m.noise = sampling::ModelTag::clutter;
    } else if (noise == "additive") {
        m.noise = sampling::ModelTag::additive;
    } else {
        throw ConfigError("model.noise must be noiseless, clutter or additive");
    }
    m.pi = c.get_double("model.pi", m.pi);
    m.clutter_halfwidth = c.get_double("model.clutter_halfwidth", m.clutter_halfwidth);

    const std::string kind = c.get_string("estimator.kind", "pointcloud");
    if (kind == "pointcloud") {
        e.estimator = Estimator::pointcloud;
    } else if (kind == "slab") {
        e.estimator = Estimator::slab;
    } else if (kind == "deconv") {
        e.estimator = Estimator::deconv;
    } else {
        throw ConfigError("estimator.kind must be pointcloud, slab or deconv");
    }

    e.slab.K = c.get_double("slab.K", e.slab.K);
    e.slab.b1 = c.get_double("slab.b1", e.slab.b1);
    e.slab.b2 = c.get_double("slab.b2", e.slab.b2);
    e.slab.net_fraction = c.get_double("slab.net_fraction", e.slab.net_fraction);
    const long count = c.get_int("slab.family_count", static_cast<long>(e.slab.family_count));
    require(count >= 0, "slab.family_count must be nonnegative");
    e.slab.family_count = static_cast<std::size_t>(count);
    e.slab.family_offset = c.get_double("slab.family_offset", e.slab.family_offset);

    e.deconv.k = static_cast<int>(c.get_int("deconv.k", e.deconv.k));
    e.deconv.L = c.get_double("deconv.L", e.deconv.L);
    e.deconv.delta = c.get_double("deconv.delta", e.deconv.delta);
    e.deconv.grid_spacing = c.get_double("deconv.grid_spacing", e.deconv.grid_spacing);
    e.deconv.box_halfwidth = c.get_double("deconv.box_halfwidth", e.deconv.box_halfwidth);
    e.deconv.calibration_spacing = c.get_double("deconv.calibration_spacing", e.deconv.calibration_spacing);

    if (c.has("experiment.n")) {
        e.n_list.clear();
        for (double v : c.get_list("experiment.n")) {
            require(v >= 1.0 && v == std::floor(v), "experiment.n entries must be positive integers");
            e.n_list.push_back(static_cast<std::size_t>(v));
        }
    }
    const long reps = c.get_int("experiment.reps", 1);
    require(reps >= 1, "experiment.reps must be at least 1");
    e.reps = static_cast<std::size_t>(reps);
    const long seed = c.get_int("experiment.seed", 1);
    require(seed >= 0, "experiment.seed must be nonnegative");
    e.seed = static_cast<std::uint64_t>(seed);
    const long threads = c.get_int("experiment.threads", 1);
    require(threads >= 0, "experiment.threads must be nonnegative");
    e.threads = static_cast<std::size_t>(threads);
    e.loss_resolution = c.get_double("experiment.loss_resolution", e.loss_resolution);

    e.output.csv = c.get_string("output.csv", "");
    e.output.summary = c.get_string("output.summary", "");
    e.output.json = c.get_string("output.json", "");
    e.output.record_runtime = c.get_bool("output.record_runtime", false);
    e.validate();
    return e;
}

std::shared_ptr<const geometry::ParametricManifold> build_manifold(const ModelSpec& spec)
{
    const auto D = static_cast<Eigen::Index>(spec.ambient_dim);
    if (spec.manifold == "circle") {
        return std::make_shared<const geometry::ParametricManifold>(geometry::make_circle(Vector::Zero(D), spec.radius));
    }
    if (spec.manifold == "segment") {
        Vector a = Vector::Zero(D);
        Vector b = Vector::Zero(D);
        a[0] = -spec.radius;
        b[0] = spec.radius;
        return std::make_shared<const geometry::ParametricManifold>(geometry::make_segment(a, b));
    }
    if (spec.manifold == "torus") {
        return std::make_shared<const geometry::ParametricManifold>(
            geometry::make_torus(spec.radius, spec.minor_radius));
    }
    throw ConfigError("unknown manifold '" + spec.manifold + "'");
}

sampling::NoiseModel build_noise(const ModelSpec& spec)
{
    switch (spec.noise) {
    case sampling::ModelTag::noiseless: return sampling::Noiseless{};
    case sampling::ModelTag::clutter: return sampling::Clutter{spec.pi, Box::cube(spec.ambient_dim, spec.clutter_halfwidth)};
    case sampling::ModelTag::additive: return sampling::Additive{1.0};
    }
    return sampling::Noiseless{};
}

struct ExperimentContext::LossNet {
    PointCloud points;
    KdTree tree;
    double covering = 0.0;

    explicit LossNet(geometry::Discretization net)
        : points(std::move(net.points)), tree(points), covering(net.covering_radius)
    {
    }
};

ExperimentContext::ExperimentContext(ExperimentConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.validate();
    manifold_ = build_manifold(cfg_.model);
    dist_ = std::make_unique<sampling::ManifoldDistribution>(sampling::ManifoldDistribution::uniform(manifold_));
    noise_ = build_noise(cfg_.model);

    if (cfg_.estimator == Estimator::pointcloud) {
        loss_net_ = std::make_unique<LossNet>(geometry::discretize(*manifold_, cfg_.loss_resolution));
    }
    if (cfg_.estimator == Estimator::slab) {
        for (std::size_t n : cfg_.n_list) {
            const double eps = slabfit::epsilon_n(static_cast<double>(n), manifold_->intrinsic_dim(), cfg_.slab.K);
            families_.push_back(
                slabfit::offset_family(*manifold_, cfg_.slab.family_count, cfg_.slab.family_offset * std::sqrt(eps)));
        }
    }
    if (cfg_.estimator == Estimator::deconv) {
        const std::size_t D = manifold_->ambient_dim();
        const std::size_t d = manifold_->intrinsic_dim();
        if (cfg_.deconv.k == 0) {
            cfg_.deconv.k = deconv::default_order(d, cfg_.deconv.delta);
        }
        const Box box = Box::cube(D, cfg_.deconv.box_halfwidth);
        grid_ = geometry::Grid::with_max_spacing(box, cfg_.deconv.grid_spacing);
        std::vector<double> hs;
        for (std::size_t n : cfg_.n_list) {
            hs.push_back(deconv::select_bandwidth(static_cast<double>(n)));
        }
        deconv::CalibrationOptions opt;
        opt.grid_spacing = cfg_.deconv.calibration_spacing;
        calibration_ = deconv::calibrate_constants(*dist_, hs, cfg_.deconv.k, cfg_.deconv.L, cfg_.deconv.delta, box, opt);
        for (double h : hs) {
            deconv::KernelOptions ko;
            // Room for the grid box plus data up to ~7 noise standard deviations out.
            ko.max_radius = 2.0 * std::sqrt(static_cast<double>(D)) * (cfg_.deconv.box_halfwidth + 7.0);
            tables_.push_back(deconv::build_kernel(h, cfg_.deconv.k, D, ko));
        }
    }
}

ExperimentContext::~ExperimentContext() = default;

double ExperimentContext::bandwidth(std::size_t n_index) const
{
    return deconv::select_bandwidth(static_cast<double>(cfg_.n_list.at(n_index)));
}

deconv::Threshold ExperimentContext::threshold(std::size_t n_index) const
{
    if (!calibration_) {
        throw std::logic_error("threshold requested without a deconvolution estimator");
    }
    return deconv::select_threshold(bandwidth(n_index), manifold_->ambient_dim(), manifold_->intrinsic_dim(),
                                    cfg_.deconv.k, cfg_.deconv.L, *calibration_);
}

std::uint64_t ExperimentContext::seed_for(std::size_t n_index, std::size_t rep) const
{
    return derive_seed(cfg_.seed, n_index, rep);
}

sampling::Dataset ExperimentContext::dataset(std::size_t n_index, std::size_t rep) const
{
    return sampling::sample(*dist_, noise_, cfg_.n_list.at(n_index), seed_for(n_index, rep));
}

ReplicationResult ExperimentContext::run(std::size_t n_index, std::size_t rep, bool keep_estimate) const
{
    const auto t0 = std::chrono::steady_clock::now();
    ReplicationResult r;
    r.n = cfg_.n_list.at(n_index);
    r.rep = rep;
    const sampling::Dataset data = dataset(n_index, rep);

    switch (cfg_.estimator) {
    case Estimator::pointcloud: {
        const double a = geometry::directed_hausdorff(data.y, loss_net_->tree);
        const double b = geometry::directed_hausdorff(loss_net_->points, KdTree(data.y));
        r.loss = std::max(a, b);
        r.loss_bound = loss_net_->covering;
        if (keep_estimate) {
            r.estimate = data.y;
        }
        break;
    }
    case Estimator::slab: {
        const auto& family = families_[n_index];
        slabfit::SlabParams p{cfg_.slab.b1, cfg_.slab.b2, cfg_.slab.net_fraction};
        const auto res = slabfit::fit(family, data.y, cfg_.slab.K, p, 1);
        r.chosen = res.chosen;
        if (res.chosen != 0) {
            const auto H = geometry::manifold_hausdorff(family.members[res.chosen], *manifold_, cfg_.loss_resolution);
            r.loss = H.value;
            r.loss_bound = H.error_bound;
        }
        if (keep_estimate) {
            r.estimate = geometry::discretize(family.members[res.chosen], cfg_.loss_resolution).points;
        }
        break;
    }
    case Estimator::deconv: {
        const auto& table = tables_[n_index];
        r.h = table.h;
        const auto field = deconv::ghat_field(data.y, *grid_, table, 1);
        r.lambda = threshold(n_index).lambda;
        PointCloud level = deconv::extract_levelset(field, r.lambda);
        if (level.empty()) {
            const Box& box = grid_->box();
            r.loss = (box.hi - box.lo).norm();
            r.empty_estimate = true;
        } else {
            const auto H = deconv::truncated_loss(*manifold_, level, grid_->box(), cfg_.loss_resolution);
            r.loss = H.value;
            r.loss_bound = H.error_bound;
        }
        if (keep_estimate) {
            r.estimate = std::move(level);
        }
        break;
    }
    }
    if (cfg_.output.record_runtime) {
        r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return r;
}

std::vector<SummaryRow> RiskTable::summary() const
{
    std::vector<SummaryRow> out;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        std::vector<double> losses;
        while (j < rows.size() && rows[j].n == rows[i].n) {
            losses.push_back(rows[j].loss);
            ++j;
        }
        SummaryRow s;
        s.n = rows[i].n;
        s.count = losses.size();
        s.mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
        s.median = median(losses);
        s.q25 = quantile(losses, 0.25);
        s.q75 = quantile(losses, 0.75);
        out.push_back(s);
        i = j;
    }
    return out;
}

RiskTable run_experiment(const ExperimentConfig& cfg)
{
    const ExperimentContext ctx(cfg);
    return run_experiment(ctx);
}

RiskTable run_experiment(const ExperimentContext& ctx)
{
    const auto& cfg = ctx.config();
    const std::size_t total = cfg.n_list.size() * cfg.reps;
    std::vector<ReplicationResult> slots(total);
    parallel_for(total, resolve_threads(cfg.threads), [&](std::size_t t) {
        slots[t] = ctx.run(t / cfg.reps, t % cfg.reps);
    });
    RiskTable table;
    table.rows.reserve(total);
    for (const auto& s : slots) {
        table.rows.push_back({s.n, s.rep, s.loss, s.runtime_ms});
        table.empty_estimates += s.empty_estimate ? 1 : 0;
    }
    return table;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values)
{
    return quantile(std::move(values), 0.5);
}

RateFit rate_fit(const RiskTable& table, Abscissa abscissa)
{
    std::vector<double> n, med;
    for (const auto& s : table.summary()) {
        n.push_back(static_cast<double>(s.n));
        med.push_back(s.median);
    }
    return rate_fit(n, med, abscissa);
}

RateFit rate_fit(const std::vector<double>& n, const std::vector<double>& medians, Abscissa abscissa)
{
    if (n.size() != medians.size()) {
        throw std::invalid_argument("rate fit needs one median per n");
    }
    if (std::set<double>(n.begin(), n.end()).size() < 3) {
        throw std::invalid_argument("rate fit needs at least 3 distinct n");
    }
    const std::size_t m = n.size();
    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(medians[i] > 0.0)) {
            throw std::invalid_argument("degenerate fit");
        }
        const double ln = std::log(n[i]);
        if (abscissa == Abscissa::loglog_n && !(ln > 1.0)) {
            throw std::invalid_argument("log log n abscissa needs n > e");
        }
        x[i] = abscissa == Abscissa::log_n ? ln : std::log(ln);
        y[i] = std::log(medians[i]);
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    RateFit f;
    f.abscissa = abscissa;
    f.points = m;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ssr += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    f.slope_stderr = m > 2 ? std::sqrt(ssr / static_cast<double>(m - 2) / sxx) : 0.0;
    return f;
}

}  // namespace mlab::harness
