#include "mlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace mlab::sampling {

namespace {

void require_single_chart(const ParametricManifold& m)
{
    if (m.charts().size() != 1) {
        throw std::invalid_argument("distributions are defined on single-chart manifolds only (" + m.label() + ")");
    }
}

double box_volume(const Box& b)
{
    return b.volume();
}

}  // namespace

std::vector<std::size_t> default_pieces(const ParametricManifold& m, double scale)
{
    const Box& dom = m.charts()[0].domain;
    std::vector<std::size_t> pieces;
    for (std::size_t k = 0; k < m.intrinsic_dim(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double arc = (dom.hi[i] - dom.lo[i]) * m.axis_speed(0, k);
        const double p = std::clamp(std::ceil(scale * arc / 0.2), 4.0, 4000.0);
        pieces.push_back(static_cast<std::size_t>(p));
    }
    return pieces;
}

ManifoldDistribution::ManifoldDistribution(std::shared_ptr<const ParametricManifold> manifold,
                                           std::function<double(const Vector&)> param_density)
    : manifold_(std::move(manifold)), param_density_(std::move(param_density))
{
    if (!manifold_) {
        throw std::invalid_argument("distribution needs a manifold");
    }
    require_single_chart(*manifold_);
    const auto rule = quad::box_rule(manifold_->charts()[0].domain, manifold_->periodic(), default_pieces(*manifold_));
    lower_ = std::numeric_limits<double>::infinity();
    upper_ = 0.0;
    mass_ = 0.0;
    envelope_ = 0.0;
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
        const Vector u = rule.nodes.point(i);
        const double p = param_density_(u);
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("parameter density must be finite and nonnegative");
        }
        const double g = p / manifold_->volume_factor(0, u);
        lower_ = std::min(lower_, g);
        upper_ = std::max(upper_, g);
        envelope_ = std::max(envelope_, p);
        mass_ += rule.weights[i] * p;
    }
    if (std::abs(mass_ - 1.0) > 1e-6) {
        throw std::invalid_argument("density integrates to " + std::to_string(mass_) + ", not 1");
    }
    envelope_ *= 1.25;
}

ManifoldDistribution ManifoldDistribution::uniform(std::shared_ptr<const ParametricManifold> manifold)
{
    require_single_chart(*manifold);
    const auto rule = quad::box_rule(manifold->charts()[0].domain, manifold->periodic(), default_pieces(*manifold));
    double vol = 0.0;
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
        vol += rule.weights[i] * manifold->volume_factor(0, rule.nodes.point(i));
    }
    const ParametricManifold* m = manifold.get();
    return ManifoldDistribution(manifold, [m, vol](const Vector& u) { return m->volume_factor(0, u) / vol; });
}

ManifoldDistribution ManifoldDistribution::gaussian_parameter(std::shared_ptr<const ParametricManifold> manifold)
{
    require_single_chart(*manifold);
    const Box dom = manifold->charts()[0].domain;
    double z = 1.0;
    for (Eigen::Index k = 0; k < dom.lo.size(); ++k) {
        z *= 0.5 * (std::erf(dom.hi[k] / std::numbers::sqrt2) - std::erf(dom.lo[k] / std::numbers::sqrt2));
    }
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(dom.dim())) / z;
    return ManifoldDistribution(manifold, [norm](const Vector& u) { return norm * std::exp(-0.5 * u.squaredNorm()); });
}

double ManifoldDistribution::density(const Vector& u) const
{
    return param_density_(u) / manifold_->volume_factor(0, u);
}

double ManifoldDistribution::acceptance_rate() const
{
    return mass_ / (envelope_ * box_volume(manifold_->charts()[0].domain));
}

quad::DiscreteMeasure ManifoldDistribution::quadrature(double pieces_scale) const
{
    return quadrature(default_pieces(*manifold_, pieces_scale));
}

quad::DiscreteMeasure ManifoldDistribution::quadrature(const std::vector<std::size_t>& pieces) const
{
    const auto rule = quad::box_rule(manifold_->charts()[0].domain, manifold_->periodic(), pieces);
    quad::DiscreteMeasure mu;
    mu.atoms = PointCloud(manifold_->ambient_dim());
    mu.atoms.reserve(rule.weights.size());
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
        const Vector u = rule.nodes.point(i);
        const double w = rule.weights[i] * param_density_(u);
        if (w > 0.0) {
            mu.atoms.push_back(manifold_->embed(0, u));
            mu.weights.push_back(w);
        }
    }
    return mu;
}

const char* to_string(ModelTag tag)
{
    switch (tag) {
    case ModelTag::noiseless:
        return "noiseless";
    case ModelTag::clutter:
        return "clutter";
    case ModelTag::additive:
        return "additive";
    }
    return "unknown";
}

Vector draw_manifold_point(const ManifoldDistribution& dist, DrawStream& stream)
{
    const double rate = dist.acceptance_rate();
    if (rate < 1e-4) {
        throw std::invalid_argument("degenerate density/parametrization");
    }
    const Box& dom = dist.manifold().charts()[0].domain;
    const auto d = static_cast<Eigen::Index>(dom.dim());
    const double envelope = dist.param_density_envelope();
    const auto max_attempts = static_cast<std::size_t>(200.0 / rate) + 1000;
    Vector u(d);
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        for (Eigen::Index k = 0; k < d; ++k) {
            u[k] = stream.uniform(dom.lo[k], dom.hi[k]);
        }
        if (stream.uniform() * envelope <= dist.param_density(u)) {
            return dist.manifold().embed(0, u);
        }
    }
    throw std::invalid_argument("degenerate density/parametrization");
}

Dataset sample_on_manifold(const ManifoldDistribution& dist, std::size_t n, std::uint64_t seed)
{
    Dataset out;
    out.model = ModelTag::noiseless;
    out.seed = seed;
    out.y = PointCloud(dist.manifold().ambient_dim());
    out.y.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        DrawStream s(seed, i, channel::manifold);
        out.y.push_back(draw_manifold_point(dist, s));
    }
    return out;
}

Dataset sample_clutter(const ManifoldDistribution& dist, double pi, const Box& box, std::size_t n, std::uint64_t seed)
{
    if (!(pi > 0.0) || pi > 1.0) {
        throw std::invalid_argument("clutter mixing weight must lie in (0, 1]");
    }
    const ParametricManifold& m = dist.manifold();
    if (box.dim() != m.ambient_dim() || !(box.volume() > 0.0)) {
        throw std::invalid_argument("clutter box must be a positive-volume box in the ambient space");
    }
    const double diag = (box.hi - box.lo).norm();
    const auto net = geometry::discretize(m, diag / 400.0);
    for (std::size_t i = 0; i < net.points.size(); ++i) {
        if (!box.contains(net.points[i], 1e-12)) {
            throw std::invalid_argument("manifold is not inside the clutter box");
        }
    }
    Dataset out;
    out.model = ModelTag::clutter;
    out.seed = seed;
    out.y = PointCloud(m.ambient_dim());
    out.y.reserve(n);
    out.is_clutter.reserve(n);
    const auto D = static_cast<Eigen::Index>(m.ambient_dim());
    for (std::size_t i = 0; i < n; ++i) {
        DrawStream c(seed, i, channel::clutter);
        if (c.uniform() < pi) {
            DrawStream s(seed, i, channel::manifold);
            out.y.push_back(draw_manifold_point(dist, s));
            out.is_clutter.push_back(0);
        } else {
            Vector y(D);
            for (Eigen::Index k = 0; k < D; ++k) {
                y[k] = c.uniform(box.lo[k], box.hi[k]);
            }
            out.y.push_back(y);
            out.is_clutter.push_back(1);
        }
    }
    return out;
}

Dataset sample_additive(const ManifoldDistribution& dist, std::size_t n, std::uint64_t seed, double scale)
{
    if (!(scale > 0.0)) {
        throw std::invalid_argument("noise scale must be positive");
    }
    const std::size_t D = dist.manifold().ambient_dim();
    Dataset out;
    out.model = ModelTag::additive;
    out.seed = seed;
    out.y = PointCloud(D);
    out.x = PointCloud(D);
    out.z = PointCloud(D);
    out.y.reserve(n);
    out.x.reserve(n);
    out.z.reserve(n);
    Vector z(static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < n; ++i) {
        DrawStream s(seed, i, channel::manifold);
        const Vector x = draw_manifold_point(dist, s);
        DrawStream e(seed, i, channel::noise);
        for (auto& v : z) {
            v = scale * e.normal();
        }
        out.x.push_back(x);
        out.z.push_back(z);
        out.y.push_back(Vector(x + z));
    }
    return out;
}

Dataset sample(const ManifoldDistribution& dist, const NoiseModel& model, std::size_t n, std::uint64_t seed)
{
    if (const auto* c = std::get_if<Clutter>(&model)) {
        return sample_clutter(dist, c->pi, c->box, n, seed);
    }
    if (const auto* a = std::get_if<Additive>(&model)) {
        return sample_additive(dist, n, seed, a->scale);
    }
    return sample_on_manifold(dist, n, seed);
}

double empirical_mass(const PointCloud& cloud, const Slab& region)
{
    if (cloud.empty()) {
        throw std::invalid_argument("empirical mass of an empty cloud");
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        count += geometry::slab_membership(region, cloud[i]) ? 1 : 0;
    }
    return static_cast<double>(count) / static_cast<double>(cloud.size());
}

double empirical_mass(const PointCloud& cloud, const Box& region)
{
    if (cloud.empty()) {
        throw std::invalid_argument("empirical mass of an empty cloud");
    }
    if (region.dim() != cloud.dim()) {
        throw std::invalid_argument("region dimension does not match cloud dimension");
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        count += region.contains(cloud[i]) ? 1 : 0;
    }
    return static_cast<double>(count) / static_cast<double>(cloud.size());
}

void write_dataset_csv(std::ostream& os, const Dataset& data)
{
    const std::size_t D = data.y.dim();
    const bool latent = data.model == ModelTag::additive;
    const bool flags = data.model == ModelTag::clutter;
    std::string header;
    auto cols = [&](char c) {
        for (std::size_t k = 1; k <= D; ++k) {
            header += (header.empty() ? "" : ",") + std::string(1, c) + std::to_string(k);
        }
    };
    cols('y');
    if (latent) {
        cols('x');
        cols('z');
    }
    if (flags) {
        header += ",is_clutter";
    }
    os << header << '\n';
    char buf[40];
    auto put = [&](double v, bool first) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (!first) {
            os << ',';
        }
        os << buf;
    };
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t k = 0; k < D; ++k) {
            put(data.y[i][k], k == 0);
        }
        if (latent) {
            for (std::size_t k = 0; k < D; ++k) {
                put(data.x[i][k], false);
            }
            for (std::size_t k = 0; k < D; ++k) {
                put(data.z[i][k], false);
            }
        }
        if (flags) {
            os << ',' << static_cast<int>(data.is_clutter[i]);
        }
        os << '\n';
    }
}

}  // namespace mlab::sampling
