#pragma once

#include "mlab/core.hpp"
#include "mlab/geometry.hpp"
#include "mlab/quadrature.hpp"
#include "mlab/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <variant>

namespace mlab::sampling {

using geometry::ParametricManifold;
using geometry::Slab;

// Distribution G on a single-chart manifold, given by the density of the
// parameter u with respect to Lebesgue measure on the chart box. The density
// relative to the manifold volume measure is g(u) = p(u) / sqrt(det J^T J).
class ManifoldDistribution {
public:
    ManifoldDistribution(std::shared_ptr<const ParametricManifold> manifold,
                         std::function<double(const Vector&)> param_density);

    // g constant with respect to the volume measure.
    static ManifoldDistribution uniform(std::shared_ptr<const ParametricManifold> manifold);
    // Pushforward of a standard Gaussian on the parameter box, truncated to it.
    static ManifoldDistribution gaussian_parameter(std::shared_ptr<const ParametricManifold> manifold);

    const ParametricManifold& manifold() const { return *manifold_; }
    std::shared_ptr<const ParametricManifold> manifold_ptr() const { return manifold_; }

    double param_density(const Vector& u) const { return param_density_(u); }
    double density(const Vector& u) const;

    // b and B: extreme values of g over the quadrature net.
    double lower_bound() const { return lower_; }
    double upper_bound() const { return upper_; }
    // Quadrature of the total mass (1 within 1e-6 by construction check).
    double mass() const { return mass_; }
    // Envelope used by the rejection sampler.
    double param_density_envelope() const { return envelope_; }
    double acceptance_rate() const;

    // Atoms on M at the embedded quadrature nodes with G-masses as weights.
    // `pieces_scale` multiplies the default piece count per axis.
    quad::DiscreteMeasure quadrature(double pieces_scale = 1.0) const;
    // Same with explicit piece counts per parameter axis.
    quad::DiscreteMeasure quadrature(const std::vector<std::size_t>& pieces) const;

private:
    std::shared_ptr<const ParametricManifold> manifold_;
    std::function<double(const Vector&)> param_density_;
    double lower_ = 0.0;
    double upper_ = 0.0;
    double mass_ = 0.0;
    double envelope_ = 0.0;
};

std::vector<std::size_t> default_pieces(const ParametricManifold& m, double scale = 1.0);

struct Noiseless {};
struct Clutter {
    double pi = 1.0;
    Box box;
};
struct Additive {
    double scale = 1.0;
};
using NoiseModel = std::variant<Noiseless, Clutter, Additive>;

enum class ModelTag { noiseless, clutter, additive };

const char* to_string(ModelTag tag);

struct Dataset {
    ModelTag model = ModelTag::noiseless;
    std::uint64_t seed = 0;
    PointCloud y;
    PointCloud x;                        // additive model: latent manifold points
    PointCloud z;                        // additive model: noise draws
    std::vector<std::uint8_t> is_clutter;  // clutter model

    std::size_t size() const { return y.size(); }
};

Dataset sample_on_manifold(const ManifoldDistribution& dist, std::size_t n, std::uint64_t seed);
Dataset sample_clutter(const ManifoldDistribution& dist, double pi, const Box& box, std::size_t n,
                       std::uint64_t seed);
Dataset sample_additive(const ManifoldDistribution& dist, std::size_t n, std::uint64_t seed, double scale = 1.0);
Dataset sample(const ManifoldDistribution& dist, const NoiseModel& model, std::size_t n, std::uint64_t seed);

// One manifold draw from an explicit stream: the building block of every sampler.
Vector draw_manifold_point(const ManifoldDistribution& dist, DrawStream& stream);

// Fraction of points inside the closed region.
double empirical_mass(const PointCloud& cloud, const Slab& region);
double empirical_mass(const PointCloud& cloud, const Box& region);

// CSV with header y1..yD[,x1..xD,z1..zD][,is_clutter]; columns follow the model tag.
void write_dataset_csv(std::ostream& os, const Dataset& data);

}  // namespace mlab::sampling
