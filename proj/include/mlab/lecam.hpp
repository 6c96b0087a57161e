#pragma once

#include "mlab/core.hpp"
#include "mlab/deconv.hpp"
#include "mlab/geometry.hpp"
#include "mlab/quadrature.hpp"
#include "mlab/sampling.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mlab::lecam {

using deconv::DensityField;
using geometry::Grid;
using geometry::ParametricManifold;
using sampling::ManifoldDistribution;

enum class PairTag { bump, cosine };

struct LeastFavorablePair {
    PairTag tag;
    std::shared_ptr<const ParametricManifold> M0;
    std::shared_ptr<const ParametricManifold> M1;
    ManifoldDistribution G0;
    ManifoldDistribution G1;
    double gamma = 0.0;
    double a = 0.0;      // cosine frequency scale
    double kappa = 0.0;
    std::size_t d = 0;
    std::size_t D = 0;
    double bump_radius = 0.0;  // support radius of the bump (bump pairs)
    double patch_halfwidth = 0.0;
};

// Graphs of ±γ ∏ cos(u_l / (a sqrt γ)) over [-6, 6]^d, padded with zeros to R^D;
// G_j is the pushforward of the standard Gaussian truncated to the box.
LeastFavorablePair cosine_pair(double gamma, double a, std::size_t d, std::size_t D, double kappa);

// C^2 bump profile (1 - s^2)^3 on [0, 1], zero beyond.
double bump_profile(double s);

struct BumpValidation {
    double hausdorff = 0.0;
    double hausdorff_bound = 0.0;
    double apex_separation = 0.0;
    double tangent_misalignment = 0.0;  // sine of the largest principal angle at the apex
    double mu_B = 0.0;                  // measure of {bump > γ/2} on M1
    double mu_A = 0.0;                  // measure of the bump support on M1
    double mu_B_ratio = 0.0;            // mu_B / γ^{d/2}
    double area_constant = 0.0;         // mu_A / γ^{d/2}
    double separation_factor = 0.0;     // inf_{x in B} d(x, M0) / γ
    double max_curvature = 0.0;
    bool curvature_ok = false;
};

// Flat patch M0 = graph of 0 over [-3κ, 3κ]^d and M1 = graph of γ β(|u| / ρ)
// with ρ = 3 sqrt(γ κ); G_j uniform. Requires 0 <= γ <= κ / 4.
LeastFavorablePair bump_pair(double gamma, double kappa, std::size_t d, std::size_t D);
BumpValidation validate_bump_pair(const LeastFavorablePair& pair, double resolution);

struct ConvolvedField {
    DensityField field;
    double grid_mass = 0.0;
    double tail = 0.0;  // 1 - grid mass
};

// q(y) = Σ_a w_a φ_σ(y - u_a) over the atoms of G (separable, matrix products in D = 2).
ConvolvedField convolve_with_gaussian(const quad::DiscreteMeasure& G, const Grid& grid, double sigma = 1.0);
ConvolvedField convolve_with_gaussian(const ManifoldDistribution& G, const Grid& grid, double pieces_scale = 1.0);

struct DivergenceReport {
    double l1 = 0.0;
    double tv = 0.0;
    double affinity = 0.0;
    double error = 0.0;  // mass outside the grid; excludes the O(spacing^2) cell-rule error
    std::size_t n = 0;
    double product_affinity_lower = 0.0;
    double separation = 0.0;
    double lecam = 0.0;
};

// TV = (1/2) cell volume Σ |q0 - q1|, affinity = 1 - TV.
DivergenceReport tv_distance(const DensityField& q0, const DensityField& q1);

// ρ (1/8) (1 - tv)^{2n}.
double lecam_bound(double rho, double tv, double n);
// (1/8) (1 - l1/2)^{2n}.
double affinity_product_lower(double l1, double n);

// Fills product_affinity_lower and lecam for sample size n and separation rho.
void attach_bounds(DivergenceReport& r, double rho, double n);

// TV(G0, G1) between the singular manifold distributions: 1 for cosine pairs
// (mutually singular); for bump pairs the parameter-aligned semi-analytic value.
double manifold_tv(const LeastFavorablePair& pair);

struct ClutterTV {
    double mixture_tv = 0.0;  // TV((1-π)U + πG0, (1-π)U + πG1), Lebesgue decomposition
    double scaled_tv = 0.0;   // π TV(G0, G1)
    double absolutely_continuous = 0.0;
    double singular = 0.0;
    double quadrature_error = 0.0;
    double difference() const { return std::abs(mixture_tv - scaled_tv); }
};

// Mixture path: the uniform parts are integrated over grid cells of the box;
// the singular parts are integrated over quadrature atoms of G0 and G1, with
// coincident atoms (same ambient position) paired.
ClutterTV clutter_tv(const LeastFavorablePair& pair, double pi, const Box& box, double grid_spacing = 0.05,
                     double pieces_scale = 200.0);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least squares of log TV on 1/γ; γ list decreasing, at least 4 entries.
DecayFit tv_decay_fit(const std::vector<double>& gammas, const std::vector<double>& tvs);

struct CosineGrid {
    double spacing = 0.05;
    double pieces_scale = 1.0;
};

// Convolved cosine pair TV on a grid covering M ⊕ 6σ.
DivergenceReport cosine_tv(double gamma, double a, double kappa, std::size_t D = 2, const CosineGrid& spec = {});

struct RatePoint {
    double n = 0.0;
    double gamma_star = 0.0;
    double bound = 0.0;
};

// argmax over the γ grid of γ (1/8) (1 - TV(γ))^{2n}.
RatePoint rate_from_bound(const std::vector<double>& gammas, const std::vector<double>& tvs, double n);

}  // namespace mlab::lecam
