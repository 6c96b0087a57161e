#pragma once

#include "mlab/core.hpp"
#include "mlab/geometry.hpp"
#include "mlab/quadrature.hpp"
#include "mlab/sampling.hpp"

#include <complex>
#include <memory>
#include <optional>
#include <vector>

namespace mlab::deconv {

using geometry::Grid;
using geometry::ParametricManifold;

// Fourier convention used throughout: p*(t) = ∫ exp(i t·u) dP(u), with
// inversion p(x) = (2π)^-D ∫ exp(-i t·x) p*(t) dt.
inline constexpr const char* kFourierConvention = "p*(t) = int exp(i t.u) dP(u); inverse (2 pi)^-D int exp(-i t.x) p*(t) dt";

// Band-limited kernel pair. The spectral profile is the density of the mean
// of 2k independent U[-1, 1] variables (a 2k-fold box self-convolution with
// support exactly [-1, 1] and unit mass); the 1-d spatial profile is its
// transform sinc^{2k}(y / 2k) with sinc(x) = sin(x) / x.
class PsiKernel {
public:
    explicit PsiKernel(int k);

    int order() const { return k_; }
    const char* convention() const { return kFourierConvention; }

    double spectral(double t) const;
    double spatial(double y) const;
    // Breakpoints of the piecewise-polynomial spectral profile on [0, 1].
    std::vector<double> knots() const;

    // Psi_D(r) = ∫_{R^D} exp(-i s·x) ψ*(|s|) ds at |x| = r. Equals spatial(r) for D = 1.
    double spatial_radial(std::size_t D, double r) const;

private:
    int k_;
};

// Builds the kernel and verifies support, nonnegativity, unit mass, symmetry
// and |y|^{-2k} decay; a failure throws std::logic_error.
PsiKernel make_psi(int k);

// Cached interpolating table of Psi_D on a uniform radial grid (cubic
// Catmull-Rom). Grows on demand; thread-safe.
double spatial_radial_fast(const PsiKernel& psi, std::size_t D, double r);

inline double gaussian_charfn(const Vector& t)
{
    return std::exp(-0.5 * t.squaredNorm());
}

// (1/n) Σ exp(-i t·Y_j).
std::complex<double> empirical_charfn(const PointCloud& cloud, const Vector& t);
// Weighted version Σ w_j exp(-i t·y_j) for a discrete measure.
std::complex<double> empirical_charfn(const quad::DiscreteMeasure& mu, const Vector& t);

struct KernelOptions {
    // Replace φ* by 1 (diagnostic: deconvolution of the identity).
    bool identity_noise = false;
    double rel_tol = 1e-7;
    // Table radius; 0 picks a default covering a few kernel widths.
    double max_radius = 0.0;
    // Table step; 0 picks h / 64.
    double step = 0.0;
};

// Radial table of K_h(r) = (2π)^-D ∫_{|t| <= 1/h} exp(-i t·x) ψ*(h t) / φ*(t) dt.
class DeconvKernelTable {
public:
    double h = 0.0;
    int k = 0;
    std::size_t D = 0;
    bool identity_noise = false;
    double step = 0.0;
    std::vector<double> values;
    // Largest change seen in the last refinement, relative to |K_h(0)|.
    double quadrature_error = 0.0;
    // Beyond this radius |K_h| stays below 1e-3 |K_h(0)| on the table.
    double envelope_radius = 0.0;

    double max_radius() const { return step * static_cast<double>(values.size() - 1); }
    // Linear interpolation; throws std::out_of_range beyond the table.
    double operator()(double r) const;
};

DeconvKernelTable build_kernel(double h, int k, std::size_t D, const KernelOptions& options = {});

// Direct radial quadrature of K_h at one radius.
double kernel_value(const PsiKernel& psi, double h, std::size_t D, double r, bool identity_noise = false,
                    std::size_t pieces_per_unit = 0);
// Cartesian tensor Gauss-Legendre quadrature over the cube [-1/h, 1/h]^D (the
// integrand vanishes outside the ball). Independent check of the radial path.
double kernel_value_cartesian(const PsiKernel& psi, double h, const Vector& x, std::size_t pieces_per_axis,
                              bool identity_noise = false);

struct DensityField {
    Grid grid;
    std::vector<double> values;
    std::size_t n = 0;
    double h = 0.0;
    int k = 0;
    std::optional<double> lambda;
    double imag_residue = 0.0;

    double max() const;
    double min() const;
};

// ĝ(y) = (1/n) Σ K_h(y - Y_j) on every grid node. The table is rebuilt with a
// larger radius when the grid/data extent requires it.
DensityField ghat_field(const PointCloud& cloud, const Grid& grid, const DeconvKernelTable& table,
                        std::size_t threads = 1);
DensityField ghat_field(const PointCloud& cloud, const Grid& grid, double h, int k, std::size_t threads = 1);

// Fourier path: (2π)^-D Σ_t w_t exp(-i t·y) ψ*(h|t|) q̂*(-t) / φ*(t) over a
// Cartesian t-grid of step t_step inside the ball |t| <= 1/h.
DensityField ghat_fourier(const PointCloud& cloud, const Grid& grid, double h, int k, double t_step);

// ḡ(y) = (2πh)^-D ∫ Psi_D(|y - u| / h) dG(u).
double gbar_oracle(const quad::DiscreteMeasure& G, const Vector& y, double h, const PsiKernel& psi);
double gbar_oracle(const sampling::ManifoldDistribution& dist, const Vector& y, double h, int k,
                   double pieces_scale = 4.0);

// h = 1 / sqrt(log n); real-valued n > 1 is accepted.
double select_bandwidth(double n);

struct Calibration {
    double c_on = 0.0;   // min over h of h^{D-d} min_{M∩K} ḡ
    double c_off = 0.0;  // max over h of L^{2k} h^{D-d} max_{off tube} ḡ
    int k = 0;
    double L = 0.0;
    double delta = 0.0;
    std::size_t D = 0;
    std::size_t d = 0;
    std::vector<double> h_list;
    std::vector<double> on_min;   // per h
    std::vector<double> off_max;  // per h
};

struct CalibrationOptions {
    double grid_spacing = 0.07;     // off-tube probe grid over K
    double manifold_spacing = 0.0;  // on-manifold net; 0 picks min(h)/8
    double quadrature_scale = 4.0;
};

Calibration calibrate_constants(const sampling::ManifoldDistribution& dist, const std::vector<double>& h_list, int k,
                                double L, double delta, const Box& box, const CalibrationOptions& options = {});

struct Threshold {
    double lower = 0.0;  // off-tube level c_off L^{-2k} h^{-(D-d)}
    double upper = 0.0;  // on-manifold level c_on h^{-(D-d)}
    double lambda = 0.0; // geometric mean
};

Threshold select_threshold(double h, std::size_t D, std::size_t d, int k, double L, const Calibration& calibration);

// Grid nodes with value > lambda.
PointCloud extract_levelset(const DensityField& field, double lambda);

// H(M ∩ K, estimate ∩ K) between the clipped net of M (spacing = resolution)
// and the clipped estimate.
geometry::HausdorffEstimate truncated_loss(const ParametricManifold& M, const PointCloud& estimate, const Box& box,
                                           double resolution);

// max over a Cartesian t-grid in the ball |t| < 1/h of |q̂*(t) - q*(t)|, with
// q* = G* φ* from the quadrature of G.
double charfn_sup_deviation(const PointCloud& cloud, const quad::DiscreteMeasure& G, double h, double t_resolution);
double charfn_sup_deviation(const quad::DiscreteMeasure& empirical, const quad::DiscreteMeasure& G, double h,
                            double t_resolution);

// Smallest integer k with k >= d / (2 delta).
int default_order(std::size_t d, double delta);

}  // namespace mlab::deconv
