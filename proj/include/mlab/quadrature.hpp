#pragma once

#include "mlab/core.hpp"

#include <functional>
#include <vector>

namespace mlab::quad {

// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const Rule& gauss_legendre(std::size_t order);

// Composite Gauss-Legendre over [a, b] split at the given breakpoints and then
// into `pieces` equal parts per segment.
double integrate(const std::function<double(double)>& f, double a, double b, std::size_t order = 16,
                 std::size_t pieces = 1, const std::vector<double>& breakpoints = {});

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;  // |last - previous|
    std::size_t pieces = 0;
};

// Doubles the piece count until two successive estimates agree to rel_tol
// (relative to max(|value|, scale)).
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                                  const std::vector<double>& breakpoints = {}, double scale = 0.0,
                                  std::size_t max_pieces = 1 << 14);

// Weighted atoms: a finite measure usable as a quadrature rule or a point mass.
struct DiscreteMeasure {
    PointCloud atoms;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    double total() const;
    static DiscreteMeasure point_mass(const Vector& at);
};

// Tensor rule on a box: uniform midpoints on periodic axes (spectrally accurate
// for smooth periodic integrands), composite Gauss-Legendre on the others.
struct TensorRule {
    PointCloud nodes;
    std::vector<double> weights;
};

TensorRule box_rule(const Box& box, const std::vector<bool>& periodic, const std::vector<std::size_t>& pieces,
                    std::size_t order = 8);

}  // namespace mlab::quad
