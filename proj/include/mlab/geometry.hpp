#pragma once

#include "mlab/core.hpp"
#include "mlab/kdtree.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mlab::geometry {

// One coordinate patch: parameter box, embedding R^d -> R^D and its D x d jacobian.
struct Chart {
    Box domain;
    std::function<Vector(const Vector&)> embed;
    std::function<Matrix(const Vector&)> jacobian;
};

// Embedded d-manifold in R^D given by charts. Periodic flags apply to the
// parameter axes of every chart. Immutable after construction.
class ParametricManifold {
public:
    ParametricManifold(std::string label, std::size_t ambient_dim, std::size_t intrinsic_dim,
                       std::vector<Chart> charts, std::vector<bool> periodic, double reach_floor,
                       std::optional<Box> bounding_box = std::nullopt, double bounding_pad = 1e-9);

    const std::string& label() const { return label_; }
    std::size_t ambient_dim() const { return ambient_dim_; }
    std::size_t intrinsic_dim() const { return intrinsic_dim_; }
    const std::vector<Chart>& charts() const { return charts_; }
    const std::vector<bool>& periodic() const { return periodic_; }
    double reach_floor() const { return reach_floor_; }
    const std::optional<Box>& bounding_box() const { return bounding_box_; }
    bool compact() const { return bounding_box_.has_value(); }

    Vector embed(std::size_t chart, const Vector& u) const { return charts_[chart].embed(u); }
    Matrix jacobian(std::size_t chart, const Vector& u) const { return charts_[chart].jacobian(u); }

    // Volume element sqrt(det(J^T J)).
    double volume_factor(std::size_t chart, const Vector& u) const;

    // Periodic axes wrap into the domain, the others are clamped.
    Vector normalize_parameter(std::size_t chart, const Vector& u) const;

    // Sampled upper bound on |J e_axis| over the chart (with a 5% margin).
    double axis_speed(std::size_t chart, std::size_t axis) const { return speeds_[chart][axis]; }
    // Largest axis speed over all charts.
    double lipschitz() const;

    ParametricManifold with_label(std::string label) const;

private:
    std::string label_;
    std::size_t ambient_dim_;
    std::size_t intrinsic_dim_;
    std::vector<Chart> charts_;
    std::vector<bool> periodic_;
    double reach_floor_;
    std::optional<Box> bounding_box_;
    std::vector<std::vector<double>> speeds_;
};

// ---- built-in families -------------------------------------------------

// Segment from a to b (reach of a convex set is infinite).
ParametricManifold make_segment(const Vector& a, const Vector& b);
// Circle of the given radius in the plane spanned by ambient axes 0 and 1.
ParametricManifold make_circle(const Vector& center, double radius);
// Sphere in R^3 covered by two spherical-coordinate charts with different polar axes.
ParametricManifold make_sphere(const Vector& center, double radius);
// Torus of revolution about the z axis in R^3.
ParametricManifold make_torus(double major_radius, double minor_radius);
// Graph {(u, f(u), 0, ..., 0)} over a parameter box in R^d, embedded in R^D.
ParametricManifold make_graph(std::string label, std::size_t ambient_dim, Box domain,
                              std::function<double(const Vector&)> height,
                              std::function<Vector(const Vector&)> gradient, double reach_floor,
                              std::optional<Box> bounding_box = std::nullopt);
// Arbitrary embedding with a central-difference jacobian.
ParametricManifold make_from_embedding(std::string label, std::size_t ambient_dim, Box domain,
                                       std::function<Vector(const Vector&)> embed, std::vector<bool> periodic,
                                       double reach_floor, std::optional<Box> bounding_box = std::nullopt);
// Curve through tabulated samples (Catmull-Rom interpolation, finite-difference jacobian).
ParametricManifold make_tabulated_curve(std::string label, const PointCloud& samples, bool closed,
                                        double reach_floor, std::optional<Box> bounding_box = std::nullopt);

// Rigid motion x -> R x + t applied to the embedding.
ParametricManifold transform(const ParametricManifold& m, const Matrix& rotation, const Vector& translation,
                             std::string label);

// ---- discretisation ------------------------------------------------------

struct Discretization {
    PointCloud points;
    std::vector<std::size_t> chart;  // chart index per point
    PointCloud params;               // parameter per point (dimension d)
    // Every point of the manifold lies within this distance of some net point.
    double covering_radius = 0.0;
    // Per-chart index ranges into points, and grid counts per axis.
    std::vector<std::size_t> chart_begin;
    std::vector<std::vector<std::size_t>> counts;
};

// Parameter net with ambient spacing <= spacing along each parameter axis.
Discretization discretize(const ParametricManifold& m, double spacing);

// Throws if the jacobian loses rank at any net parameter.
void check_jacobian_rank(const ParametricManifold& m, const Discretization& net);

// ---- metric engine ----------------------------------------------------------

// sup_{a in A} inf_{b in B} |a - b|, kd-tree accelerated.
double directed_hausdorff(const PointCloud& from, const PointCloud& to);
double directed_hausdorff(const PointCloud& from, const KdTree& to);
double hausdorff_distance(const PointCloud& a, const PointCloud& b);

// Reusable nearest-point projector onto a manifold: dense net + kd-tree,
// followed by damped Gauss-Newton refinement from the closest net points.
class ManifoldProjector {
public:
    ManifoldProjector(const ParametricManifold& m, double tol);

    struct Projection {
        double distance = 0.0;
        std::size_t chart = 0;
        Vector param;
        Vector point;
    };

    Projection project(const Vector& x) const;
    double distance(const Vector& x) const { return project(x).distance; }
    double tolerance() const { return tol_; }

private:
    const ParametricManifold* m_;
    double tol_;
    Discretization net_;
    std::unique_ptr<KdTree> tree_;
};

// inf_{y in M} |x - y| to within tol; the value is never below true distance - tol.
double distance_to_manifold(const Vector& x, const ParametricManifold& m, double tol);

struct HausdorffEstimate {
    double value = 0.0;
    double error_bound = 0.0;  // |value - H(M0, M1)| <= error_bound
};

HausdorffEstimate manifold_hausdorff(const ParametricManifold& m0, const ParametricManifold& m1, double resolution);

// ---- reach ------------------------------------------------------------------

struct ReachReport {
    bool pass = false;
    bool curvature_ok = false;
    bool bottleneck_ok = false;
    double max_curvature = 0.0;
    // Smallest ambient half-distance between net points that are far apart along M.
    double bottleneck_half_distance = 0.0;
    double reach_lower_estimate = 0.0;
    std::size_t net_size = 0;
};

// Curvature criterion: the norm of the second fundamental form (finite
// differences of the jacobian), over unit tangent directions, must not exceed
// 1/kappa. Bottleneck criterion: no two net points closer than 2 kappa in
// R^D may be further apart than pi kappa along the manifold (net-graph
// geodesic). Both are necessary for reach >= kappa. The bottleneck pass runs
// one bounded Dijkstra per net point, so its cost grows like N^2 for a
// compact surface whose extent is comparable to pi kappa.
ReachReport reach_validate(const ParametricManifold& m, double kappa, double resolution, double slack = 0.02);

// ---- slabs ------------------------------------------------------------------

struct Slab {
    Vector center;
    Matrix tangent;  // D x d, orthonormal columns
    Matrix normal;   // D x (D - d), orthonormal columns
    double tangent_halfwidth = 0.0;
    double normal_halfwidth = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(center.size()); }
    // Half-length of the slab diagonal: the farthest any slab point is from its center.
    double half_diagonal() const;
    Matrix basis() const;
};

Slab make_slab(Vector center, const Matrix& jacobian, double tangent_halfwidth, double normal_halfwidth);

// Slab at M(u): tangent half-width b1 sqrt(eps), normal half-width b2 eps.
Slab build_slab(const ParametricManifold& m, std::size_t chart, const Vector& u, double eps, double b1, double b2);

// Closed convention: boundary points are inside.
bool slab_membership(const Slab& s, std::span<const double> x);
bool slab_membership(const Slab& s, const Vector& x);

// ---- grids ------------------------------------------------------------------

// Regular axis-aligned grid of nodes; node index is row-major (last axis fastest).
class Grid {
public:
    Grid(Box box, std::vector<std::size_t> counts);
    // Smallest grid on box whose spacing does not exceed max_spacing on any axis.
    static Grid with_max_spacing(const Box& box, double max_spacing);

    const Box& box() const { return box_; }
    std::size_t dim() const { return counts_.size(); }
    const std::vector<std::size_t>& counts() const { return counts_; }
    const Vector& spacing() const { return spacing_; }
    std::size_t size() const { return size_; }
    double cell_volume() const;

    double coordinate(std::size_t axis, std::size_t i) const
    {
        return box_.lo[static_cast<Eigen::Index>(axis)] + static_cast<double>(i) * spacing_[static_cast<Eigen::Index>(axis)];
    }
    void node(std::size_t flat, std::span<double> out) const;
    Vector node(std::size_t flat) const;
    PointCloud nodes() const;

    bool same_as(const Grid& other, double tol = 1e-12) const;

private:
    Box box_;
    std::vector<std::size_t> counts_;
    Vector spacing_;
    std::size_t size_ = 0;
};

}  // namespace mlab::geometry
