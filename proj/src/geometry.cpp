#include "mlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace mlab::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Iterate a multi-index over per-axis counts (last axis fastest).
template <class F>
void for_each_index(const std::vector<std::size_t>& counts, F&& f)
{
    std::size_t total = 1;
    for (auto c : counts) {
        total *= c;
    }
    std::vector<std::size_t> idx(counts.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        f(idx);
        for (std::size_t k = counts.size(); k-- > 0;) {
            if (++idx[k] < counts[k]) {
                break;
            }
            idx[k] = 0;
        }
    }
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& embed, const Vector& u, std::size_t ambient)
{
    const auto d = u.size();
    Matrix J(static_cast<Eigen::Index>(ambient), d);
    for (Eigen::Index l = 0; l < d; ++l) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[l]));
        Vector up = u;
        Vector dn = u;
        up[l] += h;
        dn[l] -= h;
        J.col(l) = (embed(up) - embed(dn)) / (2.0 * h);
    }
    return J;
}

double smallest_singular_value(const Matrix& J)
{
    Eigen::JacobiSVD<Matrix> svd(J);
    const auto& s = svd.singularValues();
    return s.size() == 0 ? 0.0 : s[s.size() - 1];
}

}  // namespace

// ---- ParametricManifold --------------------------------------------------------

ParametricManifold::ParametricManifold(std::string label, std::size_t ambient_dim, std::size_t intrinsic_dim,
                                       std::vector<Chart> charts, std::vector<bool> periodic, double reach_floor,
                                       std::optional<Box> bounding_box, double bounding_pad)
    : label_(std::move(label)),
      ambient_dim_(ambient_dim),
      intrinsic_dim_(intrinsic_dim),
      charts_(std::move(charts)),
      periodic_(std::move(periodic)),
      reach_floor_(reach_floor),
      bounding_box_(std::move(bounding_box))
{
    if (ambient_dim_ < 1 || intrinsic_dim_ < 1 || intrinsic_dim_ >= ambient_dim_) {
        throw std::invalid_argument("manifold dimensions must satisfy 1 <= d < D");
    }
    if (charts_.empty()) {
        throw std::invalid_argument("manifold needs at least one chart");
    }
    if (periodic_.empty()) {
        periodic_.assign(intrinsic_dim_, false);
    }
    if (periodic_.size() != intrinsic_dim_) {
        throw std::invalid_argument("one periodic flag per parameter axis is required");
    }
    if (!(reach_floor_ > 0.0)) {
        throw std::invalid_argument("reach floor must be positive");
    }
    if (bounding_box_ && bounding_box_->dim() != ambient_dim_) {
        throw std::invalid_argument("bounding box dimension differs from ambient dimension");
    }

    // Sample each chart: rank check, speed bounds, bounding-box containment.
    const std::size_t per_axis = intrinsic_dim_ == 1 ? 257 : (intrinsic_dim_ == 2 ? 33 : 9);
    speeds_.resize(charts_.size());
    for (std::size_t c = 0; c < charts_.size(); ++c) {
        const Chart& ch = charts_[c];
        if (ch.domain.dim() != intrinsic_dim_) {
            throw std::invalid_argument("chart domain dimension differs from intrinsic dimension");
        }
        speeds_[c].assign(intrinsic_dim_, 0.0);
        std::vector<std::size_t> counts(intrinsic_dim_, per_axis);
        for_each_index(counts, [&](const std::vector<std::size_t>& idx) {
            Vector u(static_cast<Eigen::Index>(intrinsic_dim_));
            for (std::size_t k = 0; k < intrinsic_dim_; ++k) {
                const auto i = static_cast<Eigen::Index>(k);
                const double frac = static_cast<double>(idx[k]) / static_cast<double>(per_axis - 1);
                u[i] = ch.domain.lo[i] + frac * (ch.domain.hi[i] - ch.domain.lo[i]);
            }
            const Vector x = ch.embed(u);
            if (static_cast<std::size_t>(x.size()) != ambient_dim_) {
                throw std::invalid_argument("embedding returns a point of the wrong dimension");
            }
            const Matrix J = ch.jacobian(u);
            if (static_cast<std::size_t>(J.rows()) != ambient_dim_ || static_cast<std::size_t>(J.cols()) != intrinsic_dim_) {
                throw std::invalid_argument("jacobian has the wrong shape");
            }
            if (!(smallest_singular_value(J) > 1e-12)) {
                throw std::invalid_argument("rank-deficient jacobian at parameter " + to_string(u));
            }
            for (std::size_t k = 0; k < intrinsic_dim_; ++k) {
                speeds_[c][k] = std::max(speeds_[c][k], J.col(static_cast<Eigen::Index>(k)).norm());
            }
            if (bounding_box_ && !bounding_box_->contains(x, bounding_pad)) {
                throw std::invalid_argument("manifold point " + to_string(x) + " lies outside its bounding box");
            }
        });
        for (auto& s : speeds_[c]) {
            s *= 1.05;
        }
    }
}

double ParametricManifold::volume_factor(std::size_t chart, const Vector& u) const
{
    const Matrix J = jacobian(chart, u);
    return std::sqrt(std::max(0.0, (J.transpose() * J).determinant()));
}

Vector ParametricManifold::normalize_parameter(std::size_t chart, const Vector& u) const
{
    const Box& dom = charts_[chart].domain;
    Vector v = u;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double lo = dom.lo[k];
        const double hi = dom.hi[k];
        if (periodic_[static_cast<std::size_t>(k)]) {
            const double len = hi - lo;
            double t = std::fmod(v[k] - lo, len);
            if (t < 0.0) {
                t += len;
            }
            v[k] = lo + t;
        } else {
            v[k] = std::clamp(v[k], lo, hi);
        }
    }
    return v;
}

double ParametricManifold::lipschitz() const
{
    double l = 0.0;
    for (const auto& s : speeds_) {
        for (double v : s) {
            l = std::max(l, v);
        }
    }
    return l;
}

ParametricManifold ParametricManifold::with_label(std::string label) const
{
    ParametricManifold copy = *this;
    copy.label_ = std::move(label);
    return copy;
}

// ---- built-in families -------------------------------------------------------------

ParametricManifold make_segment(const Vector& a, const Vector& b)
{
    const auto D = static_cast<std::size_t>(a.size());
    if (D < 2 || b.size() != a.size()) {
        throw std::invalid_argument("segment endpoints must share an ambient dimension >= 2");
    }
    const Vector dir = b - a;
    if (!(dir.norm() > 0.0)) {
        throw std::invalid_argument("degenerate segment");
    }
    Chart ch{Box(Vector::Zero(1), Vector::Ones(1)),
             [a, dir](const Vector& u) -> Vector { return a + u[0] * dir; },
             [dir](const Vector&) -> Matrix { return dir; }};
    Box bb(a.cwiseMin(b), a.cwiseMax(b));
    return ParametricManifold("segment", D, 1, {ch}, {false}, kInf, bb);
}

ParametricManifold make_circle(const Vector& center, double radius)
{
    const auto D = static_cast<std::size_t>(center.size());
    if (D < 2 || !(radius > 0.0)) {
        throw std::invalid_argument("circle needs D >= 2 and a positive radius");
    }
    Chart ch{Box(Vector::Zero(1), Vector::Constant(1, 2.0 * std::numbers::pi)),
             [center, radius](const Vector& u) -> Vector {
                 Vector x = center;
                 x[0] += radius * std::cos(u[0]);
                 x[1] += radius * std::sin(u[0]);
                 return x;
             },
             [D, radius](const Vector& u) -> Matrix {
                 Matrix J = Matrix::Zero(static_cast<Eigen::Index>(D), 1);
                 J(0, 0) = -radius * std::sin(u[0]);
                 J(1, 0) = radius * std::cos(u[0]);
                 return J;
             }};
    Vector lo = center;
    Vector hi = center;
    lo.head(2).array() -= radius;
    hi.head(2).array() += radius;
    return ParametricManifold("circle", D, 1, {ch}, {true}, radius, Box(lo, hi));
}

ParametricManifold make_sphere(const Vector& center, double radius)
{
    if (center.size() != 3 || !(radius > 0.0)) {
        throw std::invalid_argument("sphere needs a 3-d center and a positive radius");
    }
    const double pi = std::numbers::pi;
    const Box dom(Vector{{pi / 4 - 0.1, 0.0}}, Vector{{3 * pi / 4 + 0.1, 2 * pi}});
    // Chart order of (polar, azimuth) axes: polar axis z for chart 0, x for chart 1.
    auto make = [&](int polar_axis) {
        const int a1 = (polar_axis + 1) % 3;
        const int a2 = (polar_axis + 2) % 3;
        Chart ch;
        ch.domain = dom;
        ch.embed = [=](const Vector& u) -> Vector {
            Vector x = center;
            x[polar_axis] += radius * std::cos(u[0]);
            x[a1] += radius * std::sin(u[0]) * std::cos(u[1]);
            x[a2] += radius * std::sin(u[0]) * std::sin(u[1]);
            return x;
        };
        ch.jacobian = [=](const Vector& u) -> Matrix {
            Matrix J = Matrix::Zero(3, 2);
            J(polar_axis, 0) = -radius * std::sin(u[0]);
            J(a1, 0) = radius * std::cos(u[0]) * std::cos(u[1]);
            J(a2, 0) = radius * std::cos(u[0]) * std::sin(u[1]);
            J(a1, 1) = -radius * std::sin(u[0]) * std::sin(u[1]);
            J(a2, 1) = radius * std::sin(u[0]) * std::cos(u[1]);
            return J;
        };
        return ch;
    };
    Box bb(center.array() - radius, center.array() + radius);
    return ParametricManifold("sphere", 3, 2, {make(2), make(0)}, {false, true}, radius, bb);
}

ParametricManifold make_torus(double major_radius, double minor_radius)
{
    if (!(minor_radius > 0.0) || !(major_radius > minor_radius)) {
        throw std::invalid_argument("torus needs 0 < minor radius < major radius");
    }
    const double R = major_radius;
    const double r = minor_radius;
    const double two_pi = 2.0 * std::numbers::pi;
    Chart ch{Box(Vector::Zero(2), Vector::Constant(2, two_pi)),
             [R, r](const Vector& u) -> Vector {
                 const double w = R + r * std::cos(u[1]);
                 return Vector{{w * std::cos(u[0]), w * std::sin(u[0]), r * std::sin(u[1])}};
             },
             [R, r](const Vector& u) -> Matrix {
                 const double w = R + r * std::cos(u[1]);
                 Matrix J(3, 2);
                 J << -w * std::sin(u[0]), -r * std::sin(u[1]) * std::cos(u[0]),
                     w * std::cos(u[0]), -r * std::sin(u[1]) * std::sin(u[0]),
                     0.0, r * std::cos(u[1]);
                 return J;
             }};
    Box bb(Vector{{-(R + r), -(R + r), -r}}, Vector{{R + r, R + r, r}});
    return ParametricManifold("torus", 3, 2, {ch}, {true, true}, std::min(r, R - r), bb);
}

ParametricManifold make_graph(std::string label, std::size_t ambient_dim, Box domain,
                              std::function<double(const Vector&)> height,
                              std::function<Vector(const Vector&)> gradient, double reach_floor,
                              std::optional<Box> bounding_box)
{
    const std::size_t d = domain.dim();
    if (d + 1 > ambient_dim) {
        throw std::invalid_argument("graph needs D > d");
    }
    const auto D = static_cast<Eigen::Index>(ambient_dim);
    const auto di = static_cast<Eigen::Index>(d);
    Chart ch{domain,
             [D, di, height](const Vector& u) -> Vector {
                 Vector x = Vector::Zero(D);
                 x.head(di) = u;
                 x[di] = height(u);
                 return x;
             },
             [D, di, gradient](const Vector& u) -> Matrix {
                 Matrix J = Matrix::Zero(D, di);
                 J.topRows(di).setIdentity();
                 J.row(di) = gradient(u).transpose();
                 return J;
             }};
    return ParametricManifold(std::move(label), ambient_dim, d, {ch}, std::vector<bool>(d, false), reach_floor,
                              std::move(bounding_box));
}

ParametricManifold make_from_embedding(std::string label, std::size_t ambient_dim, Box domain,
                                       std::function<Vector(const Vector&)> embed, std::vector<bool> periodic,
                                       double reach_floor, std::optional<Box> bounding_box)
{
    const std::size_t d = domain.dim();
    Chart ch{std::move(domain), embed,
             [embed, ambient_dim](const Vector& u) -> Matrix { return fd_jacobian(embed, u, ambient_dim); }};
    return ParametricManifold(std::move(label), ambient_dim, d, {ch}, std::move(periodic), reach_floor,
                              std::move(bounding_box));
}

ParametricManifold make_tabulated_curve(std::string label, const PointCloud& samples, bool closed,
                                        double reach_floor, std::optional<Box> bounding_box)
{
    const std::size_t n = samples.size();
    if (n < (closed ? 3u : 2u)) {
        throw std::invalid_argument("tabulated curve needs more samples");
    }
    const std::size_t D = samples.dim();
    auto pts = std::make_shared<std::vector<Vector>>();
    for (std::size_t i = 0; i < n; ++i) {
        pts->push_back(samples.point(i));
    }
    const double tmax = closed ? static_cast<double>(n) : static_cast<double>(n - 1);
    auto embed = [pts, closed, n](const Vector& u) -> Vector {
        const auto N = static_cast<long>(n);
        auto at = [&](long i) -> const Vector& {
            if (closed) {
                return (*pts)[static_cast<std::size_t>(((i % N) + N) % N)];
            }
            return (*pts)[static_cast<std::size_t>(std::clamp(i, 0L, N - 1))];
        };
        const double t = u[0];
        long i = static_cast<long>(std::floor(t));
        if (!closed) {
            i = std::clamp(i, 0L, N - 2);
        }
        const double s = t - static_cast<double>(i);
        const Vector& p0 = at(i - 1);
        const Vector& p1 = at(i);
        const Vector& p2 = at(i + 1);
        const Vector& p3 = at(i + 2);
        return 0.5 * ((2.0 * p1) + (p2 - p0) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s * s +
                      (3.0 * p1 - p0 - 3.0 * p2 + p3) * s * s * s);
    };
    return make_from_embedding(std::move(label), D, Box(Vector::Zero(1), Vector::Constant(1, tmax)), embed,
                               {closed}, reach_floor, std::move(bounding_box));
}

ParametricManifold transform(const ParametricManifold& m, const Matrix& rotation, const Vector& translation,
                             std::string label)
{
    std::vector<Chart> charts;
    for (const auto& ch : m.charts()) {
        charts.push_back(Chart{ch.domain,
                               [f = ch.embed, rotation, translation](const Vector& u) -> Vector {
                                   return rotation * f(u) + translation;
                               },
                               [g = ch.jacobian, rotation](const Vector& u) -> Matrix { return rotation * g(u); }});
    }
    std::optional<Box> bb;
    if (m.bounding_box()) {
        const Box& b = *m.bounding_box();
        const auto D = static_cast<Eigen::Index>(b.dim());
        Vector lo = Vector::Constant(D, kInf);
        Vector hi = Vector::Constant(D, -kInf);
        std::vector<std::size_t> two(b.dim(), 2);
        for_each_index(two, [&](const std::vector<std::size_t>& idx) {
            Vector corner(D);
            for (Eigen::Index k = 0; k < D; ++k) {
                corner[k] = idx[static_cast<std::size_t>(k)] ? b.hi[k] : b.lo[k];
            }
            const Vector y = rotation * corner + translation;
            lo = lo.cwiseMin(y);
            hi = hi.cwiseMax(y);
        });
        bb = Box(lo, hi);
    }
    return ParametricManifold(std::move(label), m.ambient_dim(), m.intrinsic_dim(), std::move(charts), m.periodic(),
                              m.reach_floor(), bb, 1e-7);
}

// ---- discretisation ---------------------------------------------------------------

Discretization discretize(const ParametricManifold& m, double spacing)
{
    if (!(spacing > 0.0)) {
        throw std::invalid_argument("discretisation spacing must be positive");
    }
    const std::size_t d = m.intrinsic_dim();
    Discretization out;
    out.points = PointCloud(m.ambient_dim());
    out.params = PointCloud(d);
    for (std::size_t c = 0; c < m.charts().size(); ++c) {
        const Box& dom = m.charts()[c].domain;
        std::vector<std::size_t> counts(d);
        std::vector<double> step(d);
        double cover2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            const double len = dom.hi[i] - dom.lo[i];
            const double arc = len * m.axis_speed(c, k);
            const auto intervals = static_cast<std::size_t>(std::max(1.0, std::ceil(arc / spacing)));
            if (len <= 0.0) {
                counts[k] = 1;
                step[k] = 0.0;
            } else if (m.periodic()[k]) {
                counts[k] = intervals;
                step[k] = len / static_cast<double>(intervals);
            } else {
                counts[k] = intervals + 1;
                step[k] = len / static_cast<double>(intervals);
            }
            const double half = 0.5 * step[k] * m.axis_speed(c, k);
            cover2 += half * half;
        }
        out.covering_radius = std::max(out.covering_radius, std::sqrt(cover2));
        out.chart_begin.push_back(out.points.size());
        out.counts.push_back(counts);
        Vector u(static_cast<Eigen::Index>(d));
        for_each_index(counts, [&](const std::vector<std::size_t>& idx) {
            for (std::size_t k = 0; k < d; ++k) {
                u[static_cast<Eigen::Index>(k)] = dom.lo[static_cast<Eigen::Index>(k)] + static_cast<double>(idx[k]) * step[k];
            }
            out.points.push_back(m.embed(c, u));
            out.params.push_back(u);
            out.chart.push_back(c);
        });
    }
    return out;
}

void check_jacobian_rank(const ParametricManifold& m, const Discretization& net)
{
    for (std::size_t i = 0; i < net.points.size(); ++i) {
        const Vector u = net.params.point(i);
        const Matrix J = m.jacobian(net.chart[i], u);
        if (!(smallest_singular_value(J) > 1e-12)) {
            throw std::invalid_argument("rank-deficient jacobian at parameter " + to_string(u) + " of " + m.label());
        }
    }
}

// ---- metric engine ------------------------------------------------------------------

double directed_hausdorff(const PointCloud& from, const KdTree& to)
{
    if (from.empty() || to.size() == 0) {
        throw std::invalid_argument("empty set has undefined Hausdorff distance");
    }
    if (from.dim() != to.dim()) {
        throw std::invalid_argument("Hausdorff distance between clouds of different dimension");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
        worst = std::max(worst, to.nearest(from[i]).squared_distance);
    }
    return std::sqrt(worst);
}

double directed_hausdorff(const PointCloud& from, const PointCloud& to)
{
    if (from.empty() || to.empty()) {
        throw std::invalid_argument("empty set has undefined Hausdorff distance");
    }
    return directed_hausdorff(from, KdTree(to));
}

double hausdorff_distance(const PointCloud& a, const PointCloud& b)
{
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("empty set has undefined Hausdorff distance");
    }
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("Hausdorff distance between clouds of different dimension");
    }
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

ManifoldProjector::ManifoldProjector(const ParametricManifold& m, double tol) : m_(&m), tol_(tol)
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("projection tolerance must be positive");
    }
    // Net with covering radius ~tol, capped at a few hundred thousand points;
    // Gauss-Newton refinement recovers accuracy when the cap binds.
    const std::size_t d = m.intrinsic_dim();
    double extent = 0.0;
    for (std::size_t c = 0; c < m.charts().size(); ++c) {
        double e = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            e *= std::max(1e-12, (m.charts()[c].domain.hi[i] - m.charts()[c].domain.lo[i]) * m.axis_speed(c, k));
        }
        extent += e;
    }
    const double cap = 200000.0;
    double spacing = 2.0 * tol / std::sqrt(static_cast<double>(d));
    spacing = std::max(spacing, std::pow(extent / cap, 1.0 / static_cast<double>(d)));
    net_ = discretize(m, spacing);
    tree_ = std::make_unique<KdTree>(net_.points);
}

ManifoldProjector::Projection ManifoldProjector::project(const Vector& x) const
{
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k])) {
            throw std::invalid_argument("non-finite query point");
        }
    }
    if (static_cast<std::size_t>(x.size()) != m_->ambient_dim()) {
        throw std::invalid_argument("query point has the wrong dimension");
    }
    const auto hit = tree_->nearest(as_span(x));
    Projection best;
    best.distance = std::sqrt(hit.squared_distance);
    best.chart = net_.chart[hit.index];
    best.param = net_.params.point(hit.index);
    best.point = net_.points.point(hit.index);

    // Candidates: net points not much further than the nearest one.
    std::vector<std::size_t> cand;
    tree_->radius_search(as_span(x), best.distance + 2.0 * net_.covering_radius + 1e-12, cand);
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        return squared_distance(as_span(x), net_.points[a]) < squared_distance(as_span(x), net_.points[b]);
    });
    if (cand.size() > 8) {
        cand.resize(8);
    }
    for (std::size_t seed : cand) {
        const std::size_t c = net_.chart[seed];
        Vector u = net_.params.point(seed);
        Vector p = m_->embed(c, u);
        double f = (x - p).squaredNorm();
        double mu = 1e-9;
        for (int it = 0; it < 40; ++it) {
            const Matrix J = m_->jacobian(c, u);
            const Matrix A = J.transpose() * J;
            const Vector g = J.transpose() * (x - p);
            const auto di = A.rows();
            const Vector step = (A + mu * A.diagonal().maxCoeff() * Matrix::Identity(di, di)).ldlt().solve(g);
            const Vector u2 = m_->normalize_parameter(c, u + step);
            const Vector p2 = m_->embed(c, u2);
            const double f2 = (x - p2).squaredNorm();
            if (f2 < f) {
                u = u2;
                p = p2;
                const bool converged = (f - f2) <= 1e-30 + 1e-15 * f;
                f = f2;
                mu = std::max(mu * 0.3, 1e-12);
                if (converged || step.norm() < 1e-15) {
                    break;
                }
            } else {
                mu *= 10.0;
                if (mu > 1e8) {
                    break;
                }
            }
        }
        const double dist = std::sqrt(f);
        if (dist < best.distance) {
            best.distance = dist;
            best.chart = c;
            best.param = u;
            best.point = p;
        }
    }
    return best;
}

double distance_to_manifold(const Vector& x, const ParametricManifold& m, double tol)
{
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k])) {
            throw std::invalid_argument("non-finite query point");
        }
    }
    return ManifoldProjector(m, tol).distance(x);
}

HausdorffEstimate manifold_hausdorff(const ParametricManifold& m0, const ParametricManifold& m1, double resolution)
{
    if (m0.ambient_dim() != m1.ambient_dim()) {
        throw std::invalid_argument("manifolds live in different ambient spaces");
    }
    if (!(resolution > 0.0)) {
        throw std::invalid_argument("resolution must be positive");
    }
    const Discretization a = discretize(m0, resolution);
    const Discretization b = discretize(m1, resolution);
    check_jacobian_rank(m0, a);
    check_jacobian_rank(m1, b);
    return {hausdorff_distance(a.points, b.points), a.covering_radius + b.covering_radius};
}

// ---- reach ------------------------------------------------------------------------------

ReachReport reach_validate(const ParametricManifold& m, double kappa, double resolution, double slack)
{
    if (!(resolution > 0.0) || !(kappa > 0.0)) {
        throw std::invalid_argument("reach validation needs positive kappa and resolution");
    }
    const std::size_t D = m.ambient_dim();
    const std::size_t d = m.intrinsic_dim();
    const Discretization net = discretize(m, resolution);
    ReachReport rep;
    rep.net_size = net.points.size();

    // (i) curvature: |II(v, v)| over unit tangent directions v.
    std::vector<Vector> dirs;  // directions in an orthonormal tangent frame
    if (d == 1) {
        dirs.push_back(Vector::Ones(1));
    } else if (d == 2) {
        for (int a = 0; a < 32; ++a) {
            const double t = std::numbers::pi * a / 32.0;
            dirs.push_back(Vector{{std::cos(t), std::sin(t)}});
        }
    } else {
        for (std::size_t i = 0; i < d; ++i) {
            dirs.push_back(Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)));
            for (std::size_t j = i + 1; j < d; ++j) {
                const Vector ei = Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i));
                const Vector ej = Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j));
                dirs.push_back((ei + ej).normalized());
                dirs.push_back((ei - ej).normalized());
            }
        }
    }
    double max_curv = 0.0;
    for (std::size_t p = 0; p < net.points.size(); ++p) {
        const std::size_t c = net.chart[p];
        const Vector u = net.params.point(p);
        const Box& dom = m.charts()[c].domain;
        const Matrix J = m.jacobian(c, u);
        std::vector<Matrix> dJ(d);
        for (std::size_t l = 0; l < d; ++l) {
            const auto li = static_cast<Eigen::Index>(l);
            const double h = 1e-4 * std::max(1.0, std::abs(u[li])) / std::max(1.0, m.axis_speed(c, l));
            Vector up = u;
            Vector dn = u;
            double width = 2.0 * h;
            up[li] += h;
            dn[li] -= h;
            if (!m.periodic()[l]) {
                if (up[li] > dom.hi[li]) {
                    up[li] = u[li];
                    width = h;
                } else if (dn[li] < dom.lo[li]) {
                    dn[li] = u[li];
                    width = h;
                }
            }
            dJ[l] = (m.jacobian(c, up) - m.jacobian(c, dn)) / width;
        }
        Eigen::HouseholderQR<Matrix> qr(J);
        const Matrix Q = qr.householderQ();
        const Matrix T = Q.leftCols(static_cast<Eigen::Index>(d));
        const Matrix R = T.transpose() * J;  // d x d upper triangular
        const Matrix P = Matrix::Identity(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D)) - T * T.transpose();
        for (const Vector& w : dirs) {
            const Vector a = R.triangularView<Eigen::Upper>().solve(w);  // |J a| = 1
            Vector acc = Vector::Zero(static_cast<Eigen::Index>(D));
            for (std::size_t l = 0; l < d; ++l) {
                acc += a[static_cast<Eigen::Index>(l)] * (dJ[l] * a);
            }
            max_curv = std::max(max_curv, (P * acc).norm());
        }
    }
    rep.max_curvature = max_curv;
    rep.curvature_ok = max_curv <= (1.0 / kappa) * (1.0 + 1e-6);

    // (ii) bottleneck via bounded Dijkstra on the net neighbourhood graph.
    const std::size_t N = net.points.size();
    const KdTree tree(net.points);
    const double edge_radius = 1.5 * std::sqrt(static_cast<double>(d)) * resolution + 1e-12;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(N);
    std::vector<std::size_t> nb;
    for (std::size_t i = 0; i < N; ++i) {
        tree.radius_search(net.points[i], edge_radius, nb);
        for (std::size_t j : nb) {
            if (j != i) {
                adj[i].emplace_back(j, std::sqrt(squared_distance(net.points[i], net.points[j])));
            }
        }
    }
    const double close = 2.0 * kappa * (1.0 - slack);
    const double far = std::numbers::pi * kappa * (1.0 + slack);
    double bottleneck = kInf;
    std::vector<double> dist(N, kInf);
    std::vector<std::size_t> touched;
    using Item = std::pair<double, std::size_t>;
    for (std::size_t s = 0; s < N; ++s) {
        tree.radius_search(net.points[s], std::isfinite(close) ? close : kInf, nb);
        if (nb.size() <= 1 && std::isfinite(close)) {
            continue;
        }
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[s] = 0.0;
        touched.push_back(s);
        pq.emplace(0.0, s);
        while (!pq.empty()) {
            const auto [du, u] = pq.top();
            pq.pop();
            if (du > dist[u]) {
                continue;
            }
            for (const auto& [v, w] : adj[u]) {
                const double nd = du + w;
                if (nd < dist[v] && nd <= far) {
                    if (dist[v] == kInf) {
                        touched.push_back(v);
                    }
                    dist[v] = nd;
                    pq.emplace(nd, v);
                }
            }
        }
        if (!std::isfinite(close)) {
            for (std::size_t v = 0; v < N; ++v) {
                if (dist[v] == kInf) {
                    bottleneck = std::min(bottleneck, 0.5 * std::sqrt(squared_distance(net.points[s], net.points[v])));
                }
            }
        } else {
            for (std::size_t v : nb) {
                if (dist[v] == kInf) {
                    bottleneck = std::min(bottleneck, 0.5 * std::sqrt(squared_distance(net.points[s], net.points[v])));
                }
            }
        }
        for (std::size_t v : touched) {
            dist[v] = kInf;
        }
        touched.clear();
    }
    rep.bottleneck_half_distance = bottleneck;
    rep.bottleneck_ok = !std::isfinite(bottleneck);
    rep.reach_lower_estimate = std::min(max_curv > 0.0 ? 1.0 / max_curv : kInf, bottleneck);
    rep.pass = rep.curvature_ok && rep.bottleneck_ok;
    return rep;
}

// ---- slabs ---------------------------------------------------------------------------------

double Slab::half_diagonal() const
{
    const double t = tangent_halfwidth;
    const double n = normal_halfwidth;
    return std::sqrt(static_cast<double>(tangent.cols()) * t * t + static_cast<double>(normal.cols()) * n * n);
}

Matrix Slab::basis() const
{
    Matrix B(center.size(), tangent.cols() + normal.cols());
    B << tangent, normal;
    return B;
}

Slab make_slab(Vector center, const Matrix& jacobian, double tangent_halfwidth, double normal_halfwidth)
{
    if (!(tangent_halfwidth > 0.0) || !(normal_halfwidth > 0.0)) {
        throw std::invalid_argument("slab half-widths must be positive");
    }
    if (!(smallest_singular_value(jacobian) > 1e-12)) {
        throw std::invalid_argument("rank-deficient jacobian at slab center");
    }
    Eigen::HouseholderQR<Matrix> qr(jacobian);
    const Matrix Q = qr.householderQ();
    const auto d = jacobian.cols();
    Slab s;
    s.center = std::move(center);
    s.tangent = Q.leftCols(d);
    s.normal = Q.rightCols(Q.cols() - d);
    s.tangent_halfwidth = tangent_halfwidth;
    s.normal_halfwidth = normal_halfwidth;
    return s;
}

Slab build_slab(const ParametricManifold& m, std::size_t chart, const Vector& u, double eps, double b1, double b2)
{
    if (!(eps > 0.0) || !(b1 > 0.0) || !(b2 > 0.0)) {
        throw std::invalid_argument("slab needs positive eps, b1 and b2");
    }
    return make_slab(m.embed(chart, u), m.jacobian(chart, u), b1 * std::sqrt(eps), b2 * eps);
}

bool slab_membership(const Slab& s, std::span<const double> x)
{
    if (x.size() != s.dim()) {
        throw std::invalid_argument("point dimension does not match slab dimension");
    }
    // Closed slab; a relative 1e-12 allowance absorbs rounding in the projection.
    const auto D = static_cast<Eigen::Index>(x.size());
    const Vector r = Eigen::Map<const Vector>(x.data(), D) - s.center;
    const double tlim = s.tangent_halfwidth * (1.0 + 1e-12);
    const double nlim = s.normal_halfwidth * (1.0 + 1e-12);
    for (Eigen::Index j = 0; j < s.tangent.cols(); ++j) {
        if (std::abs(s.tangent.col(j).dot(r)) > tlim) {
            return false;
        }
    }
    for (Eigen::Index j = 0; j < s.normal.cols(); ++j) {
        if (std::abs(s.normal.col(j).dot(r)) > nlim) {
            return false;
        }
    }
    return true;
}

bool slab_membership(const Slab& s, const Vector& x)
{
    return slab_membership(s, as_span(x));
}

// ---- grid -----------------------------------------------------------------------------------

Grid::Grid(Box box, std::vector<std::size_t> counts) : box_(std::move(box)), counts_(std::move(counts))
{
    if (counts_.size() != box_.dim()) {
        throw std::invalid_argument("grid needs one count per axis");
    }
    spacing_.resize(static_cast<Eigen::Index>(counts_.size()));
    size_ = 1;
    for (std::size_t k = 0; k < counts_.size(); ++k) {
        if (counts_[k] < 2) {
            throw std::invalid_argument("grid counts must be at least 2");
        }
        const auto i = static_cast<Eigen::Index>(k);
        spacing_[i] = (box_.hi[i] - box_.lo[i]) / static_cast<double>(counts_[k] - 1);
        if (!(spacing_[i] > 0.0)) {
            throw std::invalid_argument("grid box must have positive extent");
        }
        size_ *= counts_[k];
    }
}

Grid Grid::with_max_spacing(const Box& box, double max_spacing)
{
    std::vector<std::size_t> counts;
    for (std::size_t k = 0; k < box.dim(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double len = box.hi[i] - box.lo[i];
        counts.push_back(static_cast<std::size_t>(std::ceil(len / max_spacing - 1e-9)) + 1);
    }
    return Grid(box, counts);
}

double Grid::cell_volume() const
{
    return spacing_.prod();
}

void Grid::node(std::size_t flat, std::span<double> out) const
{
    for (std::size_t k = counts_.size(); k-- > 0;) {
        const std::size_t i = flat % counts_[k];
        flat /= counts_[k];
        out[k] = coordinate(k, i);
    }
}

Vector Grid::node(std::size_t flat) const
{
    Vector v(static_cast<Eigen::Index>(dim()));
    node(flat, {v.data(), dim()});
    return v;
}

PointCloud Grid::nodes() const
{
    PointCloud pc(dim());
    pc.coords().resize(size_ * dim());
    for (std::size_t f = 0; f < size_; ++f) {
        node(f, {pc.coords().data() + f * dim(), dim()});
    }
    return pc;
}

bool Grid::same_as(const Grid& other, double tol) const
{
    if (counts_ != other.counts_) {
        return false;
    }
    return (box_.lo - other.box_.lo).cwiseAbs().maxCoeff() <= tol && (box_.hi - other.box_.hi).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace mlab::geometry
