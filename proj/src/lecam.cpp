#include "mlab/lecam.hpp"

#include "mlab/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mlab::lecam {

namespace {

constexpr double kPi = std::numbers::pi;

double ball_volume(std::size_t d, double r)
{
    const double h = 0.5 * static_cast<double>(d);
    return std::pow(kPi, h) / std::tgamma(h + 1.0) * std::pow(r, static_cast<double>(d));
}

double sphere_area(std::size_t d)  // area of the unit sphere S^{d-1} in R^d
{
    const double h = 0.5 * static_cast<double>(d);
    return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

// Radial derivative of γ β(r / ρ).
double bump_slope(double gamma, double rho, double r)
{
    const double s = r / rho;
    if (s >= 1.0) {
        return 0.0;
    }
    const double q = 1.0 - s * s;
    return -6.0 * gamma * s * q * q / rho;
}

// ∫_{|u| < s_max ρ} sqrt(1 + |∇f|^2) du on the bumped patch.
double bump_area(double gamma, double rho, std::size_t d, double s_max)
{
    if (rho == 0.0) {
        return 0.0;
    }
    const auto f = [&](double r) {
        const double g = bump_slope(gamma, rho, r);
        return std::sqrt(1.0 + g * g) * std::pow(r, static_cast<double>(d) - 1.0);
    };
    return sphere_area(d) * quad::integrate(f, 0.0, s_max * rho, 16, 64);
}

double phi1(double x, double sigma)
{
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (std::sqrt(2.0 * kPi) * sigma);
}

void check_tv(double tv)
{
    if (!(tv >= 0.0) || tv > 1.0) {
        throw std::invalid_argument("total variation must lie in [0, 1]");
    }
}

}  // namespace

double bump_profile(double s)
{
    s = std::abs(s);
    if (s >= 1.0) {
        return 0.0;
    }
    const double q = 1.0 - s * s;
    return q * q * q;
}

LeastFavorablePair cosine_pair(double gamma, double a, std::size_t d, std::size_t D, double kappa)
{
    if (!(kappa > 0.0) || !(a > std::sqrt(kappa))) {
        throw std::invalid_argument("reach condition violated");
    }
    if (!(gamma > 0.0) || d < 1 || d >= D) {
        throw std::invalid_argument("cosine pair needs gamma > 0 and 1 <= d < D");
    }
    const double freq = 1.0 / (a * std::sqrt(gamma));
    auto build = [&](double sign, const char* label) {
        auto height = [=](const Vector& u) {
            double p = 1.0;
            for (Eigen::Index l = 0; l < u.size(); ++l) {
                p *= std::cos(freq * u[l]);
            }
            return sign * gamma * p;
        };
        auto grad = [=](const Vector& u) {
            Vector g(u.size());
            for (Eigen::Index l = 0; l < u.size(); ++l) {
                double p = -freq * std::sin(freq * u[l]);
                for (Eigen::Index m = 0; m < u.size(); ++m) {
                    if (m != l) {
                        p *= std::cos(freq * u[m]);
                    }
                }
                g[l] = sign * gamma * p;
            }
            return g;
        };
        Vector lo = Vector::Zero(static_cast<Eigen::Index>(D));
        Vector hi = Vector::Zero(static_cast<Eigen::Index>(D));
        lo.head(static_cast<Eigen::Index>(d)).setConstant(-6.0);
        hi.head(static_cast<Eigen::Index>(d)).setConstant(6.0);
        lo[static_cast<Eigen::Index>(d)] = -gamma;
        hi[static_cast<Eigen::Index>(d)] = gamma;
        return std::make_shared<const ParametricManifold>(geometry::make_graph(
            label, D, Box::cube(d, 6.0), height, grad, kappa, Box(lo, hi)));
    };
    auto m0 = build(1.0, "cosine+");
    auto m1 = build(-1.0, "cosine-");
    LeastFavorablePair p{PairTag::cosine,
                         m0,
                         m1,
                         ManifoldDistribution::gaussian_parameter(m0),
                         ManifoldDistribution::gaussian_parameter(m1)};
    p.gamma = gamma;
    p.a = a;
    p.kappa = kappa;
    p.d = d;
    p.D = D;
    return p;
}

LeastFavorablePair bump_pair(double gamma, double kappa, std::size_t d, std::size_t D)
{
    if (!(kappa > 0.0) || !(gamma >= 0.0) || gamma > kappa / 4.0) {
        throw std::invalid_argument("bump pair needs 0 <= gamma <= kappa / 4");
    }
    if (d < 1 || d >= D) {
        throw std::invalid_argument("bump pair needs 1 <= d < D");
    }
    const double W = 3.0 * kappa;
    const double rho = 3.0 * std::sqrt(gamma * kappa);
    auto box_for = [&](double top) {
        Vector lo = Vector::Zero(static_cast<Eigen::Index>(D));
        Vector hi = Vector::Zero(static_cast<Eigen::Index>(D));
        lo.head(static_cast<Eigen::Index>(d)).setConstant(-W);
        hi.head(static_cast<Eigen::Index>(d)).setConstant(W);
        hi[static_cast<Eigen::Index>(d)] = top;
        return Box(lo, hi);
    };
    auto flat = std::make_shared<const ParametricManifold>(geometry::make_graph(
        "patch", D, Box::cube(d, W), [](const Vector&) { return 0.0; },
        [](const Vector& u) -> Vector { return Vector::Zero(u.size()); }, kappa, box_for(0.0)));
    std::shared_ptr<const ParametricManifold> bumped;
    if (gamma == 0.0) {
        bumped = std::make_shared<const ParametricManifold>(flat->with_label("bumped patch"));
    } else {
        bumped = std::make_shared<const ParametricManifold>(geometry::make_graph(
            "bumped patch", D, Box::cube(d, W),
            [=](const Vector& u) { return gamma * bump_profile(u.norm() / rho); },
            [=](const Vector& u) -> Vector {
                const double s2 = u.squaredNorm() / (rho * rho);
                if (s2 >= 1.0) {
                    return Vector::Zero(u.size());
                }
                const double q = 1.0 - s2;
                return Vector(-6.0 * gamma * q * q / (rho * rho) * u);
            },
            kappa, box_for(gamma)));
    }
    LeastFavorablePair p{PairTag::bump, flat, bumped, ManifoldDistribution::uniform(flat),
                         ManifoldDistribution::uniform(bumped)};
    p.gamma = gamma;
    p.kappa = kappa;
    p.d = d;
    p.D = D;
    p.bump_radius = rho;
    p.patch_halfwidth = W;
    return p;
}

BumpValidation validate_bump_pair(const LeastFavorablePair& pair, double resolution)
{
    if (pair.tag != PairTag::bump) {
        throw std::invalid_argument("not a bump pair");
    }
    BumpValidation v;
    const auto H = geometry::manifold_hausdorff(*pair.M0, *pair.M1, resolution);
    v.hausdorff = H.value;
    v.hausdorff_bound = H.error_bound;

    const Vector apex_u = Vector::Zero(static_cast<Eigen::Index>(pair.d));
    const Vector apex = pair.M1->embed(0, apex_u);
    const geometry::ManifoldProjector proj0(*pair.M0, 1e-9);
    v.apex_separation = proj0.distance(apex);

    // Principal angles between the apex tangent of M1 and the tangent of M0 at its foot point.
    const auto foot = proj0.project(apex);
    Eigen::HouseholderQR<Matrix> q1(pair.M1->jacobian(0, apex_u));
    Eigen::HouseholderQR<Matrix> q0(pair.M0->jacobian(0, foot.param));
    const auto d = static_cast<Eigen::Index>(pair.d);
    const Matrix T1 = Matrix(q1.householderQ()).leftCols(d);
    const Matrix T0 = Matrix(q0.householderQ()).leftCols(d);
    Eigen::JacobiSVD<Matrix> svd(T0.transpose() * T1);
    const double cmin = std::min(1.0, svd.singularValues().minCoeff());
    v.tangent_misalignment = std::sqrt(std::max(0.0, 1.0 - cmin * cmin));

    const double gd = std::pow(pair.gamma, 0.5 * static_cast<double>(pair.d));
    // β(s) = 1/2 at s = sqrt(1 - 2^{-1/3}).
    const double s_half = std::sqrt(1.0 - std::cbrt(0.5));
    v.mu_B = bump_area(pair.gamma, pair.bump_radius, pair.d, s_half);
    v.mu_A = bump_area(pair.gamma, pair.bump_radius, pair.d, 1.0);
    v.mu_B_ratio = gd > 0.0 ? v.mu_B / gd : 0.0;
    v.area_constant = gd > 0.0 ? v.mu_A / gd : 0.0;

    // inf over B of the distance to M0, sampled on a radial net.
    if (pair.gamma > 0.0) {
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 200; ++i) {
            Vector u = Vector::Zero(d);
            u[0] = s_half * pair.bump_radius * i / 200.0;
            worst = std::min(worst, proj0.distance(pair.M1->embed(0, u)));
        }
        v.separation_factor = worst / pair.gamma;
    }

    const auto reach = geometry::reach_validate(*pair.M1, pair.kappa, resolution);
    v.max_curvature = reach.max_curvature;
    v.curvature_ok = reach.curvature_ok;
    if (!v.curvature_ok) {
        std::ostringstream msg;
        msg << "bump curvature " << reach.max_curvature << " exceeds 1/kappa = " << 1.0 / pair.kappa;
        throw std::invalid_argument(msg.str());
    }
    return v;
}

// ---- convolution and divergences -----------------------------------------------------

ConvolvedField convolve_with_gaussian(const quad::DiscreteMeasure& G, const Grid& grid, double sigma)
{
    const std::size_t D = grid.dim();
    if (G.atoms.dim() != D) {
        throw std::invalid_argument("measure and grid dimensions differ");
    }
    if (D < 1 || D > 3) {
        throw std::invalid_argument("Gaussian convolution supports D <= 3");
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("sigma must be positive");
    }
    const auto m = static_cast<Eigen::Index>(G.size());
    std::vector<Matrix> axis(D);  // axis[k](i, a) = φ(y_k,i - u_k,a)
    for (std::size_t k = 0; k < D; ++k) {
        const auto nk = static_cast<Eigen::Index>(grid.counts()[k]);
        axis[k].resize(nk, m);
        for (Eigen::Index i = 0; i < nk; ++i) {
            const double y = grid.coordinate(k, static_cast<std::size_t>(i));
            for (Eigen::Index a = 0; a < m; ++a) {
                axis[k](i, a) = phi1(y - G.atoms[static_cast<std::size_t>(a)][k], sigma);
            }
        }
    }
    const Eigen::Map<const Vector> w(G.weights.data(), m);
    DensityField field{grid, std::vector<double>(grid.size(), 0.0), 0, 0.0, 0, std::nullopt, 0.0};
    if (D == 1) {
        const Vector q = axis[0] * w;
        std::copy(q.data(), q.data() + q.size(), field.values.begin());
    } else if (D == 2) {
        const Matrix q = (axis[0] * w.asDiagonal()) * axis[1].transpose();
        const auto n1 = q.cols();
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            for (Eigen::Index j = 0; j < n1; ++j) {
                field.values[static_cast<std::size_t>(i * n1 + j)] = q(i, j);
            }
        }
    } else {
        const auto n1 = axis[1].rows();
        const auto n2 = axis[2].rows();
        for (Eigen::Index i = 0; i < axis[0].rows(); ++i) {
            const Vector wi = axis[0].row(i).transpose().cwiseProduct(w);
            const Matrix q = (axis[1] * wi.asDiagonal()) * axis[2].transpose();
            for (Eigen::Index j = 0; j < n1; ++j) {
                for (Eigen::Index l = 0; l < n2; ++l) {
                    field.values[static_cast<std::size_t>((i * n1 + j) * n2 + l)] = q(j, l);
                }
            }
        }
    }
    ConvolvedField out{std::move(field), 0.0, 0.0};
    double s = 0.0;
    for (double v : out.field.values) {
        s += v;
    }
    out.grid_mass = s * grid.cell_volume();
    out.tail = std::max(0.0, G.total() - out.grid_mass);
    return out;
}

ConvolvedField convolve_with_gaussian(const ManifoldDistribution& G, const Grid& grid, double pieces_scale)
{
    return convolve_with_gaussian(G.quadrature(pieces_scale), grid, 1.0);
}

DivergenceReport tv_distance(const DensityField& q0, const DensityField& q1)
{
    if (!q0.grid.same_as(q1.grid) || q0.values.size() != q1.values.size()) {
        throw std::invalid_argument("grid mismatch");
    }
    const double cell = q0.grid.cell_volume();
    double l1 = 0.0;
    double m0 = 0.0;
    double m1 = 0.0;
    for (std::size_t i = 0; i < q0.values.size(); ++i) {
        l1 += std::abs(q0.values[i] - q1.values[i]);
        m0 += q0.values[i];
        m1 += q1.values[i];
    }
    DivergenceReport r;
    r.l1 = std::min(2.0, l1 * cell);
    r.tv = 0.5 * r.l1;
    r.affinity = 1.0 - r.tv;
    r.error = 0.5 * (std::abs(1.0 - m0 * cell) + std::abs(1.0 - m1 * cell));
    return r;
}

double lecam_bound(double rho, double tv, double n)
{
    check_tv(tv);
    if (!(n >= 1.0) || !(rho >= 0.0)) {
        throw std::invalid_argument("Le Cam bound needs n >= 1 and rho >= 0");
    }
    if (tv == 1.0) {
        return 0.0;
    }
    return rho / 8.0 * std::exp(2.0 * n * std::log1p(-tv));
}

double affinity_product_lower(double l1, double n)
{
    if (!(l1 >= 0.0) || l1 > 2.0) {
        throw std::invalid_argument("l1 distance must lie in [0, 2]");
    }
    return lecam_bound(1.0, 0.5 * l1, n);
}

void attach_bounds(DivergenceReport& r, double rho, double n)
{
    r.n = static_cast<std::size_t>(n);
    r.separation = rho;
    r.product_affinity_lower = affinity_product_lower(r.l1, n);
    r.lecam = lecam_bound(rho, r.tv, n);
}

double manifold_tv(const LeastFavorablePair& pair)
{
    if (pair.tag == PairTag::cosine) {
        return 1.0;
    }
    if (pair.gamma == 0.0) {
        return 0.0;
    }
    const double patch = std::pow(2.0 * pair.patch_halfwidth, static_cast<double>(pair.d));
    const double common = patch - ball_volume(pair.d, pair.bump_radius);
    const double vol1 = common + bump_area(pair.gamma, pair.bump_radius, pair.d, 1.0);
    // Coincident part contributes |1/vol0 - 1/vol1| over `common`; the rest is disjoint.
    return 1.0 - common / vol1;
}

namespace {

double mixture_tv_once(const LeastFavorablePair& pair, double pi, const Box& box, double grid_spacing,
                       double pieces_scale, double& ac_out, double& sing_out)
{
    // Absolutely continuous parts on grid cells.
    const Grid grid = Grid::with_max_spacing(box, grid_spacing);
    const double u_cell = (1.0 - pi) * grid.cell_volume() / box.volume();
    double ac = 0.0;
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const double c0 = u_cell;
        const double c1 = u_cell;
        ac += std::abs(c0 - c1);
    }
    // Singular parts on atoms; coincident atoms share a location.
    // Shared pieces so that the flat parts of the two charts produce identical atoms.
    const auto pieces = sampling::default_pieces(*pair.M0, pieces_scale);
    const auto A0 = pair.G0.quadrature(pieces);
    const auto A1 = pair.G1.quadrature(pieces);
    const KdTree tree(A0.atoms);
    std::vector<char> used(A0.size(), 0);
    double sing = 0.0;
    for (std::size_t i = 0; i < A1.size(); ++i) {
        const auto hit = tree.nearest(A1.atoms[i]);
        if (hit.squared_distance <= 1e-24 && !used[hit.index]) {
            used[hit.index] = 1;
            sing += pi * std::abs(A1.weights[i] - A0.weights[hit.index]);
        } else {
            sing += pi * A1.weights[i];
        }
    }
    for (std::size_t j = 0; j < A0.size(); ++j) {
        if (!used[j]) {
            sing += pi * A0.weights[j];
        }
    }
    ac_out = 0.5 * ac;
    sing_out = 0.5 * sing;
    return 0.5 * (ac + sing);
}

}  // namespace

ClutterTV clutter_tv(const LeastFavorablePair& pair, double pi, const Box& box, double grid_spacing,
                     double pieces_scale)
{
    if (!(pi > 0.0) || pi > 1.0) {
        throw std::invalid_argument("clutter mixing weight must lie in (0, 1]");
    }
    for (const auto* m : {pair.M0.get(), pair.M1.get()}) {
        const auto net = geometry::discretize(*m, (box.hi - box.lo).norm() / 400.0);
        for (std::size_t i = 0; i < net.points.size(); ++i) {
            if (!box.contains(net.points[i], 1e-12)) {
                throw std::invalid_argument("manifold is not inside the clutter box");
            }
        }
    }
    ClutterTV out;
    out.mixture_tv = mixture_tv_once(pair, pi, box, grid_spacing, pieces_scale, out.absolutely_continuous, out.singular);
    double ac = 0.0;
    double sg = 0.0;
    const double coarse = mixture_tv_once(pair, pi, box, 2.0 * grid_spacing, 0.5 * pieces_scale, ac, sg);
    out.quadrature_error = std::abs(out.mixture_tv - coarse);
    out.scaled_tv = pi * manifold_tv(pair);
    return out;
}

DecayFit tv_decay_fit(const std::vector<double>& gammas, const std::vector<double>& tvs)
{
    if (gammas.size() < 4 || gammas.size() != tvs.size()) {
        throw std::invalid_argument("decay fit needs at least 4 (gamma, tv) pairs");
    }
    for (std::size_t i = 1; i < gammas.size(); ++i) {
        if (!(gammas[i] < gammas[i - 1])) {
            throw std::invalid_argument("gamma list must be decreasing");
        }
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (!(tvs[i] > 0.0)) {
            throw std::invalid_argument("decay fit needs positive TV values");
        }
        x.push_back(1.0 / gammas[i]);
        y.push_back(std::log(tvs[i]));
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    DecayFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

DivergenceReport cosine_tv(double gamma, double a, double kappa, std::size_t D, const CosineGrid& spec)
{
    const std::size_t d = 1;
    const auto pair = cosine_pair(gamma, a, d, D, kappa);
    Vector lo = Vector::Constant(static_cast<Eigen::Index>(D), -6.5);
    Vector hi = Vector::Constant(static_cast<Eigen::Index>(D), 6.5);
    lo[0] = -12.0;
    hi[0] = 12.0;
    lo[1] = -6.5 - gamma;
    hi[1] = 6.5 + gamma;
    const Grid grid = Grid::with_max_spacing(Box(lo, hi), spec.spacing);
    // Keep the oscillation phase per quadrature piece small.
    const double freq = 1.0 / (a * std::sqrt(gamma));
    const double scale = spec.pieces_scale * std::max(1.0, 0.8 * freq / pair.M0->axis_speed(0, 0));
    const auto q0 = convolve_with_gaussian(pair.G0, grid, scale);
    const auto q1 = convolve_with_gaussian(pair.G1, grid, scale);
    auto r = tv_distance(q0.field, q1.field);
    r.error = 0.5 * (q0.tail + q1.tail);
    return r;
}

RatePoint rate_from_bound(const std::vector<double>& gammas, const std::vector<double>& tvs, double n)
{
    if (gammas.empty() || gammas.size() != tvs.size()) {
        throw std::invalid_argument("rate search needs matching gamma and TV lists");
    }
    RatePoint best;
    best.n = n;
    best.bound = -1.0;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        const double b = lecam_bound(gammas[i], std::clamp(tvs[i], 0.0, 1.0), n);
        if (b > best.bound) {
            best.bound = b;
            best.gamma_star = gammas[i];
        }
    }
    return best;
}

}  // namespace mlab::lecam
