#include "mlab/deconv.hpp"

#include "mlab/kdtree.hpp"
#include "mlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace mlab::deconv {

namespace {

constexpr double kPi = std::numbers::pi;

// Density of the sum of r independent U[-1, 1] variables (Irwin-Hall form,
// evaluated on the short side of the symmetric support to limit cancellation).
double box_sum_density(int r, double x)
{
    const double ax = std::abs(x);
    if (ax >= static_cast<double>(r)) {
        return 0.0;
    }
    const double s = 0.5 * (static_cast<double>(r) - ax);  // sum of r U[0,1] at s, s in (0, r/2]
    double acc = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= static_cast<int>(std::floor(s)) && j <= r; ++j) {
        const double term = binom * std::pow(s - j, r - 1);
        acc += (j % 2 == 0) ? term : -term;
        binom = binom * static_cast<double>(r - j) / static_cast<double>(j + 1);
    }
    double fact = 1.0;
    for (int j = 2; j < r; ++j) {
        fact *= j;
    }
    return std::max(0.0, 0.5 * acc / fact);
}

// Radial transform ∫_{R^D} exp(-i s·x) w(|s|) ds at |x| = rho for w supported on [0, 1].
template <class W>
double radial_transform(std::size_t D, double rho, const W& w, const std::vector<double>& knots, std::size_t mult)
{
    const quad::Rule& rule = quad::gauss_legendre(16);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        const double a = knots[s];
        const double b = knots[s + 1];
        const auto pieces = mult * (1 + static_cast<std::size_t>(std::ceil(rho * (b - a) / 3.0)));
        const double len = (b - a) / static_cast<double>(pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
            const double mid = a + (static_cast<double>(p) + 0.5) * len;
            double acc = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double t = mid + 0.5 * len * rule.nodes[i];
                const double x = rho * t;
                double kern = 0.0;
                switch (D) {
                case 1:
                    kern = 2.0 * std::cos(x);
                    break;
                case 2:
                    kern = 2.0 * kPi * std::cyl_bessel_j(0.0, x) * t;
                    break;
                default:
                    kern = 4.0 * kPi * (x == 0.0 ? 1.0 : std::sin(x) / x) * t * t;
                    break;
                }
                acc += rule.weights[i] * kern * w(t);
            }
            total += 0.5 * len * acc;
        }
    }
    return total;
}

void check_dim(std::size_t D)
{
    if (D < 1 || D > 3) {
        throw std::invalid_argument("kernel dimension must be 1, 2 or 3");
    }
}

struct ProfileTable {
    double step = 0.01;
    std::vector<double> values;
    double max_radius() const { return step * static_cast<double>(values.size() - 3); }
    double at(double r) const
    {
        const double x = r / step;
        const auto i = static_cast<std::size_t>(x);
        const double f = x - static_cast<double>(i);
        const double p0 = i == 0 ? values[1] : values[i - 1];  // even extension
        const double p1 = values[i];
        const double p2 = values[i + 1];
        const double p3 = values[i + 2];
        return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
    }
};

std::shared_ptr<const ProfileTable> profile_table(const PsiKernel& psi, std::size_t D, double radius)
{
    static std::mutex mu;
    static std::map<std::pair<int, std::size_t>, std::shared_ptr<const ProfileTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{psi.order(), D}];
    if (slot && slot->max_radius() >= radius) {
        return slot;
    }
    double target = slot ? slot->max_radius() : 16.0;
    while (target < radius) {
        target *= 2.0;
    }
    auto table = std::make_shared<ProfileTable>();
    const std::size_t old = slot ? slot->values.size() : 0;
    const auto count = static_cast<std::size_t>(std::ceil(target / table->step)) + 3;
    table->values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        table->values[i] = i < old ? slot->values[i] : psi.spatial_radial(D, static_cast<double>(i) * table->step);
    }
    slot = table;
    return slot;
}

double cube_diag(const Box& a)
{
    return (a.hi - a.lo).norm();
}

}  // namespace

// ---- PsiKernel ---------------------------------------------------------------------

PsiKernel::PsiKernel(int k) : k_(k)
{
    if (k < 1) {
        throw std::invalid_argument("kernel order k must be at least 1");
    }
}

double PsiKernel::spectral(double t) const
{
    const double two_k = 2.0 * k_;
    return two_k * box_sum_density(2 * k_, two_k * t);
}

double PsiKernel::spatial(double y) const
{
    const double x = y / (2.0 * k_);
    const double s = x == 0.0 ? 1.0 : std::sin(x) / x;
    return std::pow(s, 2 * k_);
}

std::vector<double> PsiKernel::knots() const
{
    std::vector<double> out;
    for (int j = 0; j <= k_; ++j) {
        out.push_back(static_cast<double>(j) / k_);
    }
    return out;
}

double PsiKernel::spatial_radial(std::size_t D, double r) const
{
    check_dim(D);
    if (D == 1) {
        return spatial(r);
    }
    return radial_transform(D, std::abs(r), [this](double t) { return spectral(t); }, knots(), 1);
}

PsiKernel make_psi(int k)
{
    PsiKernel psi(k);
    auto fail = [](const std::string& what) { throw std::logic_error("kernel property check failed: " + what); };
    // support and nonnegativity on a fine grid
    for (int i = -10000; i <= 10000; ++i) {
        const double t = 1.5 * i / 10000.0;
        const double v = psi.spectral(t);
        if (v < 0.0) {
            fail("spectral profile negative");
        }
        if (std::abs(t) > 1.0 && v != 0.0) {
            fail("spectral support exceeds [-1, 1]");
        }
        if (psi.spatial(40.0 * t) < 0.0) {
            fail("spatial profile negative");
        }
        if (psi.spectral(-t) != v || psi.spatial(-40.0 * t) != psi.spatial(40.0 * t)) {
            fail("profiles not symmetric");
        }
    }
    // unit mass
    auto knots = psi.knots();
    std::vector<double> cuts;
    for (double c : knots) {
        cuts.push_back(-c);
        cuts.push_back(c);
    }
    const double mass = quad::integrate([&](double t) { return psi.spectral(t); }, -1.0, 1.0, 16, 4, cuts);
    if (std::abs(mass - 1.0) > 1e-8 || std::abs(psi.spatial(0.0) - 1.0) > 1e-15) {
        fail("unit mass");
    }
    // decay order |y|^{-2k}: the scaled envelope stays bounded
    double env_near = 0.0;
    double env_far = 0.0;
    for (int i = 1; i <= 20000; ++i) {
        const double y = 10.0 + 0.05 * i;
        const double scaled = psi.spatial(y) * std::pow(y, 2 * k);
        (y < 100.0 ? env_near : env_far) = std::max(y < 100.0 ? env_near : env_far, scaled);
    }
    if (env_far > 1.0001 * std::pow(2.0 * k, 2 * k) || env_near > 1.0001 * std::pow(2.0 * k, 2 * k)) {
        fail("spatial decay");
    }
    return psi;
}

double spatial_radial_fast(const PsiKernel& psi, std::size_t D, double r)
{
    check_dim(D);
    if (D == 1) {
        return psi.spatial(r);
    }
    r = std::abs(r);
    if (r > 4096.0) {
        return psi.spatial_radial(D, r);
    }
    return profile_table(psi, D, r)->at(r);
}

// ---- characteristic functions ------------------------------------------------------

std::complex<double> empirical_charfn(const PointCloud& cloud, const Vector& t)
{
    if (cloud.empty()) {
        throw std::invalid_argument("characteristic function of an empty cloud");
    }
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < cloud.dim(); ++k) {
            dot += t[static_cast<Eigen::Index>(k)] * cloud[i][k];
        }
        re += std::cos(dot);
        im -= std::sin(dot);
    }
    const double n = static_cast<double>(cloud.size());
    return {re / n, im / n};
}

std::complex<double> empirical_charfn(const quad::DiscreteMeasure& mu, const Vector& t)
{
    if (mu.size() == 0) {
        throw std::invalid_argument("characteristic function of an empty measure");
    }
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < mu.atoms.dim(); ++k) {
            dot += t[static_cast<Eigen::Index>(k)] * mu.atoms[i][k];
        }
        re += mu.weights[i] * std::cos(dot);
        im -= mu.weights[i] * std::sin(dot);
    }
    return {re, im};
}

// ---- deconvolution kernel ----------------------------------------------------------

double DeconvKernelTable::operator()(double r) const
{
    r = std::abs(r);
    const double x = r / step;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= values.size()) {
        if (i + 1 == values.size() && x == static_cast<double>(i)) {
            return values.back();
        }
        throw std::out_of_range("radius beyond kernel table");
    }
    const double f = x - static_cast<double>(i);
    return values[i] + f * (values[i + 1] - values[i]);
}

double kernel_value(const PsiKernel& psi, double h, std::size_t D, double r, bool identity_noise,
                    std::size_t pieces_per_unit)
{
    check_dim(D);
    if (!(h > 0.0)) {
        throw std::invalid_argument("bandwidth must be positive");
    }
    const double a = 0.5 / (h * h);
    if (!identity_noise && a > 700.0) {
        throw NumericFloorError("bandwidth below numeric floor");
    }
    const std::size_t mult = std::max<std::size_t>(1, pieces_per_unit);
    const double scale = std::pow(2.0 * kPi * h, -static_cast<double>(D));
    const double rho = std::abs(r) / h;
    if (identity_noise) {
        return scale * radial_transform(D, rho, [&](double s) { return psi.spectral(s); }, psi.knots(), mult);
    }
    return scale * radial_transform(D, rho, [&](double s) { return psi.spectral(s) * std::exp(a * s * s); },
                                    psi.knots(), mult);
}

double kernel_value_cartesian(const PsiKernel& psi, double h, const Vector& x, std::size_t pieces_per_axis,
                              bool identity_noise)
{
    const auto D = static_cast<std::size_t>(x.size());
    check_dim(D);
    const double a = 0.5 / (h * h);
    if (!identity_noise && a > 700.0) {
        throw NumericFloorError("bandwidth below numeric floor");
    }
    const auto rule = quad::box_rule(Box::cube(D, 1.0), std::vector<bool>(D, false),
                                     std::vector<std::size_t>(D, pieces_per_axis), 8);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.weights.size(); ++i) {
        const auto s = rule.nodes[i];
        double s2 = 0.0;
        double dot = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
            s2 += s[k] * s[k];
            dot += s[k] * x[static_cast<Eigen::Index>(k)];
        }
        if (s2 >= 1.0) {
            continue;
        }
        const double w = psi.spectral(std::sqrt(s2)) * (identity_noise ? 1.0 : std::exp(a * s2));
        total += rule.weights[i] * w * std::cos(dot / h);
    }
    return std::pow(2.0 * kPi * h, -static_cast<double>(D)) * total;
}

DeconvKernelTable build_kernel(double h, int k, std::size_t D, const KernelOptions& options)
{
    check_dim(D);
    if (!(h > 0.0) || h > 1.0) {
        throw std::invalid_argument("bandwidth must lie in (0, 1]");
    }
    if (!options.identity_noise && 0.5 / (h * h) > 700.0) {
        throw NumericFloorError("bandwidth below numeric floor");
    }
    const PsiKernel psi(k);
    DeconvKernelTable table;
    table.h = h;
    table.k = k;
    table.D = D;
    table.identity_noise = options.identity_noise;
    table.step = options.step > 0.0 ? options.step : h / 64.0;
    const double radius = options.max_radius > 0.0 ? options.max_radius : std::max(8.0, 40.0 * k * h);
    const auto count = static_cast<std::size_t>(std::ceil(radius / table.step)) + 1;
    table.values.resize(count);

    std::size_t mult = 1;
    auto fill = [&](std::size_t m) {
        for (std::size_t i = 0; i < count; ++i) {
            table.values[i] = kernel_value(psi, h, D, static_cast<double>(i) * table.step, options.identity_noise, m);
        }
    };
    fill(mult);
    while (true) {
        const double ref = std::abs(table.values[0]);
        double worst = 0.0;
        for (std::size_t i = 0; i < count; i += 8) {
            const double finer =
                kernel_value(psi, h, D, static_cast<double>(i) * table.step, options.identity_noise, 2 * mult);
            worst = std::max(worst, std::abs(finer - table.values[i]));
        }
        table.quadrature_error = worst / ref;
        if (table.quadrature_error < options.rel_tol || mult >= 64) {
            break;
        }
        mult *= 2;
        fill(mult);
    }
    const double ref = std::abs(table.values[0]);
    table.envelope_radius = 0.0;
    for (std::size_t i = count; i-- > 0;) {
        if (std::abs(table.values[i]) > 1e-3 * ref) {
            table.envelope_radius = static_cast<double>(i + 1) * table.step;
            break;
        }
    }
    return table;
}

// ---- density fields ----------------------------------------------------------------

double DensityField::max() const
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double DensityField::min() const
{
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

DensityField ghat_field(const PointCloud& cloud, const Grid& grid, const DeconvKernelTable& table, std::size_t threads)
{
    if (cloud.empty()) {
        throw std::invalid_argument("density estimate from an empty cloud");
    }
    if (cloud.dim() != grid.dim() || grid.dim() != table.D) {
        throw std::invalid_argument("cloud, grid and kernel dimensions differ");
    }
    const std::size_t D = cloud.dim();
    // Radius needed: farthest pair between the grid box and the data bounding box.
    Vector lo = grid.box().lo;
    Vector hi = grid.box().hi;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t k = 0; k < D; ++k) {
            const auto j = static_cast<Eigen::Index>(k);
            lo[j] = std::min(lo[j], cloud[i][k]);
            hi[j] = std::max(hi[j], cloud[i][k]);
        }
    }
    const double need = cube_diag(Box(lo, hi)) * 1.01;
    const DeconvKernelTable* use = &table;
    DeconvKernelTable extended;
    if (need > table.max_radius()) {
        KernelOptions opt;
        opt.identity_noise = table.identity_noise;
        opt.step = table.step;
        opt.max_radius = need;
        extended = build_kernel(table.h, table.k, table.D, opt);
        use = &extended;
    }
    const double inv_step = 1.0 / use->step;
    const double* vals = use->values.data();
    const double* pts = cloud.coords().data();
    const std::size_t n = cloud.size();

    DensityField field{grid, std::vector<double>(grid.size(), 0.0), n, table.h, table.k, std::nullopt, 0.0};
    const std::size_t row = grid.counts().back();
    const std::size_t rows = grid.size() / row;
    parallel_for(rows, threads, [&](std::size_t r) {
        std::vector<double> y(D);
        for (std::size_t c = 0; c < row; ++c) {
            const std::size_t f = r * row + c;
            grid.node(f, y);
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double d2 = 0.0;
                for (std::size_t k = 0; k < D; ++k) {
                    const double diff = y[k] - pts[j * D + k];
                    d2 += diff * diff;
                }
                const double x = std::sqrt(d2) * inv_step;
                const auto i = static_cast<std::size_t>(x);
                const double fr = x - static_cast<double>(i);
                acc += vals[i] + fr * (vals[i + 1] - vals[i]);
            }
            field.values[f] = acc / static_cast<double>(n);
        }
    });
    return field;
}

DensityField ghat_field(const PointCloud& cloud, const Grid& grid, double h, int k, std::size_t threads)
{
    return ghat_field(cloud, grid, build_kernel(h, k, cloud.dim()), threads);
}

DensityField ghat_fourier(const PointCloud& cloud, const Grid& grid, double h, int k, double t_step)
{
    if (cloud.empty()) {
        throw std::invalid_argument("density estimate from an empty cloud");
    }
    const std::size_t D = cloud.dim();
    check_dim(D);
    const PsiKernel psi(k);
    const double tmax = 1.0 / h;
    const auto m = static_cast<long>(std::floor(tmax / t_step));
    std::vector<Vector> ts;
    std::vector<std::complex<double>> coef;
    std::vector<long> idx(D, -m);
    const double w = std::pow(t_step, static_cast<double>(D)) * std::pow(2.0 * kPi, -static_cast<double>(D));
    while (true) {
        Vector t(static_cast<Eigen::Index>(D));
        for (std::size_t a = 0; a < D; ++a) {
            t[static_cast<Eigen::Index>(a)] = static_cast<double>(idx[a]) * t_step;
        }
        const double nt = t.norm();
        if (nt < tmax) {
            // q̂*(-t) turns the exp(-i t·y) inversion into a sum of K_h(y - Y_j).
            const auto q = empirical_charfn(cloud, Vector(-t));
            ts.push_back(t);
            coef.push_back(w * psi.spectral(h * nt) / gaussian_charfn(t) * q);
        }
        std::size_t a = D;
        while (a-- > 0) {
            if (++idx[a] <= m) {
                break;
            }
            idx[a] = -m;
        }
        if (a == static_cast<std::size_t>(-1)) {
            break;
        }
    }
    DensityField field{grid, std::vector<double>(grid.size(), 0.0), cloud.size(), h, k, std::nullopt, 0.0};
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const Vector y = grid.node(f);
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const double ph = -ts[j].dot(y);
            acc += coef[j] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        field.values[f] = acc.real();
        field.imag_residue = std::max(field.imag_residue, std::abs(acc.imag()));
    }
    return field;
}

// ---- ḡ -------------------------------------------------------------------------------

double gbar_oracle(const quad::DiscreteMeasure& G, const Vector& y, double h, const PsiKernel& psi)
{
    const std::size_t D = G.atoms.dim();
    if (static_cast<std::size_t>(y.size()) != D) {
        throw std::invalid_argument("probe dimension differs from measure dimension");
    }
    double rmax = 0.0;
    for (std::size_t i = 0; i < G.size(); ++i) {
        rmax = std::max(rmax, squared_distance(as_span(y), G.atoms[i]));
    }
    rmax = std::sqrt(rmax) / h;
    double acc = 0.0;
    if (D == 1) {
        for (std::size_t i = 0; i < G.size(); ++i) {
            acc += G.weights[i] * psi.spatial((y[0] - G.atoms[i][0]) / h);
        }
    } else if (rmax > 4096.0) {
        for (std::size_t i = 0; i < G.size(); ++i) {
            acc += G.weights[i] * spatial_radial_fast(psi, D, std::sqrt(squared_distance(as_span(y), G.atoms[i])) / h);
        }
    } else {
        const auto table = profile_table(psi, D, rmax);
        for (std::size_t i = 0; i < G.size(); ++i) {
            acc += G.weights[i] * table->at(std::sqrt(squared_distance(as_span(y), G.atoms[i])) / h);
        }
    }
    return std::pow(2.0 * kPi * h, -static_cast<double>(D)) * acc;
}

double gbar_oracle(const sampling::ManifoldDistribution& dist, const Vector& y, double h, int k, double pieces_scale)
{
    return gbar_oracle(dist.quadrature(pieces_scale), y, h, PsiKernel(k));
}

double select_bandwidth(double n)
{
    if (!(n > 1.0)) {
        throw std::invalid_argument("bandwidth rule needs n > 1");
    }
    return 1.0 / std::sqrt(std::log(n));
}

int default_order(std::size_t d, double delta)
{
    return static_cast<int>(std::ceil(static_cast<double>(d) / (2.0 * delta) - 1e-12));
}

Calibration calibrate_constants(const sampling::ManifoldDistribution& dist, const std::vector<double>& h_list, int k,
                                double L, double delta, const Box& box, const CalibrationOptions& options)
{
    const ParametricManifold& M = dist.manifold();
    const std::size_t D = M.ambient_dim();
    const std::size_t d = M.intrinsic_dim();
    if (static_cast<double>(k) < static_cast<double>(d) / (2.0 * delta) - 1e-12) {
        throw std::invalid_argument("order k below d / (2 delta)");
    }
    if (h_list.empty() || !(L > 0.0) || !(delta > 0.0) || !(delta < 1.0)) {
        throw std::invalid_argument("calibration needs bandwidths, L > 0 and 0 < delta < 1");
    }
    const PsiKernel psi(k);
    const auto G = dist.quadrature(options.quadrature_scale);

    const double hmin = *std::min_element(h_list.begin(), h_list.end());
    const double spacing = options.manifold_spacing > 0.0 ? options.manifold_spacing : hmin / 8.0;
    const auto net = geometry::discretize(M, spacing);
    std::vector<Vector> on;
    for (std::size_t i = 0; i < net.points.size(); ++i) {
        if (box.contains(net.points[i])) {
            on.push_back(net.points.point(i));
        }
    }
    if (on.empty()) {
        throw std::invalid_argument("manifold does not meet the calibration box");
    }
    const Grid grid = Grid::with_max_spacing(box, options.grid_spacing);
    const geometry::ManifoldProjector proj(M, 1e-6);
    std::vector<Vector> probes;
    std::vector<double> dist_to_m;
    for (std::size_t f = 0; f < grid.size(); ++f) {
        probes.push_back(grid.node(f));
        dist_to_m.push_back(proj.distance(probes.back()));
    }

    Calibration cal;
    cal.k = k;
    cal.L = L;
    cal.delta = delta;
    cal.D = D;
    cal.d = d;
    cal.h_list = h_list;
    cal.c_on = std::numeric_limits<double>::infinity();
    cal.c_off = 0.0;
    const double codim = static_cast<double>(D - d);
    for (double h : h_list) {
        double on_min = std::numeric_limits<double>::infinity();
        for (const auto& y : on) {
            on_min = std::min(on_min, gbar_oracle(G, y, h, psi));
        }
        const double radius = L * std::pow(h, 1.0 - delta);
        double off_max = 0.0;
        for (std::size_t f = 0; f < probes.size(); ++f) {
            if (dist_to_m[f] >= radius) {
                off_max = std::max(off_max, gbar_oracle(G, probes[f], h, psi));
            }
        }
        cal.on_min.push_back(on_min);
        cal.off_max.push_back(off_max);
        cal.c_on = std::min(cal.c_on, std::pow(h, codim) * on_min);
        cal.c_off = std::max(cal.c_off, std::pow(L, 2.0 * k) * std::pow(h, codim) * off_max);
    }
    return cal;
}

Threshold select_threshold(double h, std::size_t D, std::size_t d, int k, double L, const Calibration& calibration)
{
    if (D <= d) {
        throw std::invalid_argument("level-set estimator undefined for full-dimensional support");
    }
    const double scale = std::pow(1.0 / h, static_cast<double>(D - d));
    Threshold th;
    th.lower = calibration.c_off * std::pow(L, -2.0 * k) * scale;
    th.upper = calibration.c_on * scale;
    if (!(th.lower < th.upper)) {
        throw std::invalid_argument("k or L too small for target delta");
    }
    th.lambda = std::sqrt(th.lower * th.upper);
    if (th.lower == 0.0) {
        th.lambda = 0.5 * th.upper;
    }
    return th;
}

PointCloud extract_levelset(const DensityField& field, double lambda)
{
    PointCloud out(field.grid.dim());
    std::vector<double> y(field.grid.dim());
    for (std::size_t f = 0; f < field.values.size(); ++f) {
        if (field.values[f] > lambda) {
            field.grid.node(f, y);
            out.push_back(y);
        }
    }
    return out;
}

geometry::HausdorffEstimate truncated_loss(const ParametricManifold& M, const PointCloud& estimate, const Box& box,
                                           double resolution)
{
    if (!(resolution > 0.0)) {
        throw std::invalid_argument("resolution must be positive");
    }
    const auto net = geometry::discretize(M, resolution);
    PointCloud a(M.ambient_dim());
    for (std::size_t i = 0; i < net.points.size(); ++i) {
        if (box.contains(net.points[i])) {
            a.push_back(net.points[i]);
        }
    }
    PointCloud b(M.ambient_dim());
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        if (box.contains(estimate[i])) {
            b.push_back(estimate[i]);
        }
    }
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("empty truncated set");
    }
    return {geometry::hausdorff_distance(a, b), net.covering_radius};
}

namespace {

std::vector<Vector> ball_grid(std::size_t D, double radius, double step)
{
    const auto m = static_cast<long>(std::floor(radius / step));
    std::vector<Vector> out;
    std::vector<long> idx(D, -m);
    while (true) {
        Vector t(static_cast<Eigen::Index>(D));
        for (std::size_t a = 0; a < D; ++a) {
            t[static_cast<Eigen::Index>(a)] = static_cast<double>(idx[a]) * step;
        }
        if (t.norm() < radius) {
            out.push_back(t);
        }
        std::size_t a = D;
        while (a-- > 0) {
            if (++idx[a] <= m) {
                break;
            }
            idx[a] = -m;
        }
        if (a == static_cast<std::size_t>(-1)) {
            return out;
        }
    }
}

}  // namespace

double charfn_sup_deviation(const quad::DiscreteMeasure& empirical, const quad::DiscreteMeasure& G, double h,
                            double t_resolution)
{
    if (!(h > 0.0) || !(t_resolution > 0.0)) {
        throw std::invalid_argument("deviation needs positive bandwidth and resolution");
    }
    double worst = 0.0;
    for (const Vector& t : ball_grid(G.atoms.dim(), 1.0 / h, t_resolution)) {
        const auto truth = empirical_charfn(G, t) * gaussian_charfn(t);
        worst = std::max(worst, std::abs(empirical_charfn(empirical, t) - truth));
    }
    return worst;
}

double charfn_sup_deviation(const PointCloud& cloud, const quad::DiscreteMeasure& G, double h, double t_resolution)
{
    if (cloud.empty()) {
        throw std::invalid_argument("characteristic function of an empty cloud");
    }
    quad::DiscreteMeasure emp;
    emp.atoms = cloud;
    emp.weights.assign(cloud.size(), 1.0 / static_cast<double>(cloud.size()));
    return charfn_sup_deviation(emp, G, h, t_resolution);
}

}  // namespace mlab::deconv
