#include "doctest.h"

#include "mlab/rng.hpp"
#include "mlab/sampling.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace mlab;
using namespace mlab::sampling;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

std::shared_ptr<const geometry::ParametricManifold> unit_circle()
{
    return std::make_shared<const geometry::ParametricManifold>(geometry::make_circle(vec({0.0, 0.0}), 1.0));
}

std::shared_ptr<const geometry::ParametricManifold> line_graph(double half)
{
    return std::make_shared<const geometry::ParametricManifold>(geometry::make_graph(
        "line", 2, Box(vec({-half}), vec({half})), [](const Vector&) { return 0.0; },
        [](const Vector&) { return Vector::Zero(1); }, 1e9));
}

// 99.9% quantile of chi-square with 19 degrees of freedom.
constexpr double kChi2_19_999 = 43.82;

}  // namespace

TEST_CASE("Philox4x32-10 known answers")
{
    using C = PhiloxCounter;
    CHECK(philox4x32_10(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("seed derivation is pure and separates (n index, rep)")
{
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {0ull, 1ull, 12345ull}) {
        for (std::uint64_t i = 0; i < 4; ++i) {
            for (std::uint64_t r = 0; r < 50; ++r) {
                seen.insert(derive_seed(base, i, r));
            }
        }
    }
    CHECK(seen.size() == 3 * 4 * 50);
}

TEST_CASE("draw streams give uniform and normal variates")
{
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0, sn4 = 0.0;
    DrawStream s(99, 0, channel::aux);
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        CHECK_UNARY(u > 0.0);
        CHECK_UNARY(u < 1.0);
        su += u;
        const double z = s.normal();
        sn += z;
        sn2 += z * z;
        sn4 += z * z * z * z;
    }
    // Five standard errors.
    CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sn4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));

    DrawStream a(5, 17, channel::manifold);
    DrawStream b(5, 17, channel::manifold);
    DrawStream c(5, 17, channel::noise);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next_u32();
        CHECK(x == b.next_u32());
        CHECK(x != c.next_u32());
    }
}

TEST_CASE("uniform circle samples lie on the circle with uniform angles")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    CHECK(dist.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist.lower_bound() == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-9));
    CHECK(dist.upper_bound() == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-9));
    const std::size_t n = 20000;
    const auto data = sample_on_manifold(dist, n, 2024);
    REQUIRE(data.size() == n);
    std::vector<double> bins(20, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector p = data.y.point(i);
        CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
        double t = std::atan2(p[1], p[0]);
        if (t < 0.0) {
            t += 2.0 * std::numbers::pi;
        }
        bins[std::min<std::size_t>(19, static_cast<std::size_t>(t / (2.0 * std::numbers::pi) * 20.0))] += 1.0;
    }
    double chi2 = 0.0;
    const double expect = static_cast<double>(n) / 20.0;
    for (double b : bins) {
        chi2 += (b - expect) * (b - expect) / expect;
    }
    CHECK(chi2 < kChi2_19_999);
}

TEST_CASE("truncated Gaussian parameter pushforward has the right moments")
{
    const auto dist = ManifoldDistribution::gaussian_parameter(line_graph(2.0));
    const std::size_t n = 40000;
    const auto data = sample_on_manifold(dist, n, 77);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += data.y[i][0];
        s2 += data.y[i][0] * data.y[i][0];
        CHECK(data.y[i][1] == 0.0);
    }
    // Variance of N(0, 1) truncated to [-2, 2].
    const double phi2 = std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi);
    const double Z = std::erf(2.0 / std::numbers::sqrt2);
    const double var = 1.0 - 4.0 * phi2 / Z;
    CHECK(std::abs(s / n) < 5.0 * std::sqrt(var / n));
    CHECK(std::abs(s2 / n - var) < 5.0 * std::sqrt(2.0 * var * var / n));
}

TEST_CASE("densities that do not integrate to one are rejected")
{
    CHECK_THROWS_WITH(ManifoldDistribution(unit_circle(), [](const Vector&) { return 1.0; }),
                      doctest::Contains("density integrates to"));
    CHECK_THROWS(ManifoldDistribution(unit_circle(), [](const Vector&) { return -1.0; }));
}

TEST_CASE("a parametrization concentrating the mass is degenerate")
{
    // Graph of -log(1 + e - u): the speed grows like 1 / e at the right end.
    const double e = 1e-6;
    auto M = std::make_shared<const geometry::ParametricManifold>(geometry::make_graph(
        "log graph", 2, Box(vec({0.0}), vec({1.0})), [e](const Vector& u) { return -std::log(1.0 + e - u[0]); },
        [e](const Vector& u) { return vec({1.0 / (1.0 + e - u[0])}); }, 1e-9));
    const auto dist = ManifoldDistribution::uniform(M);
    CHECK(dist.acceptance_rate() < 1e-4);
    CHECK_THROWS_WITH(sample_on_manifold(dist, 10, 1), "degenerate density/parametrization");
}

TEST_CASE("multi-chart manifolds are not supported by distributions")
{
    auto S = std::make_shared<const geometry::ParametricManifold>(geometry::make_sphere(vec({0.0, 0.0, 0.0}), 1.0));
    CHECK_THROWS_WITH(ManifoldDistribution::uniform(S), doctest::Contains("single-chart"));
}

TEST_CASE("clutter model mixes manifold and uniform background")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    const Box box = Box::cube(2, 1.5);
    const std::size_t n = 20000;
    const double pi = 0.3;
    const auto data = sample_clutter(dist, pi, box, n, 5);
    std::size_t clutter = 0;
    std::vector<double> bins(20, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector p = data.y.point(i);
        if (data.is_clutter[i]) {
            ++clutter;
            CHECK(box.contains(p));
            bins[static_cast<std::size_t>((p[0] + 1.5) / 3.0 * 20.0)] += 1.0;
        } else {
            CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    const double q = 1.0 - pi;
    CHECK(std::abs(static_cast<double>(clutter) / n - q) < 5.0 * std::sqrt(q * pi / n));
    double chi2 = 0.0;
    const double expect = static_cast<double>(clutter) / 20.0;
    for (double b : bins) {
        chi2 += (b - expect) * (b - expect) / expect;
    }
    CHECK(chi2 < kChi2_19_999);
}

TEST_CASE("clutter with pi = 1 reproduces the noiseless sample")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    const auto a = sample_clutter(dist, 1.0, Box::cube(2, 2.0), 500, 31);
    const auto b = sample_on_manifold(dist, 500, 31);
    CHECK(a.y.coords() == b.y.coords());
}

TEST_CASE("clutter box must contain the manifold")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    CHECK_THROWS_WITH(sample_clutter(dist, 0.5, Box::cube(2, 0.9), 10, 1), "manifold is not inside the clutter box");
    CHECK_THROWS(sample_clutter(dist, 0.0, Box::cube(2, 2.0), 10, 1));
}

TEST_CASE("additive model: y = x + z with standard Gaussian z")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    const std::size_t n = 20000;
    const auto data = sample_additive(dist, n, 8);
    double s = 0.0, s2 = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(data.y[i][k] == data.x[i][k] + data.z[i][k]);
            s += data.z[i][k];
            s2 += data.z[i][k] * data.z[i][k];
        }
        cross += data.z[i][0] * data.z[i][1];
        CHECK(data.x.point(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const double m = 2.0 * n;
    CHECK(std::abs(s / m) < 5.0 / std::sqrt(m));
    CHECK(std::abs(s2 / m - 1.0) < 5.0 * std::sqrt(2.0 / m));
    CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
    // Latent points match the noiseless sampler with the same seed.
    CHECK(data.x.coords() == sample_on_manifold(dist, n, 8).y.coords());
}

TEST_CASE("sampling is deterministic in the seed")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    const NoiseModel model = Clutter{0.5, Box::cube(2, 1.5)};
    const auto a = sample(dist, model, 300, 4);
    const auto b = sample(dist, model, 300, 4);
    const auto c = sample(dist, model, 300, 5);
    CHECK(a.y.coords() == b.y.coords());
    CHECK(a.y.coords() != c.y.coords());
    // Prefix stability: the first draws do not depend on n.
    const auto d = sample(dist, model, 100, 4);
    CHECK(std::equal(d.y.coords().begin(), d.y.coords().end(), a.y.coords().begin()));
}

TEST_CASE("empirical mass counts closed regions")
{
    PointCloud c(2);
    c.push_back(vec({0.0, 0.0}));
    c.push_back(vec({1.0, 1.0}));
    c.push_back(vec({2.0, 0.0}));
    c.push_back(vec({0.5, 0.5}));
    CHECK(empirical_mass(c, Box(vec({0.0, 0.0}), vec({1.0, 1.0}))) == doctest::Approx(0.75));
    const PointCloud empty(2);
    CHECK_THROWS(empirical_mass(empty, Box::cube(2, 1.0)));
}

TEST_CASE("dataset CSV columns follow the model")
{
    const auto dist = ManifoldDistribution::uniform(unit_circle());
    std::ostringstream a, b, c;
    write_dataset_csv(a, sample_on_manifold(dist, 2, 1));
    write_dataset_csv(b, sample_clutter(dist, 0.5, Box::cube(2, 1.5), 2, 1));
    write_dataset_csv(c, sample_additive(dist, 2, 1));
    CHECK(a.str().substr(0, a.str().find('\n')) == "y1,y2");
    CHECK(b.str().substr(0, b.str().find('\n')) == "y1,y2,is_clutter");
    CHECK(c.str().substr(0, c.str().find('\n')) == "y1,y2,x1,x2,z1,z2");
    const std::string text = a.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("quadrature of a distribution reproduces its mass and mean")
{
    const auto dist = ManifoldDistribution::gaussian_parameter(line_graph(3.0));
    const auto G = dist.quadrature(2.0);
    CHECK(G.total() == doctest::Approx(1.0).epsilon(1e-10));
    double m = 0.0;
    for (std::size_t i = 0; i < G.size(); ++i) {
        m += G.weights[i] * G.atoms[i][0];
    }
    CHECK(std::abs(m) < 1e-12);
}
