#include "doctest.h"

#include "mlab/kdtree.hpp"
#include "mlab/sampling.hpp"
#include "mlab/slabfit.hpp"

#include <cmath>
#include <numbers>

using namespace mlab;
using namespace mlab::slabfit;

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

}  // namespace

TEST_CASE("epsilon_n formula")
{
    CHECK(epsilon_n(1000.0, 1, 8.0) == doctest::Approx(std::pow(8.0 * std::log(1000.0) / 1000.0, 2.0)));
    CHECK(epsilon_n(1000.0, 2, 8.0) == doctest::Approx(8.0 * std::log(1000.0) / 1000.0));
    CHECK_THROWS(epsilon_n(1.0, 1, 8.0));
    CHECK_THROWS(epsilon_n(100.0, 1, 0.0));
}

TEST_CASE("slab counts match brute-force membership")
{
    const auto dist = sampling::ManifoldDistribution::uniform(unit_circle());
    const auto data = sampling::sample_clutter(dist, 0.5, Box::cube(2, 1.5), 3000, 9);
    const KdTree tree(data.y);
    std::vector<std::size_t> scratch;
    for (double u : {0.0, 0.9, 2.5, 4.1}) {
        const auto s = geometry::build_slab(*unit_circle(), 0, vec({u}), 0.02, 1.0, 1.0);
        std::size_t brute = 0;
        for (std::size_t i = 0; i < data.y.size(); ++i) {
            brute += geometry::slab_membership(s, data.y[i]) ? 1 : 0;
        }
        CHECK(count_in_slab(tree, data.y, s, scratch) == brute);
    }
}

TEST_CASE("slab score of the truth is positive, of a far translate zero")
{
    const auto M = unit_circle();
    const auto dist = sampling::ManifoldDistribution::uniform(M);
    const auto data = sampling::sample_on_manifold(dist, 2000, 4);
    const double eps = epsilon_n(2000.0, 1, 8.0);
    const double spacing = 0.5 * std::sqrt(eps);
    const auto truth = slab_score(*M, data.y, eps, 1.0, 1.0, spacing);
    CHECK(truth.score > 0.0);
    const auto moved = geometry::transform(*M, Matrix::Identity(2, 2), vec({2.0 * std::sqrt(eps), 0.0}), "moved");
    CHECK(slab_score(moved, data.y, eps, 1.0, 1.0, spacing).score == 0.0);
    CHECK_THROWS_WITH(slab_score(*M, data.y, eps, 1.0, 1.0, 2.0 * spacing), doctest::Contains("net too coarse"));
}

TEST_CASE("truth score tracks the slab mass")
{
    // Uniform circle: a slab with tangent half-width w and enough normal room holds asin(w) / pi.
    const auto M = unit_circle();
    const auto dist = sampling::ManifoldDistribution::uniform(M);
    const std::size_t n = 20000;
    const auto data = sampling::sample_on_manifold(dist, n, 6);
    const double eps = 0.01;
    const double mass = std::asin(std::sqrt(eps)) / std::numbers::pi;
    const auto s = slab_score(*M, data.y, eps, 1.0, 1.0, 0.05);
    const double se = std::sqrt(mass * (1.0 - mass) / static_cast<double>(n));
    // The inf over ~126 net slabs sits a few standard errors below the mean.
    CHECK(s.score <= mass + 1e-12);
    CHECK(s.score >= mass - 6.0 * se);
}

TEST_CASE("fit selects the true circle among translates")
{
    const auto M = unit_circle();
    const auto dist = sampling::ManifoldDistribution::uniform(M);
    const std::size_t n = 3000;
    const double eps = epsilon_n(static_cast<double>(n), 1, 8.0);
    const auto family = offset_family(*M, 8, 2.0 * std::sqrt(eps));
    REQUIRE(family.size() == 9);
    for (std::size_t j = 1; j < family.size(); ++j) {
        const Vector c = family.members[j].embed(0, vec({0.0})) - M->embed(0, vec({0.0}));
        CHECK(c.norm() == doctest::Approx(2.0 * std::sqrt(eps)));
    }
    const auto data = sampling::sample_clutter(dist, 0.5, Box::cube(2, 1.5), n, 21);
    const auto res = fit(family, data.y, 8.0, {}, 2);
    CHECK(res.chosen == 0);
    CHECK_FALSE(res.no_support);
    CHECK(res.net_spacing == doctest::Approx(0.5 * std::sqrt(res.epsilon)));
    const auto single = fit(family, data.y, 8.0, {}, 1);
    for (std::size_t j = 0; j < family.size(); ++j) {
        CHECK(single.scores[j].score == res.scores[j].score);
    }
}

TEST_CASE("ties go to the lowest index and empty support is flagged")
{
    const auto M = unit_circle();
    const auto dist = sampling::ManifoldDistribution::uniform(M);
    const auto data = sampling::sample_on_manifold(dist, 1000, 2);
    CandidateFamily twins({*M, M->with_label("twin")});
    const auto res = fit(twins, data.y, 8.0, {});
    CHECK(res.tie);
    CHECK(res.chosen == 0);

    const auto far = geometry::transform(*M, Matrix::Identity(2, 2), vec({5.0, 0.0}), "far");
    CandidateFamily nothing({far, far.with_label("far2")});
    const auto none = fit(nothing, data.y, 8.0, {});
    CHECK(none.no_support);
    CHECK(none.chosen == 0);
    CHECK_THROWS(fit(twins, data.y, 8.0, {1.0, 1.0, 0.6}));
}

TEST_CASE("candidate families validate reach")
{
    const auto M = unit_circle();
    CHECK_NOTHROW(offset_family(*M, 4, 0.1).validate(0.01));
    CHECK_THROWS(CandidateFamily({}));
}

TEST_CASE("VC deviation radius")
{
    CHECK(vc_beta(1000.0, 7.0, 0.05) == doctest::Approx(std::sqrt(4.0 / 1000.0 * (7.0 * std::log(2000.0) + std::log(160.0)))));
    CHECK_THROWS(vc_beta(1000.0, 7.0, 1.0));
    CHECK(default_vc_dimension(2) == 7.0);
}

TEST_CASE("deviation check against analytic slab masses")
{
    const auto M = unit_circle();
    const auto dist = sampling::ManifoldDistribution::uniform(M);
    const std::size_t n = 5000;
    const auto data = sampling::sample_on_manifold(dist, n, 13);
    const double eps = 0.01;
    std::vector<geometry::Slab> slabs;
    for (int i = 0; i < 40; ++i) {
        slabs.push_back(geometry::build_slab(*M, 0, vec({2.0 * std::numbers::pi * i / 40.0}), eps, 1.0, 1.0));
    }
    const double mass = std::asin(std::sqrt(eps)) / std::numbers::pi;
    const auto rep = deviation_check(data.y, slabs, [&](const geometry::Slab&) { return mass; }, 3.0, 7.0);
    CHECK(rep.C == doctest::Approx(4.0 * (7.0 + 3.0)));
    CHECK(rep.rows.size() == 40);
    CHECK(rep.violations == 0);
    const double a = rep.C * std::log(5000.0) / 5000.0;
    CHECK(rep.rows[0].upper == doctest::Approx(mass + a + std::sqrt(a * mass)));

    const auto wrong = deviation_check(data.y, slabs, [](const geometry::Slab&) { return 0.5; }, 3.0, 7.0);
    CHECK(wrong.violations == 40);
}
