#include "doctest.h"

#include "mlab/harness.hpp"
#include "mlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace mlab;
using namespace mlab::harness;

namespace {

ExperimentConfig parse(const std::string& text)
{
    return ExperimentConfig::from_config(Config::from_string(text));
}

std::string csv_of(const RiskTable& t)
{
    std::ostringstream os;
    report::write_risk_csv(os, t);
    return os.str();
}

// Hausdorff distance between points on the unit circle and the circle itself.
double circle_loss(const PointCloud& y)
{
    double out = 0.0;
    std::vector<double> theta;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto p = y[i];
        out = std::max(out, std::abs(std::hypot(p[0], p[1]) - 1.0));
        theta.push_back(std::atan2(p[1], p[0]));
    }
    std::sort(theta.begin(), theta.end());
    double gap = theta.front() + 2.0 * std::numbers::pi - theta.back();
    for (std::size_t i = 1; i < theta.size(); ++i) {
        gap = std::max(gap, theta[i] - theta[i - 1]);
    }
    return std::max(out, 2.0 * std::sin(gap / 4.0));
}

const char* kNoiseless = R"(
[model]
manifold = circle
noise = noiseless
[experiment]
n = 50, 100, 200
reps = 4
seed = 77
)";

}  // namespace

TEST_CASE("config parsing and errors")
{
    const auto c = Config::from_string("# c\n[a]\nx = 1.5\ny = 1, 2.5 ,3\n[b]\nflag = true\n");
    CHECK(c.get_double("a.x") == 1.5);
    CHECK(c.get_list("a.y") == std::vector<double>{1.0, 2.5, 3.0});
    CHECK(c.get_bool("b.flag", false));
    CHECK(c.get_int("a.z", 3) == 3);
    std::istringstream bad("[a]\nx = 1\nnonsense\n");
    CHECK_THROWS_WITH_AS(Config::parse(bad, "f.cfg"), doctest::Contains("f.cfg:3"), ConfigError);
    CHECK_THROWS_WITH_AS(Config::from_string("x = 1\nx = 2\n"), doctest::Contains(":2"), ConfigError);
    CHECK_THROWS_AS(Config::from_string("x = abc\n").get_double("x"), ConfigError);
    CHECK_THROWS_AS(Config::from_string("x = maybe\n").get_bool("x", true), ConfigError);
    CHECK_THROWS_AS(Config::from_string("").get_string("missing"), ConfigError);
}

TEST_CASE("experiment config schema")
{
    const auto cfg = parse(kNoiseless);
    CHECK(cfg.n_list == std::vector<std::size_t>{50, 100, 200});
    CHECK(cfg.reps == 4);
    CHECK(cfg.seed == 77);
    CHECK_THROWS_WITH_AS(parse("[model]\nnoize = clutter\n"), doctest::Contains("unknown key 'model.noize'"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nnoise = additive\n[estimator]\nkind = slab\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nnoise = noiseless\n[estimator]\nkind = deconv\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nn = 100, 50\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nn = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nnoise = clutter\npi = 1.5\n[estimator]\nkind = slab\n"), ConfigError);
}

TEST_CASE("point-cloud loss matches the analytic circle distance")
{
    auto cfg = parse(kNoiseless);
    cfg.loss_resolution = 1e-4;
    const ExperimentContext ctx(cfg);
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        for (std::size_t rep = 0; rep < 2; ++rep) {
            const auto r = ctx.run(i, rep);
            const auto data = ctx.dataset(i, rep);
            CHECK(r.n == cfg.n_list[i]);
            CHECK(data.y.size() == r.n);
            CHECK(std::abs(r.loss - circle_loss(data.y)) <= r.loss_bound + 1e-12);
        }
    }
}

TEST_CASE("risk tables are deterministic and thread independent")
{
    auto cfg = parse(kNoiseless);
    cfg.threads = 1;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    cfg.threads = 3;
    const auto c = run_experiment(cfg);
    CHECK(csv_of(a) == csv_of(b));
    CHECK(csv_of(a) == csv_of(c));
    REQUIRE(a.rows.size() == 12);
    CHECK(a.rows[5].n == 100);
    CHECK(a.rows[5].rep == 1);
    CHECK(a.rows[5].runtime_ms == 0.0);

    cfg.seed = 78;
    CHECK(csv_of(run_experiment(cfg)) != csv_of(a));
}

TEST_CASE("seeds isolate replications")
{
    auto cfg = parse(kNoiseless);
    const ExperimentContext ctx(cfg);
    CHECK(ctx.seed_for(0, 1) != ctx.seed_for(1, 0));
    auto more = cfg;
    more.reps = 9;
    more.n_list = {50, 100, 200, 400};
    const ExperimentContext wide(more);
    // Adding reps or sample sizes does not change earlier replications.
    CHECK(wide.run(1, 3).loss == ctx.run(1, 3).loss);
    CHECK(wide.dataset(2, 0).y.coords() == ctx.dataset(2, 0).y.coords());
}

TEST_CASE("clutter with pi = 1 reproduces the noiseless losses")
{
    auto cfg = parse(kNoiseless);
    const auto a = run_experiment(cfg);
    cfg.model.noise = sampling::ModelTag::clutter;
    cfg.model.pi = 1.0;
    const auto b = run_experiment(cfg);
    CHECK(csv_of(a) == csv_of(b));
}

TEST_CASE("rate fit")
{
    const std::vector<double> n{100, 1000, 10000, 100000};
    std::vector<double> m;
    for (double x : n) {
        m.push_back(3.0 * std::pow(x, -2.0));
    }
    const auto f = rate_fit(n, m, Abscissa::log_n);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.slope_stderr < 1e-10);
    CHECK(f.points == 4);

    const auto flat = rate_fit(n, {0.2, 0.2, 0.2, 0.2}, Abscissa::log_n);
    CHECK(flat.slope == doctest::Approx(0.0));

    std::vector<double> ll;
    for (double x : n) {
        ll.push_back(1.0 / std::log(x));
    }
    CHECK(rate_fit(n, ll, Abscissa::loglog_n).slope == doctest::Approx(-1.0).epsilon(1e-12));

    CHECK_THROWS_WITH(rate_fit(n, {0.1, 0.0, 0.1, 0.1}, Abscissa::log_n), doctest::Contains("degenerate fit"));
    CHECK_THROWS_WITH(rate_fit({100, 100, 1000}, {0.1, 0.1, 0.05}, Abscissa::log_n), doctest::Contains("at least 3"));
}

TEST_CASE("quantiles and summaries")
{
    CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
    CHECK(median({5}) == 5.0);
    CHECK_THROWS(median({}));

    RiskTable t;
    const double losses[] = {0.3, 0.1, 0.2, 0.9, 0.7};
    for (std::size_t r = 0; r < 5; ++r) {
        t.rows.push_back({10, r, losses[r], 0.0});
        t.rows.push_back({20, r, losses[r] / 2.0, 0.0});
        t.rows.push_back({40, r, losses[r] / 4.0, 0.0});
    }
    std::sort(t.rows.begin(), t.rows.end(), [](const RiskRow& a, const RiskRow& b) {
        return std::pair(a.n, a.rep) < std::pair(b.n, b.rep);
    });
    const auto s = t.summary();
    REQUIRE(s.size() == 3);
    CHECK(s[0].median == doctest::Approx(0.3));
    CHECK(s[0].mean == doctest::Approx(0.44));
    CHECK(s[1].median == doctest::Approx(0.15));
    CHECK(s[2].q75 == doctest::Approx(0.7 / 4.0));
    CHECK(s[0].count == 5);
    CHECK(rate_fit(t, Abscissa::log_n).slope == doctest::Approx(-1.0));
}

TEST_CASE("risk CSV round trip and empty tables")
{
    std::ostringstream empty;
    report::write_risk_csv(empty, RiskTable{});
    CHECK(empty.str() == "n,rep,loss,runtime_ms\n");

    const auto t = run_experiment(parse(kNoiseless));
    std::istringstream in(csv_of(t));
    const auto back = report::read_risk_csv(in);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(back.rows[i].loss == t.rows[i].loss);
        CHECK(back.rows[i].n == t.rows[i].n);
    }
    std::istringstream bad("a,b\n1,2\n");
    CHECK_THROWS(report::read_risk_csv(bad));

    const auto j = report::summary_json(t, parse(kNoiseless), rate_fit(t, Abscissa::log_n));
    CHECK(j["estimator"] == "pointcloud");
    CHECK(j["summary"].size() == 3);
    CHECK(j.contains("fit"));
    CHECK_FALSE(j.contains("reference_curves"));
}

TEST_CASE("slab estimator does no worse than the point cloud at n = 4000")
{
    const char* base = R"(
[model]
manifold = circle
noise = noiseless
[experiment]
n = 4000
reps = 5
seed = 5
threads = 0
)";
    auto pc = parse(base);
    auto slab = pc;
    slab.estimator = Estimator::slab;
    const auto a = run_experiment(pc).summary();
    const auto b = run_experiment(slab).summary();
    CHECK(b[0].median <= a[0].median);
}

TEST_CASE("deconv replications on a small grid")
{
    const char* text = R"(
[model]
manifold = circle
noise = additive
[estimator]
kind = deconv
[deconv]
k = 2
grid_spacing = 0.2
calibration_spacing = 0.2
[experiment]
n = 200
reps = 2
seed = 4
loss_resolution = 0.02
)";
    const ExperimentContext ctx(parse(text));
    REQUIRE(ctx.calibration() != nullptr);
    const auto th = ctx.threshold(0);
    CHECK(th.lower < th.lambda);
    CHECK(th.lambda < th.upper);
    const auto r = ctx.run(0, 0, true);
    CHECK(r.h == ctx.bandwidth(0));
    CHECK(r.lambda == th.lambda);
    CHECK(r.loss > 0.0);
    CHECK(r.empty_estimate == r.estimate.empty());
    CHECK(ctx.run(0, 0).loss == r.loss);
}
