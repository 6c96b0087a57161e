// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select a subset, e.g. `acceptance 3 7`.
#include "mlab/deconv.hpp"
#include "mlab/geometry.hpp"
#include "mlab/harness.hpp"
#include "mlab/kdtree.hpp"
#include "mlab/lecam.hpp"
#include "mlab/report.hpp"
#include "mlab/sampling.hpp"
#include "mlab/slabfit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

double brute_directed(const PointCloud& a, const PointCloud& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        const auto p = a[i];
        for (std::size_t j = 0; j < b.size(); ++j) {
            const auto q = b[j];
            double s = 0.0;
            for (std::size_t c = 0; c < p.size(); ++c) {
                s += (p[c] - q[c]) * (p[c] - q[c]);
            }
            best = std::min(best, s);
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

double simpson(const std::function<double(double)>& f, double a, double b, int m)
{
    const double h = (b - a) / (2 * m);
    double s = f(a) + f(b);
    for (int i = 1; i < 2 * m; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    }
    return s * h / 3.0;
}

// Integral of f over [0, 1] split at the kernel knots.
double knotwise(const deconv::PsiKernel& psi, const std::function<double(double)>& f, int m)
{
    auto knots = psi.knots();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        s += simpson(f, knots[i], knots[i + 1], m);
    }
    return s;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

harness::ExperimentConfig parse(const std::string& text)
{
    return harness::ExperimentConfig::from_config(Config::from_string(text));
}

std::shared_ptr<const geometry::ParametricManifold> unit_circle()
{
    return std::make_shared<const geometry::ParametricManifold>(geometry::make_circle(vec({0.0, 0.0}), 1.0));
}

Outcome criterion1()
{
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> size(1, 2000);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    double indexed_secs = 0.0;
    for (int pair = 0; pair < 100; ++pair) {
        const std::size_t D = 2 + pair % 2;
        PointCloud a(D), b(D);
        const std::size_t n = size(rng), m = size(rng);
        for (std::size_t i = 0; i < n; ++i) {
            Vector p(static_cast<Eigen::Index>(D));
            for (auto& x : p) {
                x = gauss(rng);
            }
            a.push_back(p);
        }
        for (std::size_t i = 0; i < m; ++i) {
            Vector p(static_cast<Eigen::Index>(D));
            for (auto& x : p) {
                x = 0.5 * gauss(rng) + (pair % 3 == 0 ? 1.0 : 0.0);
            }
            b.push_back(p);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const double fast = geometry::hausdorff_distance(a, b);
        indexed_secs += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double slow = std::max(brute_directed(a, b), brute_directed(b, a));
        worst = std::max(worst, std::abs(fast - slow));
    }
    return {worst <= 1e-12 && indexed_secs < 10.0,
            fmt("max |indexed - brute| = %.3g over 100 pairs, indexed path %.2f s", worst, indexed_secs)};
}

Outcome criterion2()
{
    double worst = 0.0;
    bool signs = true;
    for (int k = 1; k <= 3; ++k) {
        const auto psi = deconv::make_psi(k);
        for (double t = 1.0; t <= 3.0; t += 0.01) {
            signs = signs && psi.spectral(t) == 0.0 && psi.spectral(-t) == 0.0;
        }
        for (double t = -1.0; t <= 1.0; t += 1e-3) {
            signs = signs && psi.spectral(t) >= 0.0;
        }
        for (double y = 0.0; y <= 200.0; y += 0.01) {
            signs = signs && psi.spatial(y) >= 0.0;
        }
        worst = std::max(worst, std::abs(psi.spatial(0.0) - 1.0));
        for (double y = 0.0; y <= 60.0; y += 0.05) {
            const double ft = 2.0 * knotwise(psi, [&](double t) { return psi.spectral(t) * std::cos(t * y); }, 3000);
            worst = std::max(worst, std::abs(ft - psi.spatial(y)));
        }
        for (double r = 0.0; r <= 30.0; r += 0.25) {
            const double hankel = 2.0 * kPi * knotwise(psi, [&](double s) {
                return psi.spectral(s) * std::cyl_bessel_j(0.0, r * s) * s;
            }, 1500);
            worst = std::max(worst, std::abs(hankel - psi.spatial_radial(2, r)));
        }
    }
    return {signs && worst <= 1e-6, fmt("support/sign checks %s, sup transform error %.3g", signs ? "ok" : "failed", worst)};
}

Outcome criterion3()
{
    const auto dist = sampling::ManifoldDistribution::uniform(unit_circle());
    const double h = 0.4;
    const int k = 2;
    const std::size_t n = 500, reps = 200;
    deconv::KernelOptions opt;
    opt.max_radius = 20.0;
    const auto table = deconv::build_kernel(h, k, 2, opt);
    std::vector<Vector> probes;
    for (int i = 0; i < 10; ++i) {
        const double a = 2.0 * kPi * i / 10.0 + 0.1;
        probes.push_back(vec({std::cos(a), std::sin(a)}));
    }
    for (int i = 0; i < 5; ++i) {
        const double a = 2.0 * kPi * i / 5.0 + 0.3;
        probes.push_back(vec({0.5 * std::cos(a), 0.5 * std::sin(a)}));
        probes.push_back(vec({1.6 * std::cos(a), 1.6 * std::sin(a)}));
    }
    std::vector<double> sum(probes.size(), 0.0), sum2(probes.size(), 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto data = sampling::sample_additive(dist, n, derive_seed(3003, r, 0));
        for (std::size_t p = 0; p < probes.size(); ++p) {
            double g = 0.0;
            for (std::size_t j = 0; j < data.y.size(); ++j) {
                g += table((probes[p] - data.y.point(j)).norm());
            }
            g /= static_cast<double>(n);
            sum[p] += g;
            sum2[p] += g * g;
        }
    }
    int within = 0;
    double worst_z = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const double R = static_cast<double>(reps);
        const double mean = sum[p] / R;
        const double var = (sum2[p] - R * mean * mean) / (R - 1.0);
        const double se = std::sqrt(var / R);
        const double z = std::abs(mean - deconv::gbar_oracle(dist, probes[p], h, k)) / se;
        worst_z = std::max(worst_z, z);
        within += z <= 3.0 ? 1 : 0;
    }
    return {within >= 19, fmt("%d/20 probes within 3 SE (max |z| = %.2f)", within, worst_z)};
}

Outcome criterion4()
{
    const auto dist = sampling::ManifoldDistribution::uniform(unit_circle());
    const std::vector<double> hs{0.4, 0.3, 0.2, 0.15};
    deconv::CalibrationOptions opt;
    opt.grid_spacing = 0.07;
    const auto cal = deconv::calibrate_constants(dist, hs, 2, 4.0, 0.25, Box::cube(2, 3.5), opt);
    std::vector<double> lx, ly;
    double ratio = 0.0;
    std::string rows;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        lx.push_back(std::log(hs[i]));
        ly.push_back(std::log(cal.on_min[i]));
        rows += fmt(" h=%.2f on=%.4g off=%.4g;", hs[i], cal.on_min[i], cal.off_max[i]);
        if (hs[i] == 0.2) {
            ratio = cal.on_min[i] / cal.off_max[i];
        }
    }
    const double slope = ls_slope(lx, ly);
    const bool ok = std::abs(slope + 1.0) <= 0.15 && ratio >= 10.0;
    return {ok, fmt("on-manifold slope %.3f (target -1 +- 0.15), suppression ratio at h=0.2 %.2f (target >= 10);", slope,
                    ratio) + rows};
}

Outcome criterion5()
{
    const char* text = R"(
[model]
manifold = circle
noise = additive
[estimator]
kind = deconv
[deconv]
k = 2
L = 4
delta = 0.25
grid_spacing = 0.07
box_halfwidth = 3.5
[experiment]
n = 1000, 4000, 16000
reps = 50
seed = 3
loss_resolution = 0.01
)";
    const harness::ExperimentContext ctx(parse(text));
    const auto& M = ctx.manifold();
    const auto fine = geometry::discretize(M, 1e-3);
    const KdTree fine_tree(fine.points);
    std::vector<double> medians;
    std::size_t sandwich_fail = 0, empty = 0;
    for (std::size_t i = 0; i < ctx.config().n_list.size(); ++i) {
        std::vector<double> losses;
        for (std::size_t rep = 0; rep < ctx.config().reps; ++rep) {
            const auto r = ctx.run(i, rep, true);
            losses.push_back(r.loss);
            const double radius = r.loss + r.loss_bound;
            if (r.estimate.empty()) {
                ++empty;
                ++sandwich_fail;
                continue;
            }
            // M ∩ K within radius of the estimate: every point of a 1e-3 net, plus the net gap.
            const KdTree est(r.estimate);
            double cover = 0.0;
            for (std::size_t j = 0; j < fine.points.size(); ++j) {
                cover = std::max(cover, std::sqrt(est.nearest(fine.points[j]).squared_distance));
            }
            // Estimate within radius of M: exact distance to the unit circle.
            double reach_out = 0.0;
            for (std::size_t j = 0; j < r.estimate.size(); ++j) {
                const auto p = r.estimate[j];
                reach_out = std::max(reach_out, std::abs(std::hypot(p[0], p[1]) - 1.0));
            }
            if (cover + fine.covering_radius > radius || reach_out > radius) {
                ++sandwich_fail;
            }
        }
        std::sort(losses.begin(), losses.end());
        const std::size_t m = losses.size();
        medians.push_back(m % 2 ? losses[m / 2] : 0.5 * (losses[m / 2 - 1] + losses[m / 2]));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < medians.size(); ++i) {
        decreasing = decreasing && medians[i] < medians[i - 1];
    }
    return {decreasing && sandwich_fail == 0,
            fmt("medians %.4f, %.4f, %.4f; sandwich failures %zu/150 (empty estimates %zu)", medians[0], medians[1],
                medians[2], sandwich_fail, empty)};
}

Outcome criterion6()
{
    const char* base = R"(
[model]
manifold = circle
noise = noiseless
[experiment]
n = 500, 2000, 8000
reps = 50
seed = 20240611
threads = 0
)";
    const auto cfg = parse(base);
    const auto table = harness::run_experiment(cfg);
    const auto fit = harness::rate_fit(table, harness::Abscissa::log_n);

    auto pc = cfg;
    pc.n_list = {4000};
    pc.reps = 20;
    auto slab = pc;
    slab.estimator = harness::Estimator::slab;
    const double base_median = harness::run_experiment(pc).summary()[0].median;
    const double slab_median = harness::run_experiment(slab).summary()[0].median;
    const bool ok = std::abs(fit.slope + 1.0) <= 0.15 && slab_median <= base_median;
    return {ok, fmt("baseline slope %.3f (R^2 %.4f); n=4000 medians slab %.4g vs baseline %.4g", fit.slope, fit.r2,
                    slab_median, base_median)};
}

Outcome criterion7()
{
    const char* text = R"(
[model]
manifold = circle
noise = clutter
pi = 0.5
clutter_halfwidth = 1.5
[estimator]
kind = slab
[slab]
family_count = 8
family_offset = 2
[experiment]
n = 5000
reps = 100
seed = 11
)";
    const harness::ExperimentContext ctx(parse(text));
    const auto& M = ctx.manifold();
    const double n = 5000.0;
    const double pi = 0.5;
    const double eps = slabfit::epsilon_n(n, 1, 8.0);
    const double spacing = 0.5 * std::sqrt(eps);
    std::vector<geometry::Slab> slabs;
    for (double u = 0.0; u < 2.0 * kPi; u += spacing) {
        slabs.push_back(geometry::build_slab(M, 0, vec({u}), eps, 1.0, 1.0));
    }
    // Uniform unit circle: a slab at a circle point holds asin(w) / pi of G; clutter adds its area share.
    const auto mass = [&](const geometry::Slab& s) {
        const double on = std::asin(s.tangent_halfwidth) / kPi;
        const double area = 4.0 * s.tangent_halfwidth * s.normal_halfwidth;
        return pi * on + (1.0 - pi) * area / 9.0;
    };
    std::size_t wins = 0, clean = 0;
    for (std::size_t rep = 0; rep < 100; ++rep) {
        wins += ctx.run(0, rep).chosen == 0 ? 1 : 0;
        const auto data = ctx.dataset(0, rep);
        const auto dev = slabfit::deviation_check(data.y, slabs, mass, 3.0, slabfit::default_vc_dimension(2));
        clean += dev.violations == 0 ? 1 : 0;
    }
    return {wins >= 95 && clean >= 99,
            fmt("truth selected %zu/100; deviation check clean in %zu/100 runs (%zu slabs each)", wins, clean,
                slabs.size())};
}

Outcome criterion8()
{
    const std::vector<double> fit_gammas{0.4, 0.3, 0.2, 0.15, 0.1};
    std::vector<double> fit_tv;
    for (double g : fit_gammas) {
        fit_tv.push_back(lecam::cosine_tv(g, 1.0, 0.5).tv);
    }
    const auto decay = lecam::tv_decay_fit(fit_gammas, fit_tv);

    // The maximizing gamma sits near c / log n, below the fit range.
    std::vector<double> gammas, tvs;
    for (int i = 0; i <= 30; ++i) {
        gammas.push_back(0.4 * std::pow(0.05, i / 30.0));
        tvs.push_back(lecam::cosine_tv(gammas.back(), 1.0, 0.5).tv);
    }
    std::vector<double> scaled;
    for (double n : {1e3, 1e4, 1e5}) {
        scaled.push_back(lecam::rate_from_bound(gammas, tvs, n).bound * std::log(n));
    }
    const double mean = (scaled[0] + scaled[1] + scaled[2]) / 3.0;
    double spread = 0.0;
    for (double s : scaled) {
        spread = std::max(spread, std::abs(s / mean - 1.0));
    }
    const bool ok = decay.slope < 0.0 && decay.r2 >= 0.95 && spread <= 0.3;
    return {ok, fmt("decay slope %.3f, R^2 %.4f; bound*log n = %.4g, %.4g, %.4g (max deviation %.1f%%)", decay.slope,
                    decay.r2, scaled[0], scaled[1], scaled[2], 100.0 * spread)};
}

Outcome criterion9()
{
    const auto pair = lecam::bump_pair(0.05, 1.0, 1, 2);
    double worst = 0.0;
    std::string rows;
    for (double pi : {0.25, 0.5, 1.0}) {
        const auto c = lecam::clutter_tv(pair, pi, Box::cube(2, 4.0));
        worst = std::max(worst, c.difference());
        rows += fmt(" pi=%.2f mixture %.6f scaled %.6f;", pi, c.mixture_tv, c.scaled_tv);
    }
    return {worst <= 1e-3, fmt("max |mixture - pi TV| = %.3g;", worst) + rows};
}

std::string outputs(const harness::ExperimentConfig& cfg)
{
    const auto t = harness::run_experiment(cfg);
    std::ostringstream a, b;
    report::write_risk_csv(a, t);
    report::write_summary_csv(b, t);
    return a.str() + "\n--\n" + b.str();
}

Outcome criterion10()
{
    const std::vector<std::string> configs{
        "[experiment]\nn = 200, 400\nreps = 6\nseed = 9\n",
        "[model]\nnoise = clutter\npi = 0.5\n[estimator]\nkind = slab\n[experiment]\nn = 1000\nreps = 6\nseed = 9\n",
        "[model]\nnoise = additive\n[estimator]\nkind = deconv\n[deconv]\nk = 2\ngrid_spacing = 0.14\n"
        "calibration_spacing = 0.14\n[experiment]\nn = 300\nreps = 4\nseed = 9\nloss_resolution = 0.02\n",
    };
    std::size_t same = 0;
    for (const auto& text : configs) {
        auto cfg = parse(text);
        cfg.threads = 1;
        const auto one = outputs(cfg);
        const auto again = outputs(cfg);
        cfg.threads = 4;
        const auto many = outputs(cfg);
        same += (one == again && one == many) ? 1 : 0;
    }
    return {same == configs.size(), fmt("%zu/%zu experiments byte-identical across reruns and 1 vs 4 threads", same,
                                        configs.size())};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) {
        if (!wanted.empty() && !wanted.count(c)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[c - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2d: %s  [%.1f s] %s\n", c, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
