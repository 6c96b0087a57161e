// mlab: command-line front end for the manifold estimation lab.

#include "mlab/config.hpp"
#include "mlab/deconv.hpp"
#include "mlab/geometry.hpp"
#include "mlab/harness.hpp"
#include "mlab/lecam.hpp"
#include "mlab/parallel.hpp"
#include "mlab/report.hpp"
#include "mlab/sampling.hpp"
#include "mlab/slabfit.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

using namespace mlab;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<long> seed;
    std::optional<long> threads;
    std::string out;
};

harness::ExperimentConfig load_experiment(const Common& c)
{
    if (c.config.empty()) {
        throw ConfigError("--config is required");
    }
    Config cfg = Config::load(c.config);
    if (c.seed) {
        cfg.set("experiment.seed", std::to_string(*c.seed));
    }
    if (c.threads) {
        cfg.set("experiment.threads", std::to_string(*c.threads));
    }
    return harness::ExperimentConfig::from_config(cfg);
}

void emit(const Common& c, const std::string& text)
{
    if (c.out.empty()) {
        std::cout << text;
    } else {
        report::write_text_file(c.out, text);
    }
}

int cmd_sample(const Common& c)
{
    const auto cfg = load_experiment(c);
    const harness::ExperimentContext ctx(cfg);
    std::ostringstream os;
    sampling::write_dataset_csv(os, ctx.dataset(0, 0));
    emit(c, os.str());
    return 0;
}

int cmd_hausdorff(const Common& c, const std::string& a, const std::string& b)
{
    std::ifstream fa(a), fb(b);
    if (!fa || !fb) {
        throw ConfigError("cannot open point files");
    }
    const PointCloud A = report::read_points_csv(fa);
    const PointCloud B = report::read_points_csv(fb);
    json j{{"hausdorff", geometry::hausdorff_distance(A, B)},
           {"directed_ab", geometry::directed_hausdorff(A, B)},
           {"directed_ba", geometry::directed_hausdorff(B, A)}};
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_estimate_slab(const Common& c)
{
    auto cfg = load_experiment(c);
    if (cfg.estimator != harness::Estimator::slab) {
        throw ConfigError("estimate-slab needs estimator.kind = slab");
    }
    const harness::ExperimentContext ctx(cfg);
    const auto data = ctx.dataset(0, 0);
    const double n = static_cast<double>(cfg.n_list[0]);
    const double eps = slabfit::epsilon_n(n, ctx.manifold().intrinsic_dim(), cfg.slab.K);
    const auto family = slabfit::offset_family(ctx.manifold(), cfg.slab.family_count,
                                               cfg.slab.family_offset * std::sqrt(eps));
    const auto res = slabfit::fit(family, data.y, cfg.slab.K, {cfg.slab.b1, cfg.slab.b2, cfg.slab.net_fraction},
                                  resolve_threads(cfg.threads));
    json scores = json::array();
    for (const auto& s : res.scores) {
        scores.push_back({{"label", s.label}, {"score", s.score}, {"argmin_net_index", s.argmin_net_index}});
    }
    json j{{"n", cfg.n_list[0]},   {"epsilon", res.epsilon},         {"net_spacing", res.net_spacing},
           {"chosen", res.chosen}, {"chosen_label", res.scores[res.chosen].label},
           {"tie", res.tie},       {"no_support", res.no_support},   {"scores", scores}};
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_estimate_deconv(const Common& c, const std::string& field_path)
{
    auto cfg = load_experiment(c);
    if (cfg.estimator != harness::Estimator::deconv) {
        throw ConfigError("estimate-deconv needs estimator.kind = deconv");
    }
    const harness::ExperimentContext ctx(cfg);
    const auto r = ctx.run(0, 0, true);
    const auto th = ctx.threshold(0);
    json j{{"n", r.n},
           {"h", r.h},
           {"lambda", th.lambda},
           {"lambda_lower", th.lower},
           {"lambda_upper", th.upper},
           {"loss", r.loss},
           {"loss_bound", r.loss_bound},
           {"empty_estimate", r.empty_estimate},
           {"levelset_size", r.estimate.size()}};
    if (!field_path.empty()) {
        const auto data = ctx.dataset(0, 0);
        const auto grid = geometry::Grid::with_max_spacing(Box::cube(ctx.manifold().ambient_dim(),
                                                                     cfg.deconv.box_halfwidth),
                                                           cfg.deconv.grid_spacing);
        auto field = deconv::ghat_field(data.y, grid, r.h, ctx.config().deconv.k, resolve_threads(cfg.threads));
        field.lambda = th.lambda;
        std::ostringstream os;
        report::write_field_csv(os, field);
        report::write_text_file(field_path, os.str());
    }
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_calibrate(const Common& c)
{
    auto cfg = load_experiment(c);
    if (cfg.estimator != harness::Estimator::deconv) {
        throw ConfigError("calibrate needs estimator.kind = deconv");
    }
    const harness::ExperimentContext ctx(cfg);
    json j = report::to_json(*ctx.calibration());
    json th = json::array();
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        const auto t = ctx.threshold(i);
        th.push_back({{"n", cfg.n_list[i]}, {"h", ctx.bandwidth(i)}, {"lower", t.lower}, {"upper", t.upper},
                      {"lambda", t.lambda}});
    }
    j["thresholds"] = th;
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_rates(const Common& c)
{
    auto cfg = load_experiment(c);
    if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        const std::filesystem::path dir(c.out);
        if (cfg.output.csv.empty()) {
            cfg.output.csv = (dir / "risk.csv").string();
        }
        if (cfg.output.summary.empty()) {
            cfg.output.summary = (dir / "summary.csv").string();
        }
        if (cfg.output.json.empty()) {
            cfg.output.json = (dir / "summary.json").string();
        }
    }
    const auto table = harness::run_experiment(cfg);
    std::optional<harness::RateFit> fit;
    const auto abscissa = cfg.model.noise == sampling::ModelTag::additive ? harness::Abscissa::loglog_n
                                                                          : harness::Abscissa::log_n;
    try {
        fit = harness::rate_fit(table, abscissa);
    } catch (const std::invalid_argument& e) {
        std::cerr << "rate fit skipped: " << e.what() << "\n";
    }
    report::emit_reports(table, cfg, fit);
    std::cout << report::summary_json(table, cfg, fit).dump(2) << "\n";
    return 0;
}

std::vector<double> geometric_gammas(double hi, double lo, int count)
{
    std::vector<double> g;
    for (int i = 0; i < count; ++i) {
        g.push_back(hi * std::pow(lo / hi, static_cast<double>(i) / (count - 1)));
    }
    return g;
}

// Config keys understood by the lecam subcommand.
struct LecamConfig {
    std::string pair = "cosine";
    std::vector<double> gammas{0.4, 0.3, 0.2, 0.15, 0.1};
    // Searched by the rate bound; the maximizer moves toward c / log n.
    std::vector<double> rate_gammas = geometric_gammas(0.4, 0.02, 31);
    std::vector<double> n{1e3, 1e4, 1e5};
    std::vector<double> pi{0.25, 0.5, 1.0};
    double a = 1.0;
    double kappa = 0.5;
    double bump_gamma = 0.05;
    double clutter_halfwidth = 4.0;
};

LecamConfig load_lecam(const Common& c)
{
    LecamConfig l;
    if (c.config.empty()) {
        return l;
    }
    const Config cfg = Config::load(c.config);
    static const std::set<std::string> keys{"lecam.pair", "lecam.gammas", "lecam.rate_gammas", "lecam.n", "lecam.pi", "lecam.a",
                                            "lecam.kappa", "lecam.bump_gamma", "lecam.clutter_halfwidth"};
    for (const auto& [k, v] : cfg.entries()) {
        if (!keys.count(k)) {
            throw ConfigError("unknown key '" + k + "'");
        }
    }
    l.pair = cfg.get_string("lecam.pair", l.pair);
    l.gammas = cfg.get_list("lecam.gammas", l.gammas);
    l.rate_gammas = cfg.get_list("lecam.rate_gammas", l.rate_gammas);
    l.n = cfg.get_list("lecam.n", l.n);
    l.pi = cfg.get_list("lecam.pi", l.pi);
    l.a = cfg.get_double("lecam.a", l.a);
    l.kappa = cfg.get_double("lecam.kappa", l.kappa);
    l.bump_gamma = cfg.get_double("lecam.bump_gamma", l.bump_gamma);
    l.clutter_halfwidth = cfg.get_double("lecam.clutter_halfwidth", l.clutter_halfwidth);
    if (l.pair != "cosine" && l.pair != "bump") {
        throw ConfigError("lecam.pair must be cosine or bump");
    }
    return l;
}

int cmd_lecam(const Common& c)
{
    const LecamConfig l = load_lecam(c);
    json j;
    j["pair"] = l.pair;
    if (l.pair == "cosine") {
        std::vector<double> tvs;
        json rows = json::array();
        for (double g : l.gammas) {
            const auto r = lecam::cosine_tv(g, l.a, l.kappa);
            tvs.push_back(r.tv);
            json row = report::to_json(r);
            row["gamma"] = g;
            rows.push_back(row);
        }
        j["tv"] = rows;
        try {
            const auto fit = lecam::tv_decay_fit(l.gammas, tvs);
            j["decay_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
        } catch (const std::invalid_argument& e) {
            j["decay_fit"] = e.what();
        }
        std::vector<double> rate_tvs;
        for (double g : l.rate_gammas) {
            rate_tvs.push_back(lecam::cosine_tv(g, l.a, l.kappa).tv);
        }
        json rates = json::array();
        for (double n : l.n) {
            const auto p = lecam::rate_from_bound(l.rate_gammas, rate_tvs, n);
            rates.push_back(
                {{"n", p.n}, {"gamma_star", p.gamma_star}, {"bound", p.bound}, {"bound_log_n", p.bound * std::log(n)}});
        }
        j["rates"] = rates;
    } else {
        const auto pair = lecam::bump_pair(l.bump_gamma, l.kappa, 1, 2);
        const Box box = Box::cube(2, l.clutter_halfwidth);
        json rows = json::array();
        for (double pi : l.pi) {
            const auto t = lecam::clutter_tv(pair, pi, box);
            rows.push_back({{"pi", pi},
                            {"mixture_tv", t.mixture_tv},
                            {"scaled_tv", t.scaled_tv},
                            {"difference", t.difference()},
                            {"quadrature_error", t.quadrature_error}});
        }
        j["gamma"] = l.bump_gamma;
        j["manifold_tv"] = lecam::manifold_tv(pair);
        j["clutter"] = rows;
    }
    emit(c, j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Manifold estimation lab: sampling, estimators, lower bounds and Monte Carlo rates"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Configuration file (key = value)");
        sub->add_option("--seed", common.seed, "Override experiment.seed");
        sub->add_option("--threads", common.threads, "Override experiment.threads (0 = all cores)");
        sub->add_option("--out", common.out, "Output file (directory for rates)");
    };
    auto* sample = app.add_subcommand("sample", "Draw the first dataset of the experiment as CSV");
    auto* hausdorff = app.add_subcommand("hausdorff", "Hausdorff distance between two point CSV files");
    auto* slab = app.add_subcommand("estimate-slab", "Slab-fit selection on one dataset");
    auto* dec = app.add_subcommand("estimate-deconv", "Deconvolution level-set estimate on one dataset");
    auto* lec = app.add_subcommand("lecam", "Two-point lower-bound computations");
    auto* rates = app.add_subcommand("rates", "Monte Carlo risk table, summaries and rate fit");
    auto* cal = app.add_subcommand("calibrate", "Threshold constants for the deconvolution estimator");
    for (auto* s : {sample, hausdorff, slab, dec, lec, rates, cal}) {
        add_common(s);
    }
    std::string file_a, file_b, field_path;
    hausdorff->add_option("a", file_a, "First point CSV")->required();
    hausdorff->add_option("b", file_b, "Second point CSV")->required();
    dec->add_option("--field", field_path, "Write the density field CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sample) {
            return cmd_sample(common);
        }
        if (*hausdorff) {
            return cmd_hausdorff(common, file_a, file_b);
        }
        if (*slab) {
            return cmd_estimate_slab(common);
        }
        if (*dec) {
            return cmd_estimate_deconv(common, field_path);
        }
        if (*lec) {
            return cmd_lecam(common);
        }
        if (*rates) {
            return cmd_rates(common);
        }
        if (*cal) {
            return cmd_calibrate(common);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericFloorError& e) {
        std::cerr << "numeric floor: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
