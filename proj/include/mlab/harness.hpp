#pragma once

#include "mlab/config.hpp"
#include "mlab/core.hpp"
#include "mlab/deconv.hpp"
#include "mlab/geometry.hpp"
#include "mlab/sampling.hpp"
#include "mlab/slabfit.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mlab::harness {

enum class Estimator { pointcloud, slab, deconv };
enum class Abscissa { log_n, loglog_n };

const char* to_string(Estimator e);
const char* to_string(Abscissa a);

struct ModelSpec {
    std::string manifold = "circle";  // circle | segment | torus
    std::size_t ambient_dim = 2;
    double radius = 1.0;              // circle radius, segment half-length, torus major radius
    double minor_radius = 0.25;       // torus only
    sampling::ModelTag noise = sampling::ModelTag::noiseless;
    double pi = 0.5;                  // clutter: manifold fraction
    double clutter_halfwidth = 1.5;   // clutter box [-w, w]^D
};

struct SlabSpec {
    double K = 8.0;
    double b1 = 1.0;
    double b2 = 1.0;
    double net_fraction = 0.5;
    std::size_t family_count = 8;
    double family_offset = 2.0;  // translates at family_offset * sqrt(eps_n)
};

struct DeconvSpec {
    int k = 0;  // 0: smallest k with k >= d / (2 delta)
    double L = 4.0;
    double delta = 0.25;
    double grid_spacing = 0.07;
    double box_halfwidth = 3.5;  // K = [-w, w]^D
    double calibration_spacing = 0.07;
};

struct OutputSpec {
    std::string csv;
    std::string summary;
    std::string json;
    bool record_runtime = false;
};

struct ExperimentConfig {
    ModelSpec model;
    Estimator estimator = Estimator::pointcloud;
    SlabSpec slab;
    DeconvSpec deconv;
    std::vector<std::size_t> n_list{100};
    std::size_t reps = 1;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    double loss_resolution = 1e-4;
    OutputSpec output;

    // Throws ConfigError on out-of-range values or an estimator/model mismatch.
    void validate() const;
    // Reads the documented key schema; unknown keys are a ConfigError.
    static ExperimentConfig from_config(const Config& cfg);
};

std::shared_ptr<const geometry::ParametricManifold> build_manifold(const ModelSpec& spec);
sampling::NoiseModel build_noise(const ModelSpec& spec);

struct ReplicationResult {
    std::size_t n = 0;
    std::size_t rep = 0;
    double loss = 0.0;
    double loss_bound = 0.0;  // discretization error of the loss
    double runtime_ms = 0.0;
    bool empty_estimate = false;  // deconv: no grid node above the threshold
    std::size_t chosen = 0;       // slab: index of the selected candidate
    double h = 0.0;
    double lambda = 0.0;
    PointCloud estimate;          // filled when requested
};

// Everything shared across replications: manifold, distribution, loss net,
// candidate families, kernel tables and the threshold calibration.
class ExperimentContext {
public:
    explicit ExperimentContext(ExperimentConfig cfg);
    ~ExperimentContext();
    ExperimentContext(const ExperimentContext&) = delete;
    ExperimentContext& operator=(const ExperimentContext&) = delete;

    const ExperimentConfig& config() const { return cfg_; }
    const geometry::ParametricManifold& manifold() const { return *manifold_; }
    const sampling::ManifoldDistribution& distribution() const { return *dist_; }
    const deconv::Calibration* calibration() const { return calibration_ ? &*calibration_ : nullptr; }
    double bandwidth(std::size_t n_index) const;
    deconv::Threshold threshold(std::size_t n_index) const;

    std::uint64_t seed_for(std::size_t n_index, std::size_t rep) const;
    sampling::Dataset dataset(std::size_t n_index, std::size_t rep) const;
    ReplicationResult run(std::size_t n_index, std::size_t rep, bool keep_estimate = false) const;

private:
    struct LossNet;

    ExperimentConfig cfg_;
    std::shared_ptr<const geometry::ParametricManifold> manifold_;
    std::unique_ptr<sampling::ManifoldDistribution> dist_;
    sampling::NoiseModel noise_;
    std::unique_ptr<LossNet> loss_net_;
    std::vector<slabfit::CandidateFamily> families_;
    std::vector<deconv::DeconvKernelTable> tables_;
    std::optional<geometry::Grid> grid_;
    std::optional<deconv::Calibration> calibration_;
};

struct RiskRow {
    std::size_t n = 0;
    std::size_t rep = 0;
    double loss = 0.0;
    double runtime_ms = 0.0;
};

struct SummaryRow {
    std::size_t n = 0;
    std::size_t count = 0;
    double median = 0.0;
    double mean = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct RiskTable {
    std::vector<RiskRow> rows;  // sorted by (n, rep)
    std::size_t empty_estimates = 0;

    std::vector<SummaryRow> summary() const;
};

RiskTable run_experiment(const ExperimentConfig& cfg);
RiskTable run_experiment(const ExperimentContext& ctx);

// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct RateFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    Abscissa abscissa = Abscissa::log_n;
    std::size_t points = 0;
};

// Least squares of log(median loss) on log n or log log n over >= 3 distinct n.
RateFit rate_fit(const RiskTable& table, Abscissa abscissa);
RateFit rate_fit(const std::vector<double>& n, const std::vector<double>& medians, Abscissa abscissa);

}  // namespace mlab::harness
