#pragma once

#include "mlab/core.hpp"
#include "mlab/geometry.hpp"
#include "mlab/kdtree.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mlab::slabfit {

using geometry::ParametricManifold;
using geometry::Slab;

// (K log n / n)^{2/d}.
double epsilon_n(double n, std::size_t d, double K);

struct CandidateFamily {
    std::vector<ParametricManifold> members;

    explicit CandidateFamily(std::vector<ParametricManifold> m);
    std::size_t size() const { return members.size(); }
    // Throws unless every member passes reach validation at its reach floor.
    void validate(double resolution) const;
};

// The true manifold followed by `count` translates at distance `offset`
// (evenly spaced directions in the plane of ambient axes 0 and 1).
CandidateFamily offset_family(const ParametricManifold& truth, std::size_t count, double offset);

struct SlabScore {
    std::string label;
    double score = 0.0;
    std::size_t argmin_net_index = 0;
    Vector argmin_param;
    double net_spacing = 0.0;
    // Ambient covering radius of the net: the inf over M is attained within this distance of a net point.
    double net_covering = 0.0;
};

struct SlabParams {
    double b1 = 1.0;
    double b2 = 1.0;
    // Net spacing as a fraction of b1 sqrt(eps); must not exceed 1/2.
    double net_fraction = 0.5;
};

// Empirical slab mass via a kd-tree prefilter on the slab's half diagonal.
std::size_t count_in_slab(const KdTree& tree, const PointCloud& cloud, const Slab& slab,
                          std::vector<std::size_t>& scratch);

// inf over a parameter net of the empirical mass of the slab at each net point.
SlabScore slab_score(const ParametricManifold& M, const PointCloud& cloud, const KdTree& tree, double eps, double b1,
                     double b2, double net_spacing);
SlabScore slab_score(const ParametricManifold& M, const PointCloud& cloud, double eps, double b1, double b2,
                     double net_spacing);

struct FitResult {
    double epsilon = 0.0;
    std::vector<SlabScore> scores;
    std::size_t chosen = 0;
    bool tie = false;
    bool no_support = false;  // every score was 0
    double net_spacing = 0.0;
};

FitResult fit(const CandidateFamily& family, const PointCloud& cloud, double K, const SlabParams& params,
              std::size_t threads = 1);

// sqrt((4/n) [V log(2n) + log(8/u)]).
double vc_beta(double n, double V, double u);

// Default VC dimension used for rotated boxes in R^D.
inline double default_vc_dimension(std::size_t D)
{
    return 2.0 * static_cast<double>(D) + 3.0;
}

struct DeviationRow {
    double empirical = 0.0;
    double truth = 0.0;
    double upper = 0.0;  // allowed empirical maximum
    double lower = 0.0;  // allowed empirical minimum
    bool violated = false;
};

struct DeviationReport {
    double C = 0.0;
    std::size_t n = 0;
    std::vector<DeviationRow> rows;
    std::size_t violations = 0;
};

// Checks Q̂(A) <= Q(A) + C log n/n + sqrt(C log n/n) sqrt(Q(A)) and
// Q̂(A) >= Q(A) - sqrt(C log n/n) sqrt(Q(A)) with C = 4 [V + max(3, xi)].
DeviationReport deviation_check(const PointCloud& cloud, const std::vector<Slab>& slabs,
                                const std::function<double(const Slab&)>& true_mass, double xi, double V);

}  // namespace mlab::slabfit
