#include "mlab/slabfit.hpp"

#include "mlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mlab::slabfit {

double epsilon_n(double n, std::size_t d, double K)
{
    if (!(n >= 2.0) || !(K > 0.0) || d < 1) {
        throw std::invalid_argument("epsilon_n needs n >= 2, K > 0 and d >= 1");
    }
    return std::pow(K * std::log(n) / n, 2.0 / static_cast<double>(d));
}

CandidateFamily::CandidateFamily(std::vector<ParametricManifold> m) : members(std::move(m))
{
    if (members.empty()) {
        throw std::invalid_argument("candidate family is empty");
    }
    for (const auto& c : members) {
        if (c.ambient_dim() != members[0].ambient_dim() || c.intrinsic_dim() != members[0].intrinsic_dim()) {
            throw std::invalid_argument("candidate family mixes dimensions");
        }
    }
}

void CandidateFamily::validate(double resolution) const
{
    for (const auto& c : members) {
        const auto rep = geometry::reach_validate(c, c.reach_floor(), resolution);
        if (!rep.pass) {
            throw std::invalid_argument("candidate " + c.label() + " fails reach validation at its reach floor");
        }
    }
}

CandidateFamily offset_family(const ParametricManifold& truth, std::size_t count, double offset)
{
    std::vector<ParametricManifold> members{truth};
    const auto D = static_cast<Eigen::Index>(truth.ambient_dim());
    const Matrix I = Matrix::Identity(D, D);
    for (std::size_t j = 0; j < count; ++j) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
        Vector t = Vector::Zero(D);
        t[0] = offset * std::cos(a);
        t[1] = offset * std::sin(a);
        members.push_back(geometry::transform(truth, I, t, truth.label() + "+offset" + std::to_string(j)));
    }
    return CandidateFamily(std::move(members));
}

std::size_t count_in_slab(const KdTree& tree, const PointCloud& cloud, const Slab& slab,
                          std::vector<std::size_t>& scratch)
{
    tree.radius_search(as_span(slab.center), slab.half_diagonal() * (1.0 + 1e-9), scratch);
    std::size_t count = 0;
    for (std::size_t i : scratch) {
        count += geometry::slab_membership(slab, cloud[i]) ? 1 : 0;
    }
    return count;
}

SlabScore slab_score(const ParametricManifold& M, const PointCloud& cloud, const KdTree& tree, double eps, double b1,
                     double b2, double net_spacing)
{
    if (cloud.empty()) {
        throw std::invalid_argument("slab score of an empty cloud");
    }
    const double required = 0.5 * b1 * std::sqrt(eps);
    if (!(net_spacing > 0.0) || net_spacing > required * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "net too coarse: spacing must be <= " << required;
        throw std::invalid_argument(msg.str());
    }
    const auto net = geometry::discretize(M, net_spacing);
    SlabScore out;
    out.label = M.label();
    out.net_spacing = net_spacing;
    out.net_covering = net.covering_radius;
    std::size_t best = cloud.size() + 1;
    std::vector<std::size_t> scratch;
    for (std::size_t i = 0; i < net.points.size(); ++i) {
        const Slab s = geometry::build_slab(M, net.chart[i], net.params.point(i), eps, b1, b2);
        const std::size_t c = count_in_slab(tree, cloud, s, scratch);
        if (c < best) {
            best = c;
            out.argmin_net_index = i;
            if (c == 0) {
                break;
            }
        }
    }
    out.argmin_param = net.params.point(out.argmin_net_index);
    out.score = static_cast<double>(best) / static_cast<double>(cloud.size());
    return out;
}

SlabScore slab_score(const ParametricManifold& M, const PointCloud& cloud, double eps, double b1, double b2,
                     double net_spacing)
{
    return slab_score(M, cloud, KdTree(cloud), eps, b1, b2, net_spacing);
}

FitResult fit(const CandidateFamily& family, const PointCloud& cloud, double K, const SlabParams& params,
              std::size_t threads)
{
    if (params.net_fraction > 0.5 || !(params.net_fraction > 0.0)) {
        throw std::invalid_argument("net fraction must lie in (0, 1/2]");
    }
    FitResult res;
    const std::size_t d = family.members[0].intrinsic_dim();
    res.epsilon = epsilon_n(static_cast<double>(cloud.size()), d, K);
    res.net_spacing = params.net_fraction * params.b1 * std::sqrt(res.epsilon);
    const KdTree tree(cloud);
    res.scores.resize(family.size());
    parallel_for(family.size(), threads, [&](std::size_t j) {
        res.scores[j] = slab_score(family.members[j], cloud, tree, res.epsilon, params.b1, params.b2, res.net_spacing);
    });
    double best = -1.0;
    for (std::size_t j = 0; j < res.scores.size(); ++j) {
        if (res.scores[j].score > best) {
            best = res.scores[j].score;
            res.chosen = j;
        }
    }
    for (std::size_t j = 0; j < res.scores.size(); ++j) {
        if (j != res.chosen && res.scores[j].score == best) {
            res.tie = true;
        }
    }
    res.no_support = best == 0.0;
    if (res.no_support) {
        res.chosen = 0;
    }
    return res;
}

double vc_beta(double n, double V, double u)
{
    if (!(n >= 1.0) || !(V >= 1.0) || !(u > 0.0) || !(u < 1.0)) {
        throw std::invalid_argument("vc_beta needs n >= 1, V >= 1 and 0 < u < 1");
    }
    return std::sqrt((4.0 / n) * (V * std::log(2.0 * n) + std::log(8.0 / u)));
}

DeviationReport deviation_check(const PointCloud& cloud, const std::vector<Slab>& slabs,
                                const std::function<double(const Slab&)>& true_mass, double xi, double V)
{
    if (cloud.empty()) {
        throw std::invalid_argument("deviation check of an empty cloud");
    }
    DeviationReport rep;
    rep.n = cloud.size();
    rep.C = 4.0 * (V + std::max(3.0, xi));
    const double n = static_cast<double>(rep.n);
    const double a = rep.C * std::log(n) / n;
    const KdTree tree(cloud);
    std::vector<std::size_t> scratch;
    for (const Slab& s : slabs) {
        DeviationRow row;
        row.empirical = static_cast<double>(count_in_slab(tree, cloud, s, scratch)) / n;
        row.truth = true_mass(s);
        row.upper = row.truth + a + std::sqrt(a) * std::sqrt(row.truth);
        row.lower = row.truth - std::sqrt(a) * std::sqrt(row.truth);
        row.violated = row.empirical > row.upper || row.empirical < row.lower;
        rep.violations += row.violated ? 1 : 0;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace mlab::slabfit
