#include "mlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace mlab::quad {

namespace {

Rule compute_rule(std::size_t n)
{
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                                  static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        r.nodes[i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

}  // namespace

const Rule& gauss_legendre(std::size_t order)
{
    if (order < 1) {
        throw std::invalid_argument("quadrature order must be positive");
    }
    static std::mutex mu;
    static std::map<std::size_t, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, compute_rule(order)).first;
    }
    return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t order, std::size_t pieces,
                 const std::vector<double>& breakpoints)
{
    std::vector<double> cuts{a};
    for (double c : breakpoints) {
        if (c > a && c < b) {
            cuts.push_back(c);
        }
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    const Rule& rule = gauss_legendre(order);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double w = (cuts[s + 1] - cuts[s]) / static_cast<double>(pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
            const double lo = cuts[s] + static_cast<double>(p) * w;
            const double mid = lo + 0.5 * w;
            double acc = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                acc += rule.weights[i] * f(mid + 0.5 * w * rule.nodes[i]);
            }
            total += 0.5 * w * acc;
        }
    }
    return total;
}

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                                  const std::vector<double>& breakpoints, double scale, std::size_t max_pieces)
{
    AdaptiveResult res;
    std::size_t pieces = 1;
    double prev = integrate(f, a, b, 16, pieces, breakpoints);
    while (true) {
        pieces *= 2;
        const double cur = integrate(f, a, b, 16, pieces, breakpoints);
        res.value = cur;
        res.error = std::abs(cur - prev);
        res.pieces = pieces;
        if (res.error <= rel_tol * std::max(std::abs(cur), scale) || pieces >= max_pieces) {
            return res;
        }
        prev = cur;
    }
}

double DiscreteMeasure::total() const
{
    double s = 0.0;
    for (double w : weights) {
        s += w;
    }
    return s;
}

DiscreteMeasure DiscreteMeasure::point_mass(const Vector& at)
{
    DiscreteMeasure m;
    m.atoms = PointCloud(static_cast<std::size_t>(at.size()));
    m.atoms.push_back(at);
    m.weights.push_back(1.0);
    return m;
}

TensorRule box_rule(const Box& box, const std::vector<bool>& periodic, const std::vector<std::size_t>& pieces,
                    std::size_t order)
{
    const std::size_t d = box.dim();
    std::vector<std::vector<double>> x(d);
    std::vector<std::vector<double>> w(d);
    const Rule& rule = gauss_legendre(order);
    for (std::size_t k = 0; k < d; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double lo = box.lo[i];
        const double len = box.hi[i] - box.lo[i];
        const std::size_t p = std::max<std::size_t>(1, pieces[k]);
        if (periodic[k]) {
            const std::size_t m = p * order;
            const double step = len / static_cast<double>(m);
            for (std::size_t j = 0; j < m; ++j) {
                x[k].push_back(lo + (static_cast<double>(j) + 0.5) * step);
                w[k].push_back(step);
            }
        } else {
            const double step = len / static_cast<double>(p);
            for (std::size_t j = 0; j < p; ++j) {
                const double mid = lo + (static_cast<double>(j) + 0.5) * step;
                for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                    x[k].push_back(mid + 0.5 * step * rule.nodes[q]);
                    w[k].push_back(0.5 * step * rule.weights[q]);
                }
            }
        }
    }
    TensorRule out;
    out.nodes = PointCloud(d);
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
        total *= x[k].size();
    }
    out.nodes.reserve(total);
    out.weights.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> pt(d);
    for (std::size_t f = 0; f < total; ++f) {
        double wt = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            pt[k] = x[k][idx[k]];
            wt *= w[k][idx[k]];
        }
        out.nodes.push_back(pt);
        out.weights.push_back(wt);
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < x[k].size()) {
                break;
            }
            idx[k] = 0;
        }
    }
    return out;
}

}  // namespace mlab::quad
