#include "mlab/core.hpp"

#include <cmath>
#include <sstream>

namespace mlab {

Box::Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_))
{
    if (lo.size() != hi.size()) {
        throw std::invalid_argument("box bounds have different dimensions");
    }
    for (Eigen::Index k = 0; k < lo.size(); ++k) {
        if (!(hi[k] >= lo[k])) {
            throw std::invalid_argument("box upper bound below lower bound");
        }
    }
}

Box Box::cube(std::size_t dim, double half_width)
{
    const auto n = static_cast<Eigen::Index>(dim);
    return Box(Vector::Constant(n, -half_width), Vector::Constant(n, half_width));
}

bool Box::contains(std::span<const double> x, double pad) const
{
    for (std::size_t k = 0; k < x.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        if (x[k] < lo[i] - pad || x[k] > hi[i] + pad) {
            return false;
        }
    }
    return true;
}

bool Box::contains(const Vector& x, double pad) const
{
    return contains(as_span(x), pad);
}

double Box::volume() const
{
    double v = 1.0;
    for (Eigen::Index k = 0; k < lo.size(); ++k) {
        v *= hi[k] - lo[k];
    }
    return v;
}

Box Box::padded(double pad) const
{
    return Box(lo.array() - pad, hi.array() + pad);
}

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords))
{
    if (dim_ == 0 && !coords_.empty()) {
        throw std::invalid_argument("zero-dimensional point cloud with coordinates");
    }
    if (dim_ != 0 && coords_.size() % dim_ != 0) {
        throw std::invalid_argument("coordinate count is not a multiple of the dimension");
    }
}

Vector PointCloud::point(std::size_t i) const
{
    const auto p = (*this)[i];
    return Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(dim_));
}

void PointCloud::push_back(std::span<const double> p)
{
    if (p.size() != dim_) {
        throw std::invalid_argument("point dimension does not match cloud dimension");
    }
    coords_.insert(coords_.end(), p.begin(), p.end());
}

void PointCloud::push_back(const Vector& p)
{
    push_back(as_span(p));
}

void PointCloud::append(const PointCloud& other)
{
    if (other.empty()) {
        return;
    }
    if (other.dim() != dim_) {
        throw std::invalid_argument("cannot append clouds of different dimension");
    }
    coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

void PointCloud::check_finite() const
{
    for (double c : coords_) {
        if (!std::isfinite(c)) {
            throw std::invalid_argument("point cloud has non-finite coordinates");
        }
    }
}

std::string to_string(const Vector& v)
{
    std::ostringstream os;
    os << '(';
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        os << (k ? ", " : "") << v[k];
    }
    os << ')';
    return os.str();
}

}  // namespace mlab
