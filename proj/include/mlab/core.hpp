#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error taxonomy. The CLI maps ConfigError to exit code 2 and
// NumericFloorError to exit code 3; everything else is a programming or
// domain error surfaced as std::invalid_argument / std::runtime_error.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericFloorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Axis-aligned box in R^D (also used for parameter domains).
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_);

    static Box cube(std::size_t dim, double half_width);

    std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }
    bool contains(std::span<const double> x, double pad = 0.0) const;
    bool contains(const Vector& x, double pad = 0.0) const;
    double volume() const;
    Box padded(double pad) const;
};

// Flat row-major storage of n points in R^D.
class PointCloud {
public:
    explicit PointCloud(std::size_t dim = 0) : dim_(dim) {}
    PointCloud(std::size_t dim, std::vector<double> coords);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const
    {
        return {coords_.data() + i * dim_, dim_};
    }
    Vector point(std::size_t i) const;

    void push_back(std::span<const double> p);
    void push_back(const Vector& p);
    void reserve(std::size_t n) { coords_.reserve(n * dim_); }
    void append(const PointCloud& other);

    const std::vector<double>& coords() const { return coords_; }
    std::vector<double>& coords() { return coords_; }

    // Throws if any coordinate is non-finite.
    void check_finite() const;

private:
    std::size_t dim_;
    std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

inline std::span<const double> as_span(const Vector& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::string to_string(const Vector& v);

}  // namespace mlab
