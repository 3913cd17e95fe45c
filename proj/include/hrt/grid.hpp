#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hrt {

enum class ErrorKind { Config, Io, Format, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// Axis 1 is the fast axis (time, intercept, rho).
struct RegularGrid2 {
    std::size_t n1 = 2, n2 = 2;
    double o1 = 0.0, d1 = 1.0;
    double o2 = 0.0, d2 = 1.0;

    double x1(std::size_t i) const { return o1 + static_cast<double>(i) * d1; }
    double x2(std::size_t j) const { return o2 + static_cast<double>(j) * d2; }
    double end1() const { return x1(n1 - 1); }
    double end2() const { return x2(n2 - 1); }
    std::size_t size() const { return n1 * n2; }
    void validate() const;
    bool operator==(const RegularGrid2&) const = default;
};

RegularGrid2 unit_grid(std::size_t n1, std::size_t n2);

struct Field2 {
    RegularGrid2 grid;
    std::vector<double> data;

    Field2() = default;
    explicit Field2(const RegularGrid2& g) : grid(g), data(g.size(), 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i + j * grid.n1]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i + j * grid.n1]; }
    double* trace(std::size_t j) { return data.data() + j * grid.n1; }
    const double* trace(std::size_t j) const { return data.data() + j * grid.n1; }

    void scale(double s);
    void axpy(double a, const Field2& x);
    double max_abs() const;
    bool finite() const;
};

// Time x offset.
using CmpGather = Field2;
// Intercept x slowness.
using RadonImage = Field2;

double dot(const Field2& a, const Field2& b);
double norm2(const Field2& a);

struct ScaleRecord {
    double T = 1.0;
    double X = 1.0;

    double tau_to_unit(double tau) const { return tau / T; }
    double q_to_unit(double q) const { return q * X / T; }
    double tau_from_unit(double tau) const { return tau * T; }
    double q_from_unit(double q) const { return q * T / X; }
    double output_factor() const { return X; }
    RegularGrid2 radon_to_unit(const RegularGrid2& g) const;
    RegularGrid2 radon_from_unit(const RegularGrid2& g) const;
};

std::pair<CmpGather, ScaleRecord> rescale_to_unit(const CmpGather& g);

// f(sqrt s, sqrt y) / (2 sqrt y) at a sample with offset x > 0.
double squared_coords_value(double f, double x);
// J * f / (2x) with the 2x of J already divided out (jac_over_2x is smooth at x = 0).
double squared_coords_weight(double f, double jac_over_2x);

}  // namespace hrt
