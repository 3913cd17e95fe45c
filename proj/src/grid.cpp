#include "hrt/grid.hpp"

#include <algorithm>
#include <cmath>

namespace hrt {

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

void RegularGrid2::validate() const {
    if (n1 < 2 || n2 < 2) fail(ErrorKind::Config, "grid needs at least 2 samples per axis");
    if (!(d1 > 0.0) || !(d2 > 0.0)) fail(ErrorKind::Config, "grid steps must be positive");
    if (!std::isfinite(o1) || !std::isfinite(o2) || !std::isfinite(d1) || !std::isfinite(d2))
        fail(ErrorKind::Config, "grid metadata must be finite");
}

RegularGrid2 unit_grid(std::size_t n1, std::size_t n2) {
    RegularGrid2 g;
    g.n1 = n1;
    g.n2 = n2;
    g.d1 = 1.0 / static_cast<double>(n1 - 1);
    g.d2 = 1.0 / static_cast<double>(n2 - 1);
    return g;
}

void Field2::scale(double s) {
    for (double& v : data) v *= s;
}

void Field2::axpy(double a, const Field2& x) {
    if (x.data.size() != data.size()) fail(ErrorKind::Config, "axpy size mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += a * x.data[i];
}

double Field2::max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
}

bool Field2::finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

double dot(const Field2& a, const Field2& b) {
    if (a.data.size() != b.data.size()) fail(ErrorKind::Config, "dot size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double norm2(const Field2& a) { return std::sqrt(dot(a, a)); }

RegularGrid2 ScaleRecord::radon_to_unit(const RegularGrid2& g) const {
    RegularGrid2 u = g;
    u.o1 = tau_to_unit(g.o1);
    u.d1 = tau_to_unit(g.d1);
    u.o2 = q_to_unit(g.o2);
    u.d2 = q_to_unit(g.d2);
    return u;
}

RegularGrid2 ScaleRecord::radon_from_unit(const RegularGrid2& g) const {
    RegularGrid2 u = g;
    u.o1 = tau_from_unit(g.o1);
    u.d1 = tau_from_unit(g.d1);
    u.o2 = q_from_unit(g.o2);
    u.d2 = q_from_unit(g.d2);
    return u;
}

std::pair<CmpGather, ScaleRecord> rescale_to_unit(const CmpGather& g) {
    g.grid.validate();
    if (g.grid.o1 != 0.0 || g.grid.o2 != 0.0)
        fail(ErrorKind::Config, "gather must start at t=0 and x=0");
    ScaleRecord rec;
    rec.T = g.grid.end1();
    rec.X = g.grid.end2();
    if (!(rec.T > 0.0) || !(rec.X > 0.0)) fail(ErrorKind::Config, "non-positive T or X");
    CmpGather out = g;
    out.grid = unit_grid(g.grid.n1, g.grid.n2);
    return {out, rec};
}

double squared_coords_value(double f, double x) {
    if (!(x > 0.0)) fail(ErrorKind::Config, "squared-coordinate value needs x > 0");
    return f / (2.0 * x);
}

double squared_coords_weight(double f, double jac_over_2x) { return f * jac_over_2x; }

}  // namespace hrt
