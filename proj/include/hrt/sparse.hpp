#pragma once

#include <cstdint>
#include <vector>

#include "hrt/grid.hpp"
#include "hrt/operators.hpp"

namespace hrt {

// Shrinks toward zero by mu/2; zero inside (-mu/2, mu/2).
double soft_threshold(double v, double mu);
void soft_threshold(Field2& f, double mu);

struct IstaConfig {
    double mu = -1.0;       // < 0: mu_scale * 0.05 * max|R f|
    double mu_scale = 1.0;
    double c = 0.0;         // <= 0: 0.95 / estimate_norm
    int n_iters = 30;
    double early_stop = 0.0;  // relative objective change; 0 disables
    int norm_iters = 30;
    std::uint64_t seed = 1;
    std::vector<unsigned char> mask;  // live traces; empty means all live
};

struct IstaTrace {
    double mu = 0.0;
    double c = 0.0;
    std::vector<double> objective;  // entry n is the objective of g^n
    std::vector<double> residual;
    std::vector<std::size_t> nonzeros;
};

struct IstaResult {
    RadonImage g;
    IstaTrace trace;
};

IstaResult ista(const OperatorPlan& plan, const CmpGather& f, const IstaConfig& cfg);
// f is zeroed on dead traces before iterating.
IstaResult ista_masked(const OperatorPlan& plan, const CmpGather& f, const IstaConfig& cfg);

struct Polyline {
    std::vector<double> tau, q;
};

// Primaries: q below the boundary q_b(tau); multiples: q at or above it.
std::pair<RadonImage, RadonImage> mute_and_split(const RadonImage& g, const Polyline& boundary);

}  // namespace hrt
