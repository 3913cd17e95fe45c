#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrt/grid.hpp"

namespace hrt {

enum class Wavelet { Ricker, GaussDerivative };

struct EventSpec {
    double tau0 = 0.0;  // s
    double q0 = 0.0;    // s/km
    double amplitude = 1.0;
    double freq = 25.0;  // peak frequency, Hz
    Wavelet wavelet = Wavelet::Ricker;
};

double wavelet_value(Wavelet w, double freq, double t);

CmpGather synth_gather(const RegularGrid2& grid, const std::vector<EventSpec>& events, double noise_rms = 0.0,
                       std::uint64_t seed = 1);

enum class MaskPattern { RandomTraces, Regular };

struct MaskSpec {
    double fraction_missing = 0.0;
    std::uint64_t seed = 1;
    MaskPattern pattern = MaskPattern::RandomTraces;
};

// Three hyperbolic events on a fixed 1.022 s x 1.022 km panel sampled n x n
// (2 ms / 2 m at n = 512), 20 Hz Ricker, with the matching Radon grid.
struct ReferenceCase {
    RegularGrid2 gather;
    RegularGrid2 radon;
    std::vector<EventSpec> events;
};
ReferenceCase reference_case(std::size_t n);

// One entry per trace, nonzero for live traces.
std::vector<unsigned char> make_mask(const RegularGrid2& grid, const MaskSpec& spec);

}  // namespace hrt
