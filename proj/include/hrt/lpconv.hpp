#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hrt/bspline.hpp"
#include "hrt/geometry.hpp"

namespace hrt {

std::size_t fft_friendly(std::size_t n);

// Half-width of the angular support of zeta used for a lattice, snapped to dtheta/2.
double kernel_reach(const SectorGeometry& g, const LatticeSpec& lat);
// Integral of sec(theta) over [-reach, reach].
double zeta_hat_origin(double reach);

struct KernelSpectrum {
    std::size_t n_theta = 0, n_rho = 0;
    double dtheta = 0.0, drho = 0.0;
    double reach = 0.0;
    std::size_t cols = 0;  // computed rho-hat columns 0..cols-1; the rest are zero
    std::size_t oversampling = 0;
    std::uint64_t key = 0;
    std::vector<std::complex<double>> values;  // n_theta x (n_rho/2 + 1), rho-hat fastest

    std::size_t half() const { return n_rho / 2 + 1; }
    double theta_hat(long k) const;
    double rho_hat(long l) const;
    // Frequency indices of either sign; negative rho-hat uses Hermitian symmetry.
    std::complex<double> at(long k, long l) const;
};

struct ZetaOptions {
    double tolerance = 1e-10;
    std::size_t max_oversampling = 1024;
    std::string cache_dir;
};

// Columns beyond the window's rho cutoff are skipped when a window is given.
KernelSpectrum precompute_zeta_hat(const LatticeSpec& lat, const SectorGeometry& g, const SpectralWindow* window,
                                   const ZetaOptions& opt = {});
KernelSpectrum precompute_zeta_hat(const LatticeSpec& lat, double reach, const SpectralWindow* window,
                                   const ZetaOptions& opt = {});

class FftWorkspace {
public:
    FftWorkspace(std::size_t n_theta, std::size_t n_rho);
    ~FftWorkspace();
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;

    double* real() { return real_; }
    std::complex<double>* spec() { return spec_; }
    std::size_t n_theta() const { return n_theta_; }
    std::size_t n_rho() const { return n_rho_; }
    void forward();  // real -> spec
    void inverse();  // spec -> real, unnormalised; spec is destroyed

private:
    std::size_t n_theta_, n_rho_;
    double* real_ = nullptr;
    std::complex<double>* spec_ = nullptr;
    void* plan_fwd_ = nullptr;
    void* plan_inv_ = nullptr;
};

// Field -> F^{-1}( chi_L zeta_hat / (B3_hat^2 dtheta drho) F(field) ); both spline
// compensations (gridding and output interpolation) are applied here.
class LpConvolution {
public:
    LpConvolution() = default;
    LpConvolution(const LatticeSpec& lat, const KernelSpectrum& spec, const SpectralWindow& window);

    const LatticeSpec& lattice() const { return lat_; }
    void forward(FftWorkspace& ws) const;  // in place on ws.real()
    void adjoint(FftWorkspace& ws) const;

private:
    void apply(FftWorkspace& ws, bool conj) const;
    LatticeSpec lat_;
    std::size_t k_keep_ = 0, l_keep_ = 0;  // |k| <= k_keep_, l <= l_keep_
    std::vector<std::complex<double>> mult_;  // rows in fft order restricted to kept, cols 0..l_keep_
    std::vector<long> rows_;
};

std::vector<double> lp_forward_convolve(const std::vector<double>& field, const LatticeSpec& lat,
                                        const KernelSpectrum& spec, const SpectralWindow& window);
std::vector<double> lp_adjoint_convolve(const std::vector<double>& field, const LatticeSpec& lat,
                                        const KernelSpectrum& spec, const SpectralWindow& window);

}  // namespace hrt
