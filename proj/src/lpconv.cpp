#include "hrt/lpconv.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>

#include "hrt/grid.hpp"

namespace hrt {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr double kPi = std::numbers::pi;

// Gregory end corrections to the trapezoid rule, eight difference orders.
std::vector<double> gregory_corrections() {
    static const double G[8] = {1.0 / 12,          1.0 / 24,          19.0 / 720,      3.0 / 160,
                                863.0 / 60480,     275.0 / 24192,     33953.0 / 3628800, 8183.0 / 1036800};
    std::vector<double> c(9, 0.0);
    for (int j = 0; j <= 8; ++j) {
        double s = 0.0;
        for (int k = std::max(j, 1); k <= 8; ++k) {
            double binom = 1.0;
            for (int i = 0; i < j; ++i) binom = binom * (k - i) / (i + 1);
            s += G[k - 1] * binom;
        }
        c[j] = (j % 2 == 0 ? -s : s);
    }
    return c;
}

std::uint64_t fnv1a(const void* p, std::size_t n, std::uint64_t h) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <class T>
std::uint64_t mix(std::uint64_t h, T v) {
    return fnv1a(&v, sizeof(v), h);
}

class ColumnTransform {
public:
    ColumnTransform(const KernelSpectrum& ks, std::size_t u)
        : ks_(ks), u_(u), L_(u * ks.n_theta), buf_(fftw_alloc_complex(L_)) {
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            plan_ = fftw_plan_dft_1d(static_cast<int>(L_), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        const double delta = ks.dtheta / static_cast<double>(u);
        M_ = static_cast<std::size_t>(std::llround(2.0 * ks.reach / delta));
        if (M_ + 1 > L_) fail(ErrorKind::Numerical, "kernel reach exceeds lattice period");
        const std::vector<double> c = gregory_corrections();
        amp_.resize(M_ + 1);
        lc_.resize(M_ + 1);
        for (std::size_t m = 0; m <= M_; ++m) {
            const double th = -ks.reach + static_cast<double>(m) * delta;
            double w = (m == 0 || m == M_) ? 0.5 : 1.0;
            if (m < c.size()) w += c[m];
            if (M_ - m < c.size()) w += c[M_ - m];
            const double cs = std::cos(th);
            amp_[m] = w * delta / cs;
            lc_[m] = std::log(cs);
        }
    }
    ~ColumnTransform() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_);
    }
    ColumnTransform(const ColumnTransform&) = delete;
    ColumnTransform& operator=(const ColumnTransform&) = delete;

    // Writes zeta_hat(theta_hat_k, rho_hat_l) for all k into out (fft order).
    void column(long l, std::complex<double>* out) const {
        const double rh = ks_.rho_hat(l);
        std::memset(buf_, 0, sizeof(fftw_complex) * L_);
        for (std::size_t m = 0; m <= M_; ++m) {
            const double ph = -rh * lc_[m];
            buf_[m][0] = amp_[m] * std::cos(ph);
            buf_[m][1] = amp_[m] * std::sin(ph);
        }
        fftw_execute(plan_);
        const long n = static_cast<long>(ks_.n_theta);
        for (long i = 0; i < n; ++i) {
            const long k = i <= (n - 1) / 2 ? i : i - n;
            const std::size_t src = static_cast<std::size_t>(k >= 0 ? k : static_cast<long>(L_) + k);
            const double ph = ks_.theta_hat(k) * ks_.reach;
            const std::complex<double> z(buf_[src][0], buf_[src][1]);
            out[i] = z * std::complex<double>(std::cos(ph), std::sin(ph));
        }
    }

private:
    const KernelSpectrum& ks_;
    std::size_t u_, L_, M_ = 0;
    fftw_complex* buf_;
    fftw_plan plan_;
    std::vector<double> amp_, lc_;
};

bool load_cache(const std::string& path, KernelSpectrum& ks) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[4];
    std::uint64_t key = 0, nt = 0, nh = 0, cols = 0, over = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&key), 8);
    in.read(reinterpret_cast<char*>(&nt), 8);
    in.read(reinterpret_cast<char*>(&nh), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    in.read(reinterpret_cast<char*>(&over), 8);
    if (!in || std::memcmp(magic, "ZSC1", 4) != 0 || key != ks.key || nt != ks.n_theta || nh != ks.half() ||
        cols != ks.cols)
        return false;
    std::vector<std::complex<double>> v(nt * nh);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(v[0])));
    if (!in) return false;
    ks.values = std::move(v);
    ks.oversampling = over;
    return true;
}

void store_cache(const std::string& dir, const std::string& path, const KernelSpectrum& ks) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;
        const std::uint64_t hdr[5] = {ks.key, ks.n_theta, ks.half(), ks.cols, ks.oversampling};
        out.write("ZSC1", 4);
        out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
        out.write(reinterpret_cast<const char*>(ks.values.data()),
                  static_cast<std::streamsize>(ks.values.size() * sizeof(ks.values[0])));
        if (!out) return;
    }
    std::filesystem::rename(tmp, path, ec);
}

}  // namespace

std::size_t fft_friendly(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

double kernel_reach(const SectorGeometry& g, const LatticeSpec& lat) {
    const double k = g.beta + 4.0 * lat.dtheta;
    const double snapped = std::ceil(2.0 * k / lat.dtheta) * lat.dtheta / 2.0;
    if (snapped >= kPi / 2 - 1e-6) fail(ErrorKind::Numerical, "kernel reach reaches pi/2; split the slowness range");
    return snapped;
}

double zeta_hat_origin(double reach) { return 2.0 * std::log(1.0 / std::cos(reach) + std::tan(reach)); }

double KernelSpectrum::theta_hat(long k) const {
    return 2.0 * kPi * static_cast<double>(k) / (static_cast<double>(n_theta) * dtheta);
}

double KernelSpectrum::rho_hat(long l) const {
    return 2.0 * kPi * static_cast<double>(l) / (static_cast<double>(n_rho) * drho);
}

std::complex<double> KernelSpectrum::at(long k, long l) const {
    const long nt = static_cast<long>(n_theta);
    if (l < 0) return std::conj(at(-k, -l));
    if (static_cast<std::size_t>(l) >= half()) fail(ErrorKind::Config, "rho-hat index out of range");
    const long i = ((k % nt) + nt) % nt;
    return values[static_cast<std::size_t>(i) * half() + static_cast<std::size_t>(l)];
}

KernelSpectrum precompute_zeta_hat(const LatticeSpec& lat, const SectorGeometry& g, const SpectralWindow* window,
                                   const ZetaOptions& opt) {
    return precompute_zeta_hat(lat, kernel_reach(g, lat), window, opt);
}

KernelSpectrum precompute_zeta_hat(const LatticeSpec& lat, double reach, const SpectralWindow* window,
                                   const ZetaOptions& opt) {
    KernelSpectrum ks;
    ks.n_theta = lat.n_theta;
    ks.n_rho = lat.n_rho;
    ks.dtheta = lat.dtheta;
    ks.drho = lat.drho;
    ks.reach = reach;
    if (ks.n_theta < 4 || ks.n_rho < 4) fail(ErrorKind::Config, "lattice too small for a kernel spectrum");
    const double halves = 2.0 * reach / lat.dtheta;
    if (!(reach > 0.0) || std::abs(halves - std::round(halves)) > 1e-9 * halves)
        fail(ErrorKind::Config, "kernel reach must be a positive multiple of dtheta/2");
    ks.cols = ks.half();
    if (window) {
        const double lmax = window->wmax_rho * static_cast<double>(ks.n_rho) / (2.0 * kPi);
        ks.cols = std::min(ks.half(), static_cast<std::size_t>(std::floor(lmax)) + 1);
    }
    std::uint64_t h = 14695981039346656037ull;
    h = fnv1a("zeta-v1", 7, h);
    h = mix(h, ks.n_theta);
    h = mix(h, ks.n_rho);
    h = mix(h, ks.dtheta);
    h = mix(h, ks.drho);
    h = mix(h, ks.reach);
    h = mix(h, ks.cols);
    h = mix(h, opt.tolerance);
    ks.key = h;

    std::string path;
    if (!opt.cache_dir.empty()) {
        char name[40];
        std::snprintf(name, sizeof(name), "zeta-%016llx.bin", static_cast<unsigned long long>(h));
        path = (std::filesystem::path(opt.cache_dir) / name).string();
        if (load_cache(path, ks)) return ks;
    }

    const double ratio = ks.dtheta / ks.drho * std::tan(reach);
    std::size_t u = static_cast<std::size_t>(std::ceil(2.0 * kPi * (1.0 + ratio)));
    u = std::max<std::size_t>(u, 2);
    while (2.0 * reach / (ks.dtheta / static_cast<double>(u)) < 32.0) u *= 2;

    const long probe[2] = {0, static_cast<long>(ks.cols) - 1};
    std::vector<std::complex<double>> a(ks.n_theta), b(ks.n_theta);
    for (;;) {
        if (2 * u > opt.max_oversampling)
            fail(ErrorKind::Numerical, "zeta quadrature did not reach tolerance at the maximum oversampling");
        ColumnTransform coarse(ks, u), fine(ks, 2 * u);
        double err = 0.0, scale = 0.0;
        for (long l : probe) {
            coarse.column(l, a.data());
            fine.column(l, b.data());
            for (std::size_t i = 0; i < a.size(); ++i) {
                err = std::max(err, std::abs(a[i] - b[i]));
                scale = std::max(scale, std::abs(b[i]));
            }
        }
        if (err <= opt.tolerance * scale) break;
        u *= 2;
    }
    u *= 2;
    ks.oversampling = u;
    ks.values.assign(ks.n_theta * ks.half(), {0.0, 0.0});
    {
        ColumnTransform ct(ks, u);
        for (std::size_t l = 0; l < ks.cols; ++l) {
            ct.column(static_cast<long>(l), a.data());
            for (std::size_t i = 0; i < ks.n_theta; ++i) ks.values[i * ks.half() + l] = a[i];
        }
    }
    // Exact Hermitian symmetry in the self-conjugate columns.
    const long nt = static_cast<long>(ks.n_theta);
    for (std::size_t l : {std::size_t{0}, ks.n_rho % 2 == 0 ? ks.half() - 1 : std::size_t{0}}) {
        if (l >= ks.cols) continue;
        for (long k = 0; k <= nt / 2; ++k) {
            const std::size_t i = static_cast<std::size_t>(k), j = static_cast<std::size_t>((nt - k) % nt);
            auto& p = ks.values[i * ks.half() + l];
            auto& q = ks.values[j * ks.half() + l];
            const std::complex<double> avg = 0.5 * (p + std::conj(q));
            p = avg;
            q = std::conj(avg);
        }
    }
    if (!path.empty()) store_cache(opt.cache_dir, path, ks);
    return ks;
}

FftWorkspace::FftWorkspace(std::size_t n_theta, std::size_t n_rho) : n_theta_(n_theta), n_rho_(n_rho) {
    real_ = fftw_alloc_real(n_theta * n_rho);
    spec_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n_theta * (n_rho / 2 + 1)));
    if (!real_ || !spec_) fail(ErrorKind::Numerical, "out of memory for FFT workspace");
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft_r2c_2d(static_cast<int>(n_theta), static_cast<int>(n_rho), real_,
                                     reinterpret_cast<fftw_complex*>(spec_), FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_2d(static_cast<int>(n_theta), static_cast<int>(n_rho),
                                     reinterpret_cast<fftw_complex*>(spec_), real_, FFTW_ESTIMATE);
}

FftWorkspace::~FftWorkspace() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(real_);
    fftw_free(spec_);
}

void FftWorkspace::forward() { fftw_execute(static_cast<fftw_plan>(plan_fwd_)); }
void FftWorkspace::inverse() { fftw_execute(static_cast<fftw_plan>(plan_inv_)); }

LpConvolution::LpConvolution(const LatticeSpec& lat, const KernelSpectrum& spec, const SpectralWindow& window)
    : lat_(lat) {
    if (spec.n_theta != lat.n_theta || spec.n_rho != lat.n_rho || spec.dtheta != lat.dtheta ||
        spec.drho != lat.drho)
        fail(ErrorKind::Config, "lattice/spectrum mismatch");
    const double nt = static_cast<double>(lat.n_theta), nr = static_cast<double>(lat.n_rho);
    const long kmax = std::min<long>(static_cast<long>(std::floor(window.wmax_theta * nt / (2 * kPi))),
                                     static_cast<long>((lat.n_theta - 1) / 2));
    const long lmax = std::min<long>(static_cast<long>(std::floor(window.wmax_rho * nr / (2 * kPi))),
                                     static_cast<long>((lat.n_rho - 1) / 2));
    if (lmax >= static_cast<long>(spec.cols)) fail(ErrorKind::Config, "lattice/spectrum mismatch: window wider than spectrum");
    k_keep_ = static_cast<std::size_t>(kmax);
    l_keep_ = static_cast<std::size_t>(lmax);
    const double norm = 1.0 / (lat.dtheta * lat.drho * nt * nr);
    std::vector<double> inv_r(l_keep_ + 1);
    for (std::size_t l = 0; l <= l_keep_; ++l) {
        const double b = bspline3_hat(2 * kPi * static_cast<double>(l) / nr);
        inv_r[l] = 1.0 / (b * b);
    }
    for (long k = -kmax; k <= kmax; ++k) {
        const long row = (k + static_cast<long>(lat.n_theta)) % static_cast<long>(lat.n_theta);
        rows_.push_back(row);
        const double b = bspline3_hat(2 * kPi * static_cast<double>(k) / nt);
        const double inv_t = 1.0 / (b * b);
        for (std::size_t l = 0; l <= l_keep_; ++l)
            mult_.push_back(spec.at(k, static_cast<long>(l)) * (inv_t * inv_r[l] * norm));
    }
}

void LpConvolution::apply(FftWorkspace& ws, bool conj) const {
    if (ws.n_theta() != lat_.n_theta || ws.n_rho() != lat_.n_rho) fail(ErrorKind::Config, "workspace/lattice mismatch");
    ws.forward();
    const std::size_t half = lat_.n_rho / 2 + 1;
    std::complex<double>* s = ws.spec();
    std::vector<char> kept(lat_.n_theta, 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const std::size_t row = static_cast<std::size_t>(rows_[r]);
        kept[row] = 1;
        std::complex<double>* p = s + row * half;
        const std::complex<double>* m = &mult_[r * (l_keep_ + 1)];
        if (conj)
            for (std::size_t l = 0; l <= l_keep_; ++l) p[l] *= std::conj(m[l]);
        else
            for (std::size_t l = 0; l <= l_keep_; ++l) p[l] *= m[l];
        std::fill(p + l_keep_ + 1, p + half, std::complex<double>(0.0, 0.0));
    }
    for (std::size_t row = 0; row < lat_.n_theta; ++row)
        if (!kept[row]) std::fill(s + row * half, s + (row + 1) * half, std::complex<double>(0.0, 0.0));
    ws.inverse();
}

void LpConvolution::forward(FftWorkspace& ws) const { apply(ws, false); }
void LpConvolution::adjoint(FftWorkspace& ws) const { apply(ws, true); }

namespace {

std::vector<double> run_conv(const std::vector<double>& field, const LatticeSpec& lat, const KernelSpectrum& spec,
                             const SpectralWindow& window, bool adjoint) {
    if (field.size() != lat.size()) fail(ErrorKind::Config, "field does not match lattice");
    LpConvolution conv(lat, spec, window);
    FftWorkspace ws(lat.n_theta, lat.n_rho);
    std::copy(field.begin(), field.end(), ws.real());
    adjoint ? conv.adjoint(ws) : conv.forward(ws);
    return std::vector<double>(ws.real(), ws.real() + lat.size());
}

}  // namespace

std::vector<double> lp_forward_convolve(const std::vector<double>& field, const LatticeSpec& lat,
                                        const KernelSpectrum& spec, const SpectralWindow& window) {
    return run_conv(field, lat, spec, window, false);
}

std::vector<double> lp_adjoint_convolve(const std::vector<double>& field, const LatticeSpec& lat,
                                        const KernelSpectrum& spec, const SpectralWindow& window) {
    return run_conv(field, lat, spec, window, true);
}

}  // namespace hrt
