#include "hrt/operators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace hrt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double ramp(double z) {
    z = std::clamp(z, -1.0, 1.0);
    return 0.5 * (1.0 + std::sin(0.5 * std::numbers::pi * z));
}

void catmull_rom(double fr, double* w) {
    const double f2 = fr * fr, f3 = f2 * fr;
    w[0] = 0.5 * (-f3 + 2.0 * f2 - fr);
    w[1] = 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0);
    w[2] = 0.5 * (-3.0 * f3 + 4.0 * f2 + fr);
    w[3] = 0.5 * (f3 - f2);
}

std::vector<double> trapezoid_weights(std::size_t n, double d) {
    std::vector<double> w(n, d);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

void merge(ApplyStats& a, const ApplyStats& b) {
    a.grid_seconds += b.grid_seconds;
    a.conv_seconds += b.conv_seconds;
    a.interp_seconds += b.interp_seconds;
    a.samples += b.samples;
    a.lattice_points += b.lattice_points;
    a.splits += b.splits;
}

}  // namespace

struct OperatorPlan::Pool {
    std::mutex m;
    std::vector<std::vector<std::unique_ptr<FftWorkspace>>> free;

    std::unique_ptr<FftWorkspace> acquire(std::size_t s, const LatticeSpec& lat) {
        {
            std::lock_guard<std::mutex> lock(m);
            if (!free[s].empty()) {
                auto w = std::move(free[s].back());
                free[s].pop_back();
                return w;
            }
        }
        return std::make_unique<FftWorkspace>(lat.n_theta, lat.n_rho);
    }
    void release(std::size_t s, std::unique_ptr<FftWorkspace> w) {
        std::lock_guard<std::mutex> lock(m);
        free[s].push_back(std::move(w));
    }
};

OperatorPlan::~OperatorPlan() = default;

OperatorPlan::OperatorPlan(const RegularGrid2& gather_grid, const RegularGrid2& radon_grid, const PlanOptions& opt)
    : gather_(gather_grid), radon_(radon_grid), opt_(opt), pool_(std::make_unique<Pool>()) {
    gather_.validate();
    radon_.validate();
    if (gather_.o1 != 0.0 || gather_.o2 != 0.0) fail(ErrorKind::Config, "gather must start at t=0 and x=0");
    if (opt.n_splits_t < 0 || opt.n_splits_q < 0) fail(ErrorKind::Config, "split counts must be non-negative");
    if (!(opt.window_threshold > 0.0) || opt.window_threshold > 1.0)
        fail(ErrorKind::Config, "window threshold must be in (0,1]");
    if (!(opt.oversampling > 0.0)) fail(ErrorKind::Config, "lattice oversampling must be positive");
    if (opt.guard < 0) fail(ErrorKind::Config, "guard must be non-negative");
    scale_.T = gather_.end1();
    scale_.X = gather_.end2();

    const std::size_t n1 = gather_.n1, n2 = gather_.n2, ntau = radon_.n1, nq = radon_.n2;
    const double tau_min = scale_.tau_to_unit(radon_.o1), tau_max = scale_.tau_to_unit(radon_.end1());
    const double q_min = scale_.q_to_unit(radon_.o2), q_max = scale_.q_to_unit(radon_.end2());
    if (!(tau_min > 0.0)) fail(ErrorKind::Config, "tau axis must start above zero");
    if (tau_max > 1.0 + 1e-12) fail(ErrorKind::Config, "tau axis extends beyond the gather time range");
    if (!(q_min > 0.0)) fail(ErrorKind::Config, "need q_min > 0");

    const double dt = 1.0 / static_cast<double>(n1 - 1), dx = 1.0 / static_cast<double>(n2 - 1);
    const std::vector<double> wx = trapezoid_weights(n2, dx);
    auto t_of = [&](std::size_t r) { return static_cast<double>(r) * dt; };
    auto x_of = [&](std::size_t k) { return static_cast<double>(k) * dx; };

    // Row partition of unity across t-splits.
    const int nt = opt.n_splits_t;
    const double s = static_cast<double>(opt.ramp_rows ? opt.ramp_rows : std::max<std::size_t>(4, n1 / 16));
    std::vector<double> seam(static_cast<std::size_t>(nt) + 2);
    for (int i = 0; i <= nt + 1; ++i)
        seam[static_cast<std::size_t>(i)] =
            tau_min * std::pow(1.0 / tau_min, static_cast<double>(i) / (nt + 1)) * static_cast<double>(n1 - 1);
    for (int i = 0; i <= nt; ++i)
        if (seam[static_cast<std::size_t>(i) + 1] - seam[static_cast<std::size_t>(i)] < (i == 0 ? 1.0 : 2.0) * s)
            fail(ErrorKind::Config, "t-splits too close together for the seam ramps; use fewer splits");
    for (int p = 0; p <= nt; ++p) {
        std::vector<double> psi(n1);
        for (std::size_t j = 0; j < n1; ++j) {
            const double jj = static_cast<double>(j);
            const double up = p == 0 ? ramp((jj - seam[0] + s) / s) : ramp((jj - seam[static_cast<std::size_t>(p)]) / s);
            const double dn = p == nt ? 1.0 : 1.0 - ramp((jj - seam[static_cast<std::size_t>(p) + 1]) / s);
            psi[j] = up * dn;
        }
        row_weights_.push_back(std::move(psi));
    }

    // Slowness boundaries, geometric in arctan q^2.
    const int nqs = opt.n_splits_q;
    const double a0 = std::atan(q_min * q_min), a1 = std::atan(q_max * q_max);
    std::vector<double> qb(static_cast<std::size_t>(nqs) + 2);
    for (int i = 0; i <= nqs + 1; ++i)
        qb[static_cast<std::size_t>(i)] = std::sqrt(std::tan(a0 * std::pow(a1 / a0, static_cast<double>(i) / (nqs + 1))));
    qb.front() = q_min;
    qb.back() = q_max;
    std::vector<std::size_t> col_cut(static_cast<std::size_t>(nqs) + 2, nq);
    col_cut.front() = 0;
    for (int i = 1; i <= nqs; ++i) {
        std::size_t c = 0;
        while (c < nq && scale_.q_to_unit(radon_.x2(c)) < qb[static_cast<std::size_t>(i)]) ++c;
        col_cut[static_cast<std::size_t>(i)] = c;
    }

    const SpectralWindow window = make_window(opt.window_threshold);
    ZetaOptions zopt;
    zopt.tolerance = opt.quadrature_tol;
    zopt.cache_dir = opt.cache_dir;
    std::size_t bytes = 0;

    for (int p = 0; p <= nt; ++p) {
        const std::vector<double>& psi = row_weights_[static_cast<std::size_t>(p)];
        std::size_t rb = n1, re = 0;
        for (std::size_t j = 0; j < n1; ++j)
            if (psi[j] > 1e-14) {
                rb = std::min(rb, j);
                re = j + 1;
            }
        if (rb >= re || re - rb < 2) fail(ErrorKind::Config, "t-split covers fewer than two data rows");
        const std::size_t nrows = re - rb;
        for (int r = 0; r <= nqs; ++r) {
            const std::size_t cb = col_cut[static_cast<std::size_t>(r)], ce = col_cut[static_cast<std::size_t>(r) + 1];
            if (cb >= ce) continue;
            SplitPlan sp;
            sp.row_begin = rb;
            sp.row_end = re;
            sp.col_begin = cb;
            sp.col_end = ce;
            const double t0 = t_of(rb), t1 = t_of(re - 1);
            sp.frame.t0 = t0;
            sp.frame.cs = 1.0 / t1;
            sp.frame.cy = 1.0;
            const double w = sp.frame.s(t1), h = sp.frame.y(1.0);
            sp.kappa_min = sp.frame.kappa(qb[static_cast<std::size_t>(r)]);
            sp.kappa_max = sp.frame.kappa(qb[static_cast<std::size_t>(r) + 1]);
            sp.geometry = build_geometry_rect(sp.kappa_min, sp.kappa_max, w, h, 0.0);
            const SectorGeometry& g = sp.geometry;

            const std::size_t ns = nrows * n2;
            std::vector<double> phi(ns), eta(ns);
            for (std::size_t k = 0; k < n2; ++k)
                for (std::size_t j = 0; j < nrows; ++j) {
                    const LogPolar lp = phi_eta_data(g, sp.frame, t_of(rb + j), x_of(k));
                    phi[k * nrows + j] = lp.theta;
                    eta[k * nrows + j] = lp.rho;
                }
            double dth = 0.0, drh = 0.0, eta_min = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < n2; ++k)
                for (std::size_t j = 0; j < nrows; ++j) {
                    const std::size_t i = k * nrows + j;
                    eta_min = std::min(eta_min, eta[i]);
                    if (j + 1 < nrows) {
                        dth = std::max(dth, std::abs(phi[i + 1] - phi[i]));
                        drh = std::max(drh, std::abs(eta[i + 1] - eta[i]));
                    }
                    if (k + 1 < n2) {
                        dth = std::max(dth, std::abs(phi[i + nrows] - phi[i]));
                        drh = std::max(drh, std::abs(eta[i + nrows] - eta[i]));
                    }
                }
            if (!(dth > 0.0) || !(drh > 0.0)) fail(ErrorKind::Config, "degenerate sample spacing");
            LatticeSpec& lat = sp.lattice;
            lat.dtheta = dth / opt.oversampling;
            lat.drho = drh / opt.oversampling;
            const double reach = kernel_reach(g, lat);
            const double guard = static_cast<double>(opt.guard);
            const double log_ar = std::log(g.a_r);
            const double p_theta = g.beta + reach + (4.0 + 2.0 * guard) * lat.dtheta;
            const double p_rho =
                std::max(-log_ar, -eta_min - std::log(std::cos(reach))) + (4.0 + 2.0 * guard) * lat.drho;
            const double n_theta_d = std::ceil(p_theta / lat.dtheta), n_rho_d = std::ceil(p_rho / lat.drho);
            if (n_theta_d * n_rho_d > static_cast<double>(opt.memory_budget))
                fail(ErrorKind::Config, "spacing rule unsatisfiable within memory budget");
            lat.n_theta = fft_friendly(static_cast<std::size_t>(n_theta_d));
            lat.n_rho = fft_friendly(static_cast<std::size_t>(n_rho_d));
            lat.theta0 = -g.beta / 2 - (2.0 + guard / 2) * lat.dtheta;
            lat.rho0 = std::min(log_ar, eta_min) - (2.0 + guard / 2) * lat.drho;
            lat.pad_theta = lat.n_theta - std::min(lat.n_theta, static_cast<std::size_t>(std::ceil(g.beta / lat.dtheta)));
            lat.pad_rho = lat.n_rho - std::min(lat.n_rho, static_cast<std::size_t>(std::ceil(-log_ar / lat.drho)));

            bytes += lat.size() * 8 + 3 * lat.n_theta * (lat.n_rho / 2 + 1) * 16 + ns * 28 + ntau * (ce - cb) * 28;
            if (bytes > opt.memory_budget) fail(ErrorKind::Config, "spacing rule unsatisfiable within memory budget");

            sp.window = window;
            sp.spectrum = precompute_zeta_hat(lat, reach, &window, zopt);
            sp.conv = LpConvolution(lat, sp.spectrum, window);
            sp.data_stencil = Stencil(lat, phi, eta);
            sp.data_weight.resize(ns);
            const double a2 = g.a * g.a * sp.frame.cs * sp.frame.cy;
            for (std::size_t k = 0; k < n2; ++k)
                for (std::size_t j = 0; j < nrows; ++j) {
                    const std::size_t i = k * nrows + j;
                    sp.data_weight[i] = psi[rb + j] * dt * wx[k] * a2 * 2.0 * t_of(rb + j) * std::exp(-eta[i]);
                }

            const std::size_t no = ntau * (ce - cb);
            std::vector<double> oth(no), orh(no);
            sp.out_weight.assign(no, 0.0);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t c = cb; c < ce; ++c) {
                const double q = scale_.q_to_unit(radon_.x2(c));
                const double kappa = sp.frame.kappa(q);
                const double th = g.alpha - std::atan(kappa);
                const double ct = std::cos(th), st = std::sin(th);
                const double fac = scale_.output_factor() / (sp.frame.cy * g.a * std::sqrt(1.0 + kappa * kappa));
                for (std::size_t i = 0; i < ntau; ++i) {
                    const std::size_t o = (c - cb) * ntau + i;
                    const double sigma = sp.frame.sigma(scale_.tau_to_unit(radon_.x1(i)));
                    const Vec2 p0 = map_T(g, sigma, 0.0);
                    const double er = p0.x * ct + p0.y * st;
                    if (sigma <= w && sigma + kappa * h >= 0.0 && er > 0.0) {
                        oth[o] = th;
                        orh[o] = std::log(er);
                        sp.out_weight[o] = fac;
                    } else {
                        oth[o] = orh[o] = nan;
                    }
                }
            }
            sp.out_stencil = Stencil(lat, oth, orh);
            splits_.push_back(std::move(sp));
        }
    }
    pool_->free.resize(splits_.size());
}

void OperatorPlan::apply_split(std::size_t s, const double* in, double* out, bool adjoint, ApplyStats* st) const {
    const SplitPlan& sp = splits_[s];
    const std::size_t nrows = sp.row_end - sp.row_begin, n1 = gather_.n1, n2 = gather_.n2, ntau = radon_.n1;
    auto t0 = Clock::now();
    auto ws = pool_->acquire(s, sp.lattice);
    double* lat = ws->real();
    std::fill(lat, lat + sp.lattice.size(), 0.0);
    if (!adjoint) {
        std::vector<double> w(sp.data_weight.size());
        for (std::size_t k = 0; k < n2; ++k)
            for (std::size_t j = 0; j < nrows; ++j)
                w[k * nrows + j] = in[k * n1 + sp.row_begin + j] * sp.data_weight[k * nrows + j];
        sp.data_stencil.smear(w.data(), lat);
        st->grid_seconds += seconds_since(t0);
        t0 = Clock::now();
        sp.conv.forward(*ws);
        st->conv_seconds += seconds_since(t0);
        t0 = Clock::now();
        sp.out_stencil.interpolate(lat, out);
        for (std::size_t o = 0; o < sp.out_weight.size(); ++o) out[o] *= sp.out_weight[o];
        st->interp_seconds += seconds_since(t0);
    } else {
        std::vector<double> v(sp.out_weight.size());
        for (std::size_t c = sp.col_begin; c < sp.col_end; ++c)
            for (std::size_t i = 0; i < ntau; ++i) {
                const std::size_t o = (c - sp.col_begin) * ntau + i;
                v[o] = in[c * ntau + i] * sp.out_weight[o];
            }
        st->grid_seconds += seconds_since(t0);
        t0 = Clock::now();
        sp.out_stencil.smear(v.data(), lat);
        st->interp_seconds += seconds_since(t0);
        t0 = Clock::now();
        sp.conv.adjoint(*ws);
        st->conv_seconds += seconds_since(t0);
        t0 = Clock::now();
        sp.data_stencil.interpolate(lat, out);
        for (std::size_t i = 0; i < sp.data_weight.size(); ++i) out[i] *= sp.data_weight[i];
        st->grid_seconds += seconds_since(t0);
    }
    st->samples += sp.data_weight.size();
    st->lattice_points += sp.lattice.size();
    st->splits += 1;
    pool_->release(s, std::move(ws));
}

namespace {

template <class Fn>
void run_splits(std::size_t n, int threads, Fn fn) {
    const std::size_t nt = static_cast<std::size_t>(std::max(1, threads));
    if (nt == 1 || n < 2) {
        for (std::size_t s = 0; s < n; ++s) fn(s);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex em;
    for (std::size_t t = 0; t < std::min(nt, n); ++t)
        pool.emplace_back([&] {
            for (std::size_t s; (s = next++) < n;) {
                try {
                    fn(s);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(em);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace

RadonImage OperatorPlan::forward(const CmpGather& f, ApplyStats* stats) const {
    const auto t0 = Clock::now();
    if (!(f.grid == gather_) || f.data.size() != gather_.size()) fail(ErrorKind::Config, "gather does not match plan grid");
    if (!f.finite()) fail(ErrorKind::Numerical, "non-finite input gather");
    const std::size_t n = splits_.size();
    std::vector<std::vector<double>> part(n);
    std::vector<ApplyStats> st(n);
    const double prep = seconds_since(t0);
    run_splits(n, opt_.threads, [&](std::size_t s) {
        part[s].assign(splits_[s].out_weight.size(), 0.0);
        apply_split(s, f.data.data(), part[s].data(), false, &st[s]);
    });
    const auto t1 = Clock::now();
    RadonImage out(radon_);
    for (std::size_t s = 0; s < n; ++s) {
        const SplitPlan& sp = splits_[s];
        double* dst = out.data.data() + sp.col_begin * radon_.n1;
        for (std::size_t o = 0; o < part[s].size(); ++o) dst[o] += part[s][o];
    }
    if (stats) {
        *stats = {};
        for (const auto& x : st) merge(*stats, x);
        stats->grid_seconds += prep;
        stats->interp_seconds += seconds_since(t1);
        stats->total_seconds = seconds_since(t0);
    }
    return out;
}

CmpGather OperatorPlan::adjoint(const RadonImage& g, ApplyStats* stats) const {
    const auto t0 = Clock::now();
    if (!(g.grid == radon_) || g.data.size() != radon_.size()) fail(ErrorKind::Config, "image does not match plan grid");
    if (!g.finite()) fail(ErrorKind::Numerical, "non-finite input image");
    const std::size_t n = splits_.size();
    std::vector<std::vector<double>> part(n);
    std::vector<ApplyStats> st(n);
    const double prep = seconds_since(t0);
    run_splits(n, opt_.threads, [&](std::size_t s) {
        part[s].assign(splits_[s].data_weight.size(), 0.0);
        apply_split(s, g.data.data(), part[s].data(), true, &st[s]);
    });
    const auto t1 = Clock::now();
    CmpGather out(gather_);
    for (std::size_t s = 0; s < n; ++s) {
        const SplitPlan& sp = splits_[s];
        const std::size_t nrows = sp.row_end - sp.row_begin;
        for (std::size_t k = 0; k < gather_.n2; ++k)
            for (std::size_t j = 0; j < nrows; ++j) out.data[k * gather_.n1 + sp.row_begin + j] += part[s][k * nrows + j];
    }
    if (stats) {
        *stats = {};
        for (const auto& x : st) merge(*stats, x);
        stats->interp_seconds += prep;
        stats->grid_seconds += seconds_since(t1);
        stats->total_seconds = seconds_since(t0);
    }
    return out;
}

RadonImage direct_forward(const CmpGather& f, const RegularGrid2& radon_grid) {
    f.grid.validate();
    radon_grid.validate();
    const RegularGrid2& gg = f.grid;
    const std::size_t n1 = gg.n1, ntau = radon_grid.n1;
    const std::vector<double> wx = trapezoid_weights(gg.n2, gg.d2);
    const double umax = static_cast<double>(n1 - 1) + 1e-9;
    std::vector<double> tau2(ntau);
    for (std::size_t i = 0; i < ntau; ++i) tau2[i] = radon_grid.x1(i) * radon_grid.x1(i);
    RadonImage out(radon_grid);
    double w[4];
    for (std::size_t j = 0; j < radon_grid.n2; ++j) {
        const double q = radon_grid.x2(j);
        double* col = out.trace(j);
        for (std::size_t k = 0; k < gg.n2; ++k) {
            const double c = q * q * gg.x2(k) * gg.x2(k);
            const double* tr = f.trace(k);
            for (std::size_t i = 0; i < ntau; ++i) {
                const double u = (std::sqrt(tau2[i] + c) - gg.o1) / gg.d1;
                if (!(u >= 0.0) || u > umax) continue;
                const long i0 = static_cast<long>(u);
                catmull_rom(u - static_cast<double>(i0), w);
                double acc = 0.0;
                for (int m = 0; m < 4; ++m) {
                    const long idx = i0 - 1 + m;
                    if (idx >= 0 && idx < static_cast<long>(n1)) acc += w[m] * tr[idx];
                }
                col[i] += wx[k] * acc;
            }
        }
    }
    return out;
}

CmpGather direct_adjoint(const RadonImage& g, const RegularGrid2& gather_grid) {
    g.grid.validate();
    gather_grid.validate();
    const RegularGrid2& gg = gather_grid;
    const RegularGrid2& rg = g.grid;
    const std::size_t n1 = gg.n1, ntau = rg.n1;
    const std::vector<double> wx = trapezoid_weights(gg.n2, gg.d2);
    const double umax = static_cast<double>(n1 - 1) + 1e-9;
    std::vector<double> tau2(ntau);
    for (std::size_t i = 0; i < ntau; ++i) tau2[i] = rg.x1(i) * rg.x1(i);
    CmpGather out(gather_grid);
    double w[4];
    for (std::size_t j = 0; j < rg.n2; ++j) {
        const double q = rg.x2(j);
        const double* col = g.trace(j);
        for (std::size_t k = 0; k < gg.n2; ++k) {
            const double c = q * q * gg.x2(k) * gg.x2(k);
            double* tr = out.trace(k);
            for (std::size_t i = 0; i < ntau; ++i) {
                const double u = (std::sqrt(tau2[i] + c) - gg.o1) / gg.d1;
                if (!(u >= 0.0) || u > umax) continue;
                const long i0 = static_cast<long>(u);
                catmull_rom(u - static_cast<double>(i0), w);
                const double v = wx[k] * col[i];
                for (int m = 0; m < 4; ++m) {
                    const long idx = i0 - 1 + m;
                    if (idx >= 0 && idx < static_cast<long>(n1)) tr[idx] += w[m] * v;
                }
            }
        }
    }
    return out;
}

double estimate_norm(const OperatorPlan& plan, int iters, std::uint64_t seed, std::vector<double>* history) {
    if (iters < 1) fail(ErrorKind::Config, "power iteration needs at least one iteration");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CmpGather x(plan.gather_grid());
    for (double& v : x.data) v = nd(rng);
    x.scale(1.0 / norm2(x));
    double est = 0.0;
    if (history) history->clear();
    for (int it = 0; it < iters; ++it) {
        const RadonImage y = plan.forward(x);
        CmpGather z = plan.adjoint(y);
        est = std::sqrt(std::max(0.0, dot(x, z)));
        if (history) history->push_back(est);
        const double nz = norm2(z);
        if (!(nz > 0.0)) break;
        z.scale(1.0 / nz);
        x = std::move(z);
    }
    return est;
}

}  // namespace hrt
