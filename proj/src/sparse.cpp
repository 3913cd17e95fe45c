#include "hrt/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace hrt {

double soft_threshold(double v, double mu) {
    if (!(mu >= 0.0)) fail(ErrorKind::Config, "soft threshold needs mu >= 0");
    const double h = 0.5 * mu;
    if (v >= h) return v - h;
    if (v <= -h) return v + h;
    return 0.0;
}

void soft_threshold(Field2& f, double mu) {
    if (!(mu >= 0.0)) fail(ErrorKind::Config, "soft threshold needs mu >= 0");
    for (double& v : f.data) v = soft_threshold(v, mu);
}

namespace {

void apply_mask(CmpGather& f, const std::vector<unsigned char>& mask) {
    if (mask.empty()) return;
    for (std::size_t k = 0; k < f.grid.n2; ++k)
        if (!mask[k]) std::fill(f.trace(k), f.trace(k) + f.grid.n1, 0.0);
}

double l1(const Field2& g) {
    double s = 0.0;
    for (double v : g.data) s += std::abs(v);
    return s;
}

std::size_t nonzeros(const Field2& g) {
    return static_cast<std::size_t>(std::count_if(g.data.begin(), g.data.end(), [](double v) { return v != 0.0; }));
}

IstaResult run(const OperatorPlan& plan, const CmpGather& f_in, const IstaConfig& cfg) {
    if (cfg.n_iters < 1) fail(ErrorKind::Config, "ISTA needs at least one iteration");
    if (!cfg.mask.empty()) {
        if (cfg.mask.size() != plan.gather_grid().n2) fail(ErrorKind::Config, "mask does not match gather traces");
        if (std::none_of(cfg.mask.begin(), cfg.mask.end(), [](unsigned char m) { return m != 0; }))
            fail(ErrorKind::Config, "mask has no live traces");
    }
    CmpGather f = f_in;
    apply_mask(f, cfg.mask);

    IstaResult res;
    IstaTrace& tr = res.trace;
    double c = cfg.c;
    if (c <= 0.0) {
        const double nrm = estimate_norm(plan, cfg.norm_iters, cfg.seed);
        if (!(nrm > 0.0)) fail(ErrorKind::Numerical, "operator norm estimate is zero");
        c = 0.95 / nrm;
    }
    const RadonImage rf = plan.forward(f);
    double mu = cfg.mu;
    if (mu < 0.0) mu = cfg.mu_scale * 0.05 * rf.max_abs();
    tr.mu = mu;
    tr.c = c;
    const double step = c * c;

    RadonImage g(plan.radon_grid());
    // Residual f - chi R* g for the current g.
    auto residual = [&](const RadonImage& gg) {
        CmpGather r = plan.adjoint(gg);
        apply_mask(r, cfg.mask);
        r.scale(-1.0);
        r.axpy(1.0, f);
        return r;
    };
    CmpGather r = f;
    auto record = [&](const RadonImage& gg, const CmpGather& rr) {
        const double rn = norm2(rr);
        tr.residual.push_back(rn);
        tr.objective.push_back(rn * rn + mu * l1(gg));
        tr.nonzeros.push_back(nonzeros(gg));
    };
    record(g, r);
    for (int it = 0; it < cfg.n_iters; ++it) {
        RadonImage upd = plan.forward(r);
        g.axpy(step, upd);
        soft_threshold(g, step * mu);
        r = residual(g);
        record(g, r);
        const double prev = tr.objective[tr.objective.size() - 2], cur = tr.objective.back();
        if (!std::isfinite(cur)) fail(ErrorKind::Numerical, "ISTA objective is not finite");
        if (cur > prev + 1e-9 * std::max(std::abs(prev), 1e-300))
            fail(ErrorKind::Numerical, "ISTA objective increased: step size too large or adjoint inconsistent");
        if (cfg.early_stop > 0.0 && prev - cur <= cfg.early_stop * std::abs(prev)) break;
    }
    res.g = std::move(g);
    return res;
}

}  // namespace

IstaResult ista(const OperatorPlan& plan, const CmpGather& f, const IstaConfig& cfg) { return run(plan, f, cfg); }

IstaResult ista_masked(const OperatorPlan& plan, const CmpGather& f, const IstaConfig& cfg) {
    if (cfg.mask.empty()) fail(ErrorKind::Config, "masked ISTA needs a mask");
    return run(plan, f, cfg);
}

std::pair<RadonImage, RadonImage> mute_and_split(const RadonImage& g, const Polyline& b) {
    if (b.tau.empty() || b.tau.size() != b.q.size()) fail(ErrorKind::Config, "mute boundary is empty or ragged");
    for (std::size_t i = 0; i < b.tau.size(); ++i) {
        if (!std::isfinite(b.tau[i]) || !std::isfinite(b.q[i])) fail(ErrorKind::Config, "mute boundary not finite");
        if (i > 0 && !(b.tau[i] > b.tau[i - 1])) fail(ErrorKind::Config, "mute boundary tau must increase strictly");
    }
    if (b.tau.back() < g.grid.o1 || b.tau.front() > g.grid.end1())
        fail(ErrorKind::Config, "mute boundary outside the Radon grid");
    RadonImage prim(g.grid), mult(g.grid);
    for (std::size_t i = 0; i < g.grid.n1; ++i) {
        const double tau = g.grid.x1(i);
        double qb;
        if (tau <= b.tau.front()) {
            qb = b.q.front();
        } else if (tau >= b.tau.back()) {
            qb = b.q.back();
        } else {
            const std::size_t k = static_cast<std::size_t>(std::upper_bound(b.tau.begin(), b.tau.end(), tau) - b.tau.begin());
            const double w = (tau - b.tau[k - 1]) / (b.tau[k] - b.tau[k - 1]);
            qb = b.q[k - 1] + w * (b.q[k] - b.q[k - 1]);
        }
        for (std::size_t j = 0; j < g.grid.n2; ++j) (g.grid.x2(j) < qb ? prim : mult)(i, j) = g(i, j);
    }
    return {std::move(prim), std::move(mult)};
}

}  // namespace hrt
