#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "hrt/io.hpp"
#include "hrt/lpconv.hpp"
#include "hrt/operators.hpp"
#include "hrt/sparse.hpp"
#include "hrt/synth.hpp"
#include "oracles.hpp"

using namespace hrt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d %-22s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d, e, g);
    return buf;
}

RegularGrid2 square_radon(std::size_t n) {
    RegularGrid2 r;
    r.n1 = r.n2 = n;
    r.o1 = 0.1;
    r.d1 = 0.9 / static_cast<double>(n - 1);
    r.o2 = 0.05;
    r.d2 = 0.95 / static_cast<double>(n - 1);
    return r;
}

template <class F>
F randn(const RegularGrid2& g, std::uint64_t seed) {
    F f(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (double& v : f.data) v = nd(rng);
    return f;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

void adjointness() {
    double worst = 0.0, slowest = 0.0;
    for (std::size_t n : {64, 128, 256})
        for (int s : {0, 1}) {
            const auto t0 = Clock::now();
            PlanOptions opt;
            opt.n_splits_t = opt.n_splits_q = s;
            const OperatorPlan plan(unit_grid(n, n), square_radon(n), opt);
            const auto x = randn<CmpGather>(plan.gather_grid(), 11 * n + static_cast<std::size_t>(s));
            const auto y = randn<RadonImage>(plan.radon_grid(), 13 * n + static_cast<std::size_t>(s));
            const RadonImage rx = plan.forward(x);
            const CmpGather ry = plan.adjoint(y);
            worst = std::max(worst, std::abs(dot(rx, y) - dot(x, ry)) / (norm2(rx) * norm2(y)));
            slowest = std::max(slowest, since(t0));
        }
    report(1, "adjointness", worst <= 1e-10 && slowest < 10.0,
           fmt("max rel dot discrepancy %.2e (<= 1e-10), slowest case %.2f s (< 10 s)", worst, slowest));
}

struct OracleRun {
    double err = 0.0, tau = 0.0, q = 0.0;
};

OracleRun oracle_error(const ReferenceCase& rc, const CmpGather& f, const RadonImage& d, int nt) {
    PlanOptions opt;
    opt.n_splits_t = nt;
    opt.n_splits_q = 1;
    const OperatorPlan plan(rc.gather, rc.radon, opt);
    const RadonImage r = plan.forward(f);
    OracleRun o;
    std::size_t bi = 0, bj = 0;
    for (std::size_t j = 0; j < r.grid.n2; ++j)
        for (std::size_t i = 0; i < r.grid.n1; ++i) {
            const double e = std::abs(r(i, j) - d(i, j));
            if (e > o.err) {
                o.err = e;
                bi = i;
                bj = j;
            }
        }
    o.err /= d.max_abs();
    o.tau = r.grid.x1(bi);
    o.q = r.grid.x2(bj);
    return o;
}

void oracle_accuracy() {
    const auto t0 = Clock::now();
    const ReferenceCase rc = reference_case(512);
    const CmpGather f = synth_gather(rc.gather, rc.events);
    const RadonImage d = direct_forward(f, rc.radon);
    const OracleRun a = oracle_error(rc, f, d, 1);
    const double secs = since(t0);
    const OracleRun b = oracle_error(rc, f, d, 2);
    const double tau_mid = 0.5 * (rc.radon.o1 + rc.radon.end1()), q_mid = 0.5 * (rc.radon.o2 + rc.radon.end2());
    const bool where = a.tau < tau_mid && a.q > q_mid;
    report(2, "oracle accuracy", a.err <= 5e-3 && where && b.err < a.err && secs < 60.0,
           fmt("max err %.3e (<= 5e-3) at tau %.3f s, q %.3f; one more t-split %.3e; %.1f s", a.err, a.tau, a.q, b.err,
               secs));
}

void complexity() {
    std::vector<double> fwd;
    for (std::size_t n : {512, 1024, 2048}) {
        const ReferenceCase rc = reference_case(n);
        const CmpGather f = synth_gather(rc.gather, rc.events);
        const OperatorPlan plan(rc.gather, rc.radon);
        plan.forward(f);
        std::vector<double> t;
        for (int k = 0; k < 5; ++k) {
            const auto t0 = Clock::now();
            plan.forward(f);
            t.push_back(since(t0));
        }
        fwd.push_back(median(t));
    }
    std::vector<double> dir;
    for (std::size_t n : {512, 1024}) {
        const ReferenceCase rc = reference_case(n);
        const CmpGather f = synth_gather(rc.gather, rc.events);
        std::vector<double> t;
        for (int k = 0; k < (n == 512 ? 3 : 1); ++k) {
            const auto t0 = Clock::now();
            direct_forward(f, rc.radon);
            t.push_back(since(t0));
        }
        dir.push_back(median(t));
    }
    const double r1 = fwd[1] / fwd[0], r2 = fwd[2] / fwd[1], rd = dir[1] / dir[0], speed = dir[0] / fwd[0];
    const bool ok = r1 >= 3.3 && r1 <= 5.5 && r2 >= 3.3 && r2 <= 5.5 && rd >= 6.5 && speed >= 10.0;
    report(3, "complexity", ok,
           fmt("forward ratios %.2f, %.2f (in [3.3, 5.5]); direct ratio %.2f (>= 6.5); speed-up at 512 %.1fx (>= 10)", r1,
               r2, rd, speed));
}

void kernel_spectrum() {
    LatticeSpec lat;
    lat.n_theta = lat.n_rho = 64;
    lat.dtheta = 0.03;
    lat.drho = 0.05;
    lat.theta0 = -0.96;
    lat.rho0 = -1.6;
    const double reach = 0.6;
    const KernelSpectrum ks = precompute_zeta_hat(lat, reach, nullptr);
    const double ridge = oracle::ridge_mismatch(ks, lat, 8, 8);
    const double origin = std::abs(ks.at(0, 0) - zeta_hat_origin(reach));
    report(4, "kernel spectrum", ridge <= 1e-3 && origin <= 1e-9,
           fmt("ridge mismatch %.2e (<= 1e-3); zeta_hat(0,0) off by %.1e (<= 1e-9)", ridge, origin));
}

void ista_properties() {
    bool table = soft_threshold(3.0, 2.0) == 2.0 && soft_threshold(0.5, 2.0) == 0.0 && soft_threshold(-3.0, 2.0) == -2.0;

    const ReferenceCase rc = reference_case(256);
    const OperatorPlan plan(rc.gather, rc.radon);
    IstaConfig cfg;
    cfg.n_iters = 30;
    bool mono = true;
    try {
        const IstaResult r = ista(plan, synth_gather(rc.gather, rc.events), cfg);
        for (std::size_t k = 1; k < r.trace.objective.size(); ++k)
            mono = mono && r.trace.objective[k] <= r.trace.objective[k - 1] * (1.0 + 1e-9);
    } catch (const Error&) {
        mono = false;
    }

    // tiny full-rank problem against dense normal equations
    const std::size_t n = 32;
    RegularGrid2 rg;
    rg.n1 = 12;
    rg.n2 = 4;
    rg.o1 = 0.1;
    rg.d1 = 0.9 / 11.0;
    rg.o2 = 0.05;
    rg.d2 = 0.95 / 3.0;
    const OperatorPlan small(unit_grid(n, n), rg);
    const CmpGather f = synth_gather(unit_grid(n, n), {{0.3, 0.4, 1.0, 3.0}, {0.6, 0.7, -0.6, 3.0}});
    IstaConfig lw;
    lw.mu = 0.0;
    lw.n_iters = 200;
    const double res = ista(small, f, lw).trace.residual.back();
    const std::size_t m = n * n, k = rg.n1 * rg.n2;
    std::vector<double> B(m * k);
    RadonImage e(rg);
    for (std::size_t c = 0; c < k; ++c) {
        e.data.assign(k, 0.0);
        e.data[c] = 1.0;
        const CmpGather col = small.adjoint(e);
        for (std::size_t i = 0; i < m; ++i) B[i * k + c] = col.data[i];
    }
    // normal equations by Cholesky
    std::vector<double> A(k * k, 0.0), rhs(k, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < k; ++a) {
            rhs[a] += B[i * k + a] * f.data[i];
            for (std::size_t b = 0; b < k; ++b) A[a * k + b] += B[i * k + a] * B[i * k + b];
        }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t p = 0; p < j; ++p) A[j * k + j] -= A[j * k + p] * A[j * k + p];
        A[j * k + j] = std::sqrt(A[j * k + j]);
        for (std::size_t i = j + 1; i < k; ++i) {
            for (std::size_t p = 0; p < j; ++p) A[i * k + j] -= A[i * k + p] * A[j * k + p];
            A[i * k + j] /= A[j * k + j];
        }
    }
    std::vector<double> g(rhs);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t p = 0; p < i; ++p) g[i] -= A[i * k + p] * g[p];
        g[i] /= A[i * k + i];
    }
    for (std::size_t i = k; i-- > 0;) {
        for (std::size_t p = i + 1; p < k; ++p) g[i] -= A[p * k + i] * g[p];
        g[i] /= A[i * k + i];
    }
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double v = -f.data[i];
        for (std::size_t c = 0; c < k; ++c) v += B[i * k + c] * g[c];
        best += v * v;
    }
    best = std::sqrt(best);
    const double gap = res / best - 1.0;
    report(5, "ista properties", table && mono && gap <= 0.02 && gap >= -1e-9,
           std::string("threshold table ") + (table ? "exact" : "WRONG") + ", objective " +
               (mono ? "nonincreasing" : "INCREASED") + fmt(", Landweber residual %.4f vs least squares %.4f (gap %.2f%%)", res, best, 100 * gap));
}

void interpolation() {
    const ReferenceCase rc = reference_case(512);
    const CmpGather f = synth_gather(rc.gather, rc.events);
    const OperatorPlan plan(rc.gather, rc.radon);

    IstaConfig cfg;
    cfg.n_iters = 30;
    cfg.mask = make_mask(rc.gather, {0.5, 7, MaskPattern::RandomTraces});
    const CmpGather rec = plan.adjoint(ista_masked(plan, f, cfg).g);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < rc.gather.n2; ++k)
        if (!cfg.mask[k])
            for (std::size_t i = 0; i < rc.gather.n1; ++i) {
                num += (rec(i, k) - f(i, k)) * (rec(i, k) - f(i, k));
                den += f(i, k) * f(i, k);
            }
    const double err50 = std::sqrt(num / den);

    cfg.mask = make_mask(rc.gather, {0.9, 7, MaskPattern::RandomTraces});
    const CmpGather rec90 = plan.adjoint(ista_masked(plan, f, cfg).g);
    const EventSpec& ev = *std::max_element(rc.events.begin(), rc.events.end(),
                                            [](const EventSpec& a, const EventSpec& b) { return std::abs(a.amplitude) < std::abs(b.amplitude); });
    const double dt = rc.gather.d1;
    const long half = std::lround(1.0 / (ev.freq * dt));  // one period either side
    std::size_t hit = 0, masked = 0;
    for (std::size_t k = 0; k < rc.gather.n2; ++k) {
        if (cfg.mask[k]) continue;
        const double x = rc.gather.x2(k);
        const double t = std::sqrt(ev.tau0 * ev.tau0 + ev.q0 * ev.q0 * x * x);
        const long c = std::lround(t / dt);
        if (c + half >= static_cast<long>(rc.gather.n1)) continue;
        ++masked;
        long best = c - half;
        for (long i = c - half; i <= c + half; ++i)
            if (ev.amplitude * rec90(static_cast<std::size_t>(i), k) > ev.amplitude * rec90(static_cast<std::size_t>(best), k)) best = i;
        if (std::abs(static_cast<double>(best) - t / dt) <= 2.0) ++hit;
    }
    const double frac = static_cast<double>(hit) / static_cast<double>(masked);
    report(6, "interpolation", err50 <= 0.2 && frac >= 0.8,
           fmt("50%% missing: masked-trace error %.3f (<= 0.2); 90%% missing: %.0f%% of masked traces on the hyperbola (>= 80%%)",
               err50, 100 * frac));
}

void demultiple() {
    const ReferenceCase rc = reference_case(512);
    const double fr = rc.events.front().freq;
    const std::vector<EventSpec> prim = {{0.25, 0.30, 1.0, fr}, {0.55, 0.35, 0.7, fr}};
    const std::vector<EventSpec> mult = {{0.50, 0.75, -0.6, fr}, {0.75, 0.80, 0.5, fr}};
    CmpGather f = synth_gather(rc.gather, prim);
    f.axpy(1.0, synth_gather(rc.gather, mult));
    const OperatorPlan plan(rc.gather, rc.radon);
    IstaConfig cfg;
    cfg.n_iters = 30;
    const IstaResult r = ista(plan, f, cfg);
    const auto parts = mute_and_split(r.g, {{0.5}, {0.55}});
    CmpGather out = f;
    out.axpy(-1.0, plan.adjoint(parts.second));

    // bands: within 0.6 periods of one family's hyperbolas and clear of the other's
    const double hw = 0.6 / fr;
    double before[2] = {0.0, 0.0}, after[2] = {0.0, 0.0};
    auto near = [&](const std::vector<EventSpec>& ev, double t, double x) {
        for (const EventSpec& e : ev)
            if (std::abs(t - std::sqrt(e.tau0 * e.tau0 + e.q0 * e.q0 * x * x)) < hw) return true;
        return false;
    };
    for (std::size_t k = 0; k < rc.gather.n2; ++k)
        for (std::size_t i = 0; i < rc.gather.n1; ++i) {
            const double t = rc.gather.x1(i), x = rc.gather.x2(k);
            const bool p = near(prim, t, x), m = near(mult, t, x);
            if (p == m) continue;
            before[m] += f(i, k) * f(i, k);
            after[m] += out(i, k) * out(i, k);
        }
    const double dm = 10.0 * std::log10(before[1] / after[1]), dp = 10.0 * std::log10(after[0] / before[0]);
    report(7, "demultiple", dm >= 10.0 && std::abs(dp) <= 1.0,
           fmt("multiple band down %.2f dB (>= 10); primary band changed %+.2f dB (within 1)", dm, dp));
}

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string(HRT_CLI_PATH) + " " + args + " >" + (dir / "out.txt").string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void plumbing() {
    const fs::path dir = fs::temp_directory_path() / ("hrt_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    const ReferenceCase rc = reference_case(128);

    const CmpGather a = synth_gather(rc.gather, rc.events, 0.05, 99), b = synth_gather(rc.gather, rc.events, 0.05, 99);
    const bool regen = a.data == b.data;

    Field2 f32 = a;
    for (double& v : f32.data) v = static_cast<float>(v);
    write_rsg((dir / "a.rsg").string(), f32);
    const Field2 back = read_rsg((dir / "a.rsg").string());
    write_rsg((dir / "b.rsg").string(), back);
    const bool rsg = back.data == f32.data && back.grid == f32.grid && bytes(dir / "a.rsg") == bytes(dir / "b.rsg");

    std::ofstream(dir / "ev.txt") << "0.2 0.6 1.0 10\n";
    std::ofstream(dir / "bad.txt") << "0.2 0.6\n";
    std::ofstream(dir / "junk.rsg") << "garbage";
    const std::string g = (dir / "g.rsg").string(), grid = " --nt 64 --dt 0.008 --nx 48 --dx 0.01";
    struct Case {
        std::string args;
        int code;
    };
    const std::vector<Case> cases = {
        {"--help", 0},
        {"synth --spec " + (dir / "ev.txt").string() + " -o " + g + grid, 0},
        {"forward -i " + g + " -o " + (dir / "r.rsg").string(), 0},
        {"", 2},
        {"nonsense", 2},
        {"forward -i " + g, 2},
        {"forward -i " + g + " -o " + (dir / "x.rsg").string() + " --method fast", 2},
        {"forward -i " + g + " -o " + (dir / "x.rsg").string() + " --splits-q 99", 2},
        {"forward -i " + g + " -o " + (dir / "x.rsg").string() + " --qmin 0.9 --qmax 0.1", 2},
        {"--threads 0 forward -i " + g + " -o " + (dir / "x.rsg").string(), 2},
        {"interpolate -i " + g + " -o " + (dir / "x").string() + " --missing 2", 2},
        {"forward -i " + (dir / "none.rsg").string() + " -o " + (dir / "x.rsg").string(), 3},
        {"forward -i " + (dir / "junk.rsg").string() + " -o " + (dir / "x.rsg").string(), 3},
        {"synth --spec " + (dir / "bad.txt").string() + " -o " + (dir / "x.rsg").string() + grid, 3},
    };
    std::size_t good = 0;
    std::string wrong;
    for (const Case& c : cases) {
        const int code = run_cli(c.args, dir);
        if (code == c.code) ++good;
        else wrong += " [" + c.args.substr(0, c.args.find(' ')) + " -> " + std::to_string(code) + "]";
    }
    const bool untouched = !fs::exists(dir / "x.rsg") && !fs::exists(dir / "x.recon.rsg");
    fs::remove_all(dir);
    const bool cli = good == cases.size() && untouched;
    report(8, "plumbing", rsg && regen && cli,
           std::string("rsg round trip ") + (rsg ? "bit-exact" : "DIFFERS") + ", synthetic regeneration " +
               (regen ? "bit-exact" : "DIFFERS") + ", cli exit codes " + std::to_string(good) + "/" +
               std::to_string(cases.size()) + (untouched ? "" : ", failed runs left output") + wrong);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::function<void()>> all = {adjointness,  oracle_accuracy, complexity, kernel_spectrum,
                                              ista_properties, interpolation, demultiple, plumbing};
    std::vector<int> pick;
    bool strict = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--strict") strict = true;
        else pick.push_back(std::atoi(argv[i]));
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!pick.empty() && std::find(pick.begin(), pick.end(), static_cast<int>(i + 1)) == pick.end()) continue;
        try {
            all[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), "(exception)", false, e.what());
        }
    }
    std::printf("%d criteria failed\n", failures);
    return strict && failures ? 1 : 0;
}
