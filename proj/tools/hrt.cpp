#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "hrt/io.hpp"
#include "hrt/operators.hpp"
#include "hrt/sparse.hpp"
#include "hrt/synth.hpp"

using namespace hrt;

namespace {

struct TransformOpts {
    std::size_t ntau = 0, nq = 0;
    double taumin = -1.0, qmin = -1.0, qmax = -1.0;
    int splits_t = 1, splits_q = 1;
    double window = 0.16;
    std::string cache_dir;
    bool stats = false;
};

struct IstaOpts {
    double mu = -1.0, mu_scale = 1.0, c = 0.0;
    int iters = 30;
    std::uint64_t seed = 1;
};

int g_threads = 0;

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

Field2 load(const std::string& path) { return ends_with(path, ".csv") ? read_csv_gather(path) : read_rsg(path); }

void save(const std::string& path, const Field2& f) {
    if (ends_with(path, ".csv"))
        write_csv_gather(path, f);
    else
        write_rsg(path, f);
}

void add_transform(CLI::App* c, TransformOpts& o) {
    c->add_option("--ntau", o.ntau, "Intercept samples (default: time samples)")->check(CLI::Range(2, 1 << 20));
    c->add_option("--nq", o.nq, "Slowness samples (default: traces)")->check(CLI::Range(2, 1 << 20));
    c->add_option("--taumin", o.taumin, "First intercept, s (default 0.1 T)")->check(CLI::PositiveNumber);
    c->add_option("--qmin", o.qmin, "First slowness, s/km (default 0.05 T/X)")->check(CLI::PositiveNumber);
    c->add_option("--qmax", o.qmax, "Last slowness, s/km (default T/X)")->check(CLI::PositiveNumber);
    c->add_option("--splits-t", o.splits_t, "Extra splits of the time range")->check(CLI::Range(0, 16));
    c->add_option("--splits-q", o.splits_q, "Extra splits of the slowness range")->check(CLI::Range(0, 16));
    c->add_option("--window-threshold", o.window, "Spectral window threshold on |B3hat|")->check(CLI::Range(1e-6, 1.0));
    c->add_option("--cache-dir", o.cache_dir, "Kernel spectrum cache directory");
    c->add_flag("--stats", o.stats, "Per-stage timing as CSV on stderr");
}

void add_ista(CLI::App* c, IstaOpts& o) {
    c->add_option("--mu", o.mu, "Sparsity weight (default 0.05 max|R f|)")->check(CLI::NonNegativeNumber);
    c->add_option("--mu-scale", o.mu_scale, "Multiplier on the default mu")->check(CLI::PositiveNumber);
    c->add_option("--c", o.c, "Step scaling (default 0.95/|R|)")->check(CLI::PositiveNumber);
    c->add_option("--iters", o.iters, "Iterations")->check(CLI::Range(1, 100000));
    c->add_option("--seed", o.seed, "Seed for the norm estimate");
}

RegularGrid2 radon_grid_for(const RegularGrid2& g, const TransformOpts& o) {
    const double T = g.end1(), X = g.end2();
    RegularGrid2 r;
    r.n1 = o.ntau ? o.ntau : g.n1;
    r.n2 = o.nq ? o.nq : g.n2;
    r.o1 = o.taumin > 0 ? o.taumin : 0.1 * T;
    const double qmin = o.qmin > 0 ? o.qmin : 0.05 * T / X, qmax = o.qmax > 0 ? o.qmax : T / X;
    if (!(r.o1 < T)) fail(ErrorKind::Config, "--taumin must be below the last time sample");
    if (!(qmax > qmin)) fail(ErrorKind::Config, "--qmax must exceed --qmin");
    r.d1 = (T - r.o1) / static_cast<double>(r.n1 - 1);
    r.o2 = qmin;
    r.d2 = (qmax - qmin) / static_cast<double>(r.n2 - 1);
    return r;
}

PlanOptions plan_options(const TransformOpts& o) {
    PlanOptions p;
    p.n_splits_t = o.splits_t;
    p.n_splits_q = o.splits_q;
    p.window_threshold = o.window;
    p.cache_dir = o.cache_dir;
    p.threads = g_threads;
    return p;
}

IstaConfig ista_config(const IstaOpts& o) {
    IstaConfig c;
    c.mu = o.mu;
    c.mu_scale = o.mu_scale;
    c.c = o.c;
    c.n_iters = o.iters;
    c.seed = o.seed;
    return c;
}

void print_stats(const ApplyStats& s) {
    std::fprintf(stderr, "stage,seconds\ngrid,%.6f\nconv,%.6f\ninterp,%.6f\ntotal,%.6f\n", s.grid_seconds, s.conv_seconds,
                 s.interp_seconds, s.total_seconds);
    std::fprintf(stderr, "splits,%zu\nsamples,%zu\nlattice_points,%zu\n", s.splits, s.samples, s.lattice_points);
}

double seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run(int argc, char** argv) {
    CLI::App app{"Fast hyperbolic Radon transform via log-polar convolution"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--threads", g_threads, "Worker threads (default: hardware)")->check(CLI::Range(1, 1024));

    // forward
    std::string in, out, method = "logpolar";
    TransformOpts tf;
    auto* fwd = app.add_subcommand("forward", "Gather -> Radon panel");
    fwd->add_option("-i,--input", in, "Gather (.rsg or .csv)")->required();
    fwd->add_option("-o,--output", out, "Radon panel (.rsg)")->required();
    fwd->add_option("--method", method, "logpolar or direct")->check(CLI::IsMember({"logpolar", "direct"}));
    add_transform(fwd, tf);

    // adjoint
    std::string like;
    std::size_t nt = 0, nx = 0;
    double dt = 0.0, dx = 0.0;
    auto* adj = app.add_subcommand("adjoint", "Radon panel -> gather");
    adj->add_option("-i,--input", in, "Radon panel (.rsg)")->required();
    adj->add_option("-o,--output", out, "Gather (.rsg or .csv)")->required();
    adj->add_option("--method", method, "logpolar or direct")->check(CLI::IsMember({"logpolar", "direct"}));
    adj->add_option("--like", like, "Take the gather grid from this file");
    adj->add_option("--nt", nt, "Time samples")->check(CLI::Range(2, 1 << 20));
    adj->add_option("--dt", dt, "Time step, s")->check(CLI::PositiveNumber);
    adj->add_option("--nx", nx, "Traces")->check(CLI::Range(2, 1 << 20));
    adj->add_option("--dx", dx, "Offset step, km")->check(CLI::PositiveNumber);
    adj->add_option("--splits-t", tf.splits_t)->check(CLI::Range(0, 16));
    adj->add_option("--splits-q", tf.splits_q)->check(CLI::Range(0, 16));
    adj->add_option("--window-threshold", tf.window)->check(CLI::Range(1e-6, 1.0));
    adj->add_option("--cache-dir", tf.cache_dir);
    adj->add_flag("--stats", tf.stats);

    // compare
    std::string ref;
    auto* cmp = app.add_subcommand("compare", "Normalized max deviation max|a-b|/max|b|");
    cmp->add_option("a", in, "Test panel")->required();
    cmp->add_option("b", ref, "Reference panel")->required();

    // dottest
    std::size_t dn = 128;
    std::uint64_t seed = 1;
    auto* dot_cmd = app.add_subcommand("dottest", "Adjoint consistency of the log-polar operator");
    dot_cmd->add_option("-n,--size", dn, "Panel size N")->check(CLI::Range(16, 4096));
    dot_cmd->add_option("--seed", seed);
    dot_cmd->add_option("--splits-t", tf.splits_t)->check(CLI::Range(0, 16));
    dot_cmd->add_option("--splits-q", tf.splits_q)->check(CLI::Range(0, 16));

    // demultiple
    std::string mute, prefix;
    IstaOpts io;
    auto* dem = app.add_subcommand("demultiple", "Sparse Radon panel, mute, subtract modeled multiples");
    dem->add_option("-i,--input", in, "Gather")->required();
    dem->add_option("--mute", mute, "Boundary polyline, 'tau q' per line")->required()->check(CLI::ExistingFile);
    dem->add_option("-o,--prefix", prefix, "Output prefix")->required();
    add_transform(dem, tf);
    add_ista(dem, io);

    // interpolate
    std::string mask_path, truth;
    double missing = -1.0;
    std::uint64_t mask_seed = 1;
    std::string pattern = "random";
    auto* itp = app.add_subcommand("interpolate", "Reconstruct missing traces");
    itp->add_option("-i,--input", in, "Gather")->required();
    itp->add_option("-o,--prefix", prefix, "Output prefix")->required();
    auto* mopt = itp->add_option("--mask", mask_path, "Live-trace flags, one 0/1 per line")->check(CLI::ExistingFile);
    itp->add_option("--missing", missing, "Kill this fraction of traces")->check(CLI::Range(0.0, 0.999))->excludes(mopt);
    itp->add_option("--mask-seed", mask_seed);
    itp->add_option("--pattern", pattern)->check(CLI::IsMember({"random", "regular"}));
    itp->add_option("--truth", truth, "Complete gather for error reporting")->check(CLI::ExistingFile);
    add_transform(itp, tf);
    add_ista(itp, io);

    // bench
    std::vector<std::size_t> sizes{512, 1024};
    int repeats = 3;
    std::size_t direct_max = 1024;
    auto* bench = app.add_subcommand("bench", "Timing table N,method,seconds,ratio_vs_direct");
    bench->add_option("--sizes", sizes, "Panel sizes")->delimiter(',')->check(CLI::Range(16, 8192));
    bench->add_option("--repeats", repeats)->check(CLI::Range(1, 100));
    bench->add_option("--direct-max", direct_max, "Largest N timed with direct summation");
    bench->add_option("-o,--output", out, "CSV file (default stdout)");

    // synth
    std::string spec;
    double noise = 0.0;
    auto* syn = app.add_subcommand("synth", "Synthetic gather from an event list");
    syn->add_option("--spec", spec, "Event file: 'tau0 q0 amp freq [ricker|gauss]' per line")->required()->check(CLI::ExistingFile);
    syn->add_option("-o,--output", out)->required();
    syn->add_option("--nt", nt)->required()->check(CLI::Range(2, 1 << 20));
    syn->add_option("--dt", dt)->required()->check(CLI::PositiveNumber);
    syn->add_option("--nx", nx)->required()->check(CLI::Range(2, 1 << 20));
    syn->add_option("--dx", dx)->required()->check(CLI::PositiveNumber);
    syn->add_option("--noise", noise, "Noise rms")->check(CLI::NonNegativeNumber);
    syn->add_option("--seed", seed);

    // render
    double clip = 99.0;
    auto* ren = app.add_subcommand("render", "16-bit PGM image");
    ren->add_option("-i,--input", in)->required();
    ren->add_option("-o,--output", out)->required();
    ren->add_option("--clip", clip, "Clip percentile of |data|")->check(CLI::Range(50.000001, 100.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (g_threads <= 0) g_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    if (*fwd) {
        const Field2 f = load(in);
        const RegularGrid2 rg = radon_grid_for(f.grid, tf);
        RadonImage r;
        if (method == "direct") {
            const auto t0 = std::chrono::steady_clock::now();
            r = direct_forward(f, rg);
            if (tf.stats) std::fprintf(stderr, "stage,seconds\ntotal,%.6f\n", seconds(t0));
        } else {
            OperatorPlan plan(f.grid, rg, plan_options(tf));
            ApplyStats st;
            r = plan.forward(f, &st);
            if (tf.stats) print_stats(st);
        }
        save(out, r);
        return 0;
    }
    if (*adj) {
        const Field2 g = load(in);
        RegularGrid2 gg;
        if (!like.empty()) {
            gg = load(like).grid;
        } else {
            if (!nt || !nx || dt <= 0 || dx <= 0) fail(ErrorKind::Config, "adjoint needs --like or all of --nt --dt --nx --dx");
            gg.n1 = nt;
            gg.n2 = nx;
            gg.o1 = gg.o2 = 0.0;
            gg.d1 = dt;
            gg.d2 = dx;
        }
        CmpGather f;
        if (method == "direct") {
            f = direct_adjoint(g, gg);
        } else {
            OperatorPlan plan(gg, g.grid, plan_options(tf));
            ApplyStats st;
            f = plan.adjoint(g, &st);
            if (tf.stats) print_stats(st);
        }
        save(out, f);
        return 0;
    }
    if (*cmp) {
        const Field2 a = load(in), b = load(ref);
        if (!(a.grid == b.grid)) fail(ErrorKind::Config, "panels have different grids");
        double e = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i) e = std::max(e, std::abs(a.data[i] - b.data[i]));
        const double m = b.max_abs();
        std::printf("normalized max error %.6e\n", m > 0 ? e / m : e);
        return 0;
    }
    if (*dot_cmd) {
        const ReferenceCase rc = reference_case(dn);
        PlanOptions po = plan_options(tf);
        OperatorPlan plan(rc.gather, rc.radon, po);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        CmpGather f(rc.gather);
        RadonImage g(rc.radon);
        for (double& v : f.data) v = nd(rng);
        for (double& v : g.data) v = nd(rng);
        const RadonImage rf = plan.forward(f);
        const CmpGather ag = plan.adjoint(g);
        const double rel = std::abs(dot(rf, g) - dot(f, ag)) / (norm2(rf) * norm2(g));
        std::printf("dot-test relative discrepancy %.3e\n", rel);
        return rel <= 1e-10 ? 0 : 4;
    }
    if (*dem) {
        const CmpGather f = load(in);
        const Polyline b = read_mute(mute);
        const RegularGrid2 rg = radon_grid_for(f.grid, tf);
        OperatorPlan plan(f.grid, rg, plan_options(tf));
        const IstaResult res = ista(plan, f, ista_config(io));
        auto [prim, mult] = mute_and_split(res.g, b);
        const CmpGather fm = plan.adjoint(mult);
        CmpGather sub = f;
        sub.axpy(-1.0, fm);
        save(prefix + ".panel.rsg", res.g);
        save(prefix + ".primaries.rsg", plan.adjoint(prim));
        save(prefix + ".multiples.rsg", fm);
        save(prefix + ".subtracted.rsg", sub);
        std::fprintf(stderr, "mu %.6e c %.6e objective %.6e -> %.6e\n", res.trace.mu, res.trace.c,
                     res.trace.objective.front(), res.trace.objective.back());
        return 0;
    }
    if (*itp) {
        CmpGather f = load(in);
        std::vector<unsigned char> mask;
        if (!mask_path.empty()) {
            mask = read_mask(mask_path);
        } else if (missing >= 0.0) {
            MaskSpec ms;
            ms.fraction_missing = missing;
            ms.seed = mask_seed;
            ms.pattern = pattern == "regular" ? MaskPattern::Regular : MaskPattern::RandomTraces;
            mask = make_mask(f.grid, ms);
        } else {
            mask.assign(f.grid.n2, 1);
            for (std::size_t k = 0; k < f.grid.n2; ++k)
                if (std::all_of(f.trace(k), f.trace(k) + f.grid.n1, [](double v) { return v == 0.0; })) mask[k] = 0;
        }
        if (mask.size() != f.grid.n2) fail(ErrorKind::Config, "mask length does not match the number of traces");
        CmpGather tr;
        if (!truth.empty()) {
            tr = load(truth);
            if (!(tr.grid == f.grid)) fail(ErrorKind::Config, "truth gather grid differs from input");
        }
        const RegularGrid2 rg = radon_grid_for(f.grid, tf);
        OperatorPlan plan(f.grid, rg, plan_options(tf));
        IstaConfig cfg = ista_config(io);
        cfg.mask = mask;
        const IstaResult res = ista_masked(plan, f, cfg);
        const CmpGather rec = plan.adjoint(res.g);
        save(prefix + ".recon.rsg", rec);
        save(prefix + ".panel.rsg", res.g);
        write_mask(prefix + ".mask.txt", mask);
        if (!truth.empty()) {
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < f.grid.n2; ++k) {
                if (mask[k]) continue;
                for (std::size_t i = 0; i < f.grid.n1; ++i) {
                    num += (rec(i, k) - tr(i, k)) * (rec(i, k) - tr(i, k));
                    den += tr(i, k) * tr(i, k);
                }
            }
            std::printf("masked-trace relative error %.6e\n", den > 0 ? std::sqrt(num / den) : 0.0);
        }
        return 0;
    }
    if (*bench) {
        std::ostringstream csv;
        csv << "N,method,seconds,ratio_vs_direct\n";
        for (std::size_t n : sizes) {
            const ReferenceCase rc = reference_case(n);
            const CmpGather f = synth_gather(rc.gather, rc.events);
            PlanOptions po;
            po.threads = g_threads;
            OperatorPlan plan(rc.gather, rc.radon, po);
            plan.forward(f);
            std::vector<double> tl;
            for (int r = 0; r < repeats; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                plan.forward(f);
                tl.push_back(seconds(t0));
            }
            const double lp = median(tl);
            double dmed = 0.0;
            if (n <= direct_max) {
                std::vector<double> td;
                for (int r = 0; r < repeats; ++r) {
                    const auto t0 = std::chrono::steady_clock::now();
                    direct_forward(f, rc.radon);
                    td.push_back(seconds(t0));
                }
                dmed = median(td);
            }
            char line[160];
            if (dmed > 0) {
                std::snprintf(line, sizeof(line), "%zu,logpolar,%.6f,%.3f\n%zu,direct,%.6f,1.000\n", n, lp, dmed / lp, n, dmed);
            } else {
                std::snprintf(line, sizeof(line), "%zu,logpolar,%.6f,\n", n, lp);
            }
            csv << line;
            std::fprintf(stderr, "%s", line);
        }
        if (out.empty()) {
            std::cout << csv.str();
        } else {
            std::ofstream o(out);
            if (!(o << csv.str())) fail(ErrorKind::Io, "cannot write " + out);
        }
        return 0;
    }
    if (*syn) {
        RegularGrid2 g;
        g.n1 = nt;
        g.n2 = nx;
        g.o1 = g.o2 = 0.0;
        g.d1 = dt;
        g.d2 = dx;
        const auto ev = read_event_spec(spec);
        save(out, synth_gather(g, ev, noise, seed));
        return 0;
    }
    if (*ren) {
        render_pgm(load(in), out, clip);
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "hrt: %s\n", e.what());
        switch (e.kind()) {
            case ErrorKind::Config: return 2;
            case ErrorKind::Io:
            case ErrorKind::Format: return 3;
            case ErrorKind::Numerical: return 4;
        }
        return 4;
    } catch (const std::bad_alloc&) {
        std::fprintf(stderr, "hrt: out of memory\n");
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "hrt: %s\n", e.what());
        return 4;
    }
}
