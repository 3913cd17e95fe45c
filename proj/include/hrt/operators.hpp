#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hrt/bspline.hpp"
#include "hrt/geometry.hpp"
#include "hrt/grid.hpp"
#include "hrt/lpconv.hpp"

namespace hrt {

struct PlanOptions {
    int n_splits_t = 1;
    int n_splits_q = 1;
    double window_threshold = 0.16;
    double oversampling = 1.5;  // lattice spacing = max neighbour distance / oversampling
    double quadrature_tol = 1e-10;
    int guard = 4;
    std::size_t ramp_rows = 0;  // seam half-width in data rows; 0 picks max(4, n1/16)
    std::size_t memory_budget = std::size_t{5} << 30;
    int threads = 1;
    std::string cache_dir;
};

struct SplitPlan {
    std::size_t row_begin = 0;  // data rows [row_begin, row_end)
    std::size_t row_end = 0;
    std::size_t col_begin = 0;  // Radon q columns [col_begin, col_end)
    std::size_t col_end = 0;
    double kappa_min = 0.0, kappa_max = 0.0;
    SquaredFrame frame;
    SectorGeometry geometry;
    LatticeSpec lattice;
    SpectralWindow window;
    KernelSpectrum spectrum;
    LpConvolution conv;
    Stencil data_stencil;            // samples ordered row-fastest within each trace
    std::vector<double> data_weight;  // per sample, multiplies f
    Stencil out_stencil;             // tau-fastest within each q column
    std::vector<double> out_weight;   // zero where the line misses the split
};

struct ApplyStats {
    double grid_seconds = 0.0;
    double conv_seconds = 0.0;
    double interp_seconds = 0.0;
    double total_seconds = 0.0;
    std::size_t samples = 0;
    std::size_t lattice_points = 0;
    std::size_t splits = 0;
};

class OperatorPlan {
public:
    OperatorPlan(const RegularGrid2& gather_grid, const RegularGrid2& radon_grid, const PlanOptions& opt = {});
    ~OperatorPlan();
    OperatorPlan(const OperatorPlan&) = delete;
    OperatorPlan& operator=(const OperatorPlan&) = delete;

    const RegularGrid2& gather_grid() const { return gather_; }
    const RegularGrid2& radon_grid() const { return radon_; }
    const ScaleRecord& scale() const { return scale_; }
    const PlanOptions& options() const { return opt_; }
    const std::vector<SplitPlan>& splits() const { return splits_; }
    // Partition-of-unity weights over data rows, one vector per t-split.
    const std::vector<std::vector<double>>& row_weights() const { return row_weights_; }

    RadonImage forward(const CmpGather& f, ApplyStats* stats = nullptr) const;
    CmpGather adjoint(const RadonImage& g, ApplyStats* stats = nullptr) const;

private:
    struct Pool;
    void apply_split(std::size_t s, const double* in, double* out, bool adjoint, ApplyStats* st) const;

    RegularGrid2 gather_, radon_;
    ScaleRecord scale_;
    PlanOptions opt_;
    std::vector<SplitPlan> splits_;
    std::vector<std::vector<double>> row_weights_;
    std::unique_ptr<Pool> pool_;
};

// Sums along t = sqrt(tau^2 + q^2 x^2) with Catmull-Rom interpolation in t.
RadonImage direct_forward(const CmpGather& f, const RegularGrid2& radon_grid);
CmpGather direct_adjoint(const RadonImage& g, const RegularGrid2& gather_grid);

// Power iteration on R*R; history receives the estimate after each iteration.
double estimate_norm(const OperatorPlan& plan, int iters = 30, std::uint64_t seed = 1,
                     std::vector<double>* history = nullptr);

}  // namespace hrt
