#ifndef PILOTWAVE_ANALYSIS_HPP
#define PILOTWAVE_ANALYSIS_HPP

#include <cstdint>
#include <type_traits>
#include <vector>

#include "pilotwave/errors.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave {

/// Uniform 1D grid with n points inclusive of both endpoints.
struct Grid1D {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;

    double step() const { return (hi - lo) / (n - 1); }
    double point(int i) const { return lo + i * step(); }
    void validate(const char* name = "grid") const;
};

/// Tensor product of two 1D grids.
struct Grid2D {
    Grid1D a;
    Grid1D b;
    void validate() const;
};

/// Composite Simpson quadrature of f(x_a, x_b) over the grid, O(h^4).
/// Requires odd point counts. When both counts are congruent 1 mod 4, the
/// estimate is cross-checked against the half-resolution subgrid and
/// GridTooCoarseError is thrown if they differ by more than 1e-6 relative.
double quadrature_2d(double (*f)(double, double, const void*), const void* ctx,
                     const Grid2D& g);

template <class F>
double quadrature_2d(F&& f, const Grid2D& g) {
    using Fn = std::remove_reference_t<F>;
    const Fn& fn = f;
    return quadrature_2d(
        [](double x, double y, const void* c) { return (*static_cast<const Fn*>(c))(x, y); },
        static_cast<const void*>(&fn), g);
}

/// 1D composite Simpson with the same Richardson cross-check.
double quadrature_1d(double (*f)(double, const void*), const void* ctx, const Grid1D& g);

template <class F>
double quadrature_1d(F&& f, const Grid1D& g) {
    using Fn = std::remove_reference_t<F>;
    const Fn& fn = f;
    return quadrature_1d(
        [](double x, const void* c) { return (*static_cast<const Fn*>(c))(x); },
        static_cast<const void*>(&fn), g);
}

/// Independent split-step spectral solution of i d psi/dt = -1/2 d^2 psi/dx^2.
/// Exists solely as a test oracle for the closed-form packets; the production
/// path never calls it.
///
/// The grid is periodic: n samples at x_j = lo + j * (hi - lo) / n, the right
/// endpoint excluded. feature_scale is the smallest structure of the initial
/// state (the packet sigma); the grid must resolve it with >= 16 points.
/// Throws ResolutionError when the grid cannot represent the state or when
/// probability reaches the domain boundary (wrap-around would corrupt the
/// result).
std::vector<Complex> numeric_evolve_oracle(const std::vector<Complex>& initial,
                                           const Grid1D& grid, double t,
                                           double feature_scale);

enum class DistanceMetric { TotalVariation, ChiSquare, SupNorm };

struct DistanceReport {
    DistanceMetric metric;
    double value = 0.0;
    std::int64_t n_cells = 0;
};

/// 2D histogram over uniform bins; doubles so it can hold either event counts
/// or analytic bin masses. Out-of-range additions are tallied separately.
struct Histogram2D {
    double lo_a = 0.0, hi_a = 0.0;
    double lo_b = 0.0, hi_b = 0.0;
    int n_a = 0, n_b = 0;
    std::vector<double> cells;
    double out_of_range = 0.0;

    Histogram2D() = default;
    Histogram2D(double lo_a, double hi_a, int n_a, double lo_b, double hi_b, int n_b);

    void add(double x_a, double x_b, double weight = 1.0);
    double& at(int i, int j) { return cells[static_cast<std::size_t>(i) * n_b + j]; }
    double total() const;
    bool same_binning(const Histogram2D& other) const;
};

/// Expected bin masses of a 2D density, via per-bin Simpson with `subdiv`
/// subintervals per axis (subdiv even).
template <class F>
Histogram2D binned_density(F&& density, double lo_a, double hi_a, int n_a,
                           double lo_b, double hi_b, int n_b, int subdiv = 8);

/// TV = (1/2) sum |p - q| on normalized masses; SupNorm = max |p - q|;
/// chi-square is the two-sample homogeneity statistic with a pseudo-count of
/// 0.5 added per cell. Throws BinMismatchError for different binnings.
DistanceReport distribution_distance(const Histogram2D& a, const Histogram2D& b,
                                     DistanceMetric metric);

/// sup over the grid of |marginal_{phi1} - marginal_{phi2}| on the chosen
/// side, from the closed-form marginals. The sup is cross-checked on the
/// half-resolution grid; a relative disagreement above 1e-2 means the grid
/// misses fringe-scale structure and raises GridTooCoarseError.
double no_signaling_gap(const StateConfig& base, double phi1, double phi2,
                        Side side, double t, const Grid1D& grid);

/// sup-norm residual of p_{phi=0} + p_{phi=pi} - 2 p_incoherent over the
/// grid, where p_incoherent = (|g_u g_u|^2 + |g_d g_d|^2)/2. A small residual
/// certifies the two fringe patterns are exactly phase-opposed. Same
/// half-grid cross-check as no_signaling_gap.
double fringe_shift_check(const StateConfig& base, double t, const Grid2D& grid);

/// Fringe visibility (max-min)/(max+min) of the joint density along the
/// x_a = x_b diagonal, |x| <= half_range, sampled at n points.
double diagonal_fringe_visibility(const StateConfig& c, double t,
                                  double half_range, int n);

// --- template implementation -------------------------------------------------

template <class F>
Histogram2D binned_density(F&& density, double lo_a, double hi_a, int n_a,
                           double lo_b, double hi_b, int n_b, int subdiv) {
    Histogram2D h(lo_a, hi_a, n_a, lo_b, hi_b, n_b);
    const double wa = (hi_a - lo_a) / n_a;
    const double wb = (hi_b - lo_b) / n_b;
    const int m = subdiv % 2 == 0 ? subdiv : subdiv + 1;
    std::vector<double> w(static_cast<std::size_t>(m) + 1, 2.0);
    for (int k = 1; k <= m; k += 2) w[static_cast<std::size_t>(k)] = 4.0;
    w[0] = w[static_cast<std::size_t>(m)] = 1.0;
    for (int i = 0; i < n_a; ++i) {
        for (int j = 0; j < n_b; ++j) {
            const double ha = wa / m;
            const double hb = wb / m;
            double s = 0.0;
            for (int p = 0; p <= m; ++p) {
                const double x = lo_a + i * wa + p * ha;
                double row = 0.0;
                for (int q = 0; q <= m; ++q) {
                    row += w[static_cast<std::size_t>(q)] * density(x, lo_b + j * wb + q * hb);
                }
                s += w[static_cast<std::size_t>(p)] * row;
            }
            h.at(i, j) = s * ha * hb / 9.0;
        }
    }
    return h;
}

} // namespace pilotwave

#endif
