#include "pilotwave/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pilotwave {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double simpson_weight(int i, int n) {
    if (i == 0 || i == n - 1) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
}

double rel_diff(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / denom;
}

} // namespace

void Grid1D::validate(const char* name) const {
    const std::string nm = name;
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, nm + ": requires lo < hi");
    require(n >= 3, nm + ": requires >= 3 points");
}

void Grid2D::validate() const {
    a.validate("grid.a");
    b.validate("grid.b");
}

double quadrature_1d(double (*f)(double, const void*), const void* ctx, const Grid1D& g) {
    g.validate();
    require(g.n % 2 == 1, "quadrature grid needs an odd point count");
    std::vector<double> vals(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) vals[static_cast<std::size_t>(i)] = f(g.point(i), ctx);

    double full = 0.0;
    for (int i = 0; i < g.n; ++i) full += simpson_weight(i, g.n) * vals[static_cast<std::size_t>(i)];
    full *= g.step() / 3.0;

    if ((g.n - 1) % 4 == 0) {
        const int m = (g.n + 1) / 2;
        double half = 0.0;
        for (int i = 0; i < m; ++i) half += simpson_weight(i, m) * vals[static_cast<std::size_t>(2 * i)];
        half *= 2.0 * g.step() / 3.0;
        if (rel_diff(full, half) > 1e-6) {
            throw GridTooCoarseError("quadrature_1d: half-resolution estimate differs by " +
                                     std::to_string(rel_diff(full, half)));
        }
    }
    return full;
}

double quadrature_2d(double (*f)(double, double, const void*), const void* ctx,
                     const Grid2D& g) {
    g.validate();
    require(g.a.n % 2 == 1 && g.b.n % 2 == 1, "quadrature grid needs odd point counts");
    const int na = g.a.n;
    const int nb = g.b.n;
    std::vector<double> vals(static_cast<std::size_t>(na) * nb);
    for (int i = 0; i < na; ++i) {
        const double x = g.a.point(i);
        for (int j = 0; j < nb; ++j) {
            vals[static_cast<std::size_t>(i) * nb + j] = f(x, g.b.point(j), ctx);
        }
    }

    auto simpson = [&](int stride) {
        const int ma = (na - 1) / stride + 1;
        const int mb = (nb - 1) / stride + 1;
        double total = 0.0;
        for (int i = 0; i < ma; ++i) {
            double row = 0.0;
            for (int j = 0; j < mb; ++j) {
                row += simpson_weight(j, mb) *
                       vals[static_cast<std::size_t>(i * stride) * nb + j * stride];
            }
            total += simpson_weight(i, ma) * row;
        }
        return total * (stride * g.a.step() / 3.0) * (stride * g.b.step() / 3.0);
    };

    const double full = simpson(1);
    if ((na - 1) % 4 == 0 && (nb - 1) % 4 == 0) {
        const double half = simpson(2);
        if (rel_diff(full, half) > 1e-6) {
            throw GridTooCoarseError("quadrature_2d: half-resolution estimate differs by " +
                                     std::to_string(rel_diff(full, half)));
        }
    }
    return full;
}

std::vector<Complex> numeric_evolve_oracle(const std::vector<Complex>& initial,
                                           const Grid1D& grid, double t,
                                           double feature_scale) {
    require(grid.n >= 16 && grid.hi > grid.lo, "oracle grid: requires >= 16 points, lo < hi");
    require(initial.size() == static_cast<std::size_t>(grid.n),
            "oracle: initial samples must match the grid");
    require(std::isfinite(t) && t >= 0.0, "oracle: t must be >= 0");
    require(feature_scale > 0.0, "oracle: feature_scale must be > 0");

    const int n = grid.n;
    const double dx = (grid.hi - grid.lo) / n; // periodic spacing
    if (dx > feature_scale / 16.0) {
        throw ResolutionError("oracle grid does not resolve the packet width (" +
                              std::to_string(feature_scale / dx) + " points per sigma)");
    }

    double peak = 0.0;
    for (const Complex& v : initial) peak = std::max(peak, std::abs(v));
    const int edge = std::max(2, n / 256);
    for (int i = 0; i < edge; ++i) {
        if (std::abs(initial[static_cast<std::size_t>(i)]) > 1e-12 * peak ||
            std::abs(initial[static_cast<std::size_t>(n - 1 - i)]) > 1e-12 * peak) {
            throw ResolutionError("oracle domain does not contain the initial state");
        }
    }

    if (t == 0.0) return initial;

    std::vector<Complex> out(initial);
    fftw_complex* buf = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    const double dk = 2.0 * std::numbers::pi / (n * dx);
    for (int j = 0; j < n; ++j) {
        const double k = dk * (j <= n / 2 ? j : j - n);
        out[static_cast<std::size_t>(j)] *= std::exp(Complex(0.0, -0.5 * k * k * t));
    }
    fftw_execute(bwd);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    for (Complex& v : out) v /= static_cast<double>(n);

    double edge_peak = 0.0;
    for (int i = 0; i < edge; ++i) {
        edge_peak = std::max({edge_peak, std::abs(out[static_cast<std::size_t>(i)]),
                              std::abs(out[static_cast<std::size_t>(n - 1 - i)])});
    }
    if (edge_peak > 1e-10 * peak) {
        throw ResolutionError("oracle domain does not absorb the spreading at t=" +
                              std::to_string(t));
    }
    return out;
}

Histogram2D::Histogram2D(double lo_a, double hi_a, int n_a, double lo_b, double hi_b,
                         int n_b)
    : lo_a(lo_a), hi_a(hi_a), lo_b(lo_b), hi_b(hi_b), n_a(n_a), n_b(n_b),
      cells(static_cast<std::size_t>(n_a) * static_cast<std::size_t>(n_b), 0.0) {
    require(n_a > 0 && n_b > 0, "histogram: positive bin counts required");
    require(lo_a < hi_a && lo_b < hi_b, "histogram: requires lo < hi");
}

void Histogram2D::add(double x_a, double x_b, double weight) {
    if (x_a < lo_a || x_a >= hi_a || x_b < lo_b || x_b >= hi_b) {
        out_of_range += weight;
        return;
    }
    const int i = std::min(n_a - 1, static_cast<int>((x_a - lo_a) / (hi_a - lo_a) * n_a));
    const int j = std::min(n_b - 1, static_cast<int>((x_b - lo_b) / (hi_b - lo_b) * n_b));
    at(i, j) += weight;
}

double Histogram2D::total() const {
    double s = out_of_range;
    for (double c : cells) s += c;
    return s;
}

bool Histogram2D::same_binning(const Histogram2D& other) const {
    return lo_a == other.lo_a && hi_a == other.hi_a && lo_b == other.lo_b &&
           hi_b == other.hi_b && n_a == other.n_a && n_b == other.n_b;
}

DistanceReport distribution_distance(const Histogram2D& a, const Histogram2D& b,
                                     DistanceMetric metric) {
    if (!a.same_binning(b)) throw BinMismatchError("distribution_distance: binning differs");
    const double ta = a.total();
    const double tb = b.total();
    require(ta > 0.0 && tb > 0.0, "distribution_distance: empty histogram");

    const std::size_t n = a.cells.size();
    DistanceReport report{metric, 0.0, static_cast<std::int64_t>(n)};
    if (metric == DistanceMetric::ChiSquare) {
        constexpr double eps = 0.5; // pseudo-count per cell
        double chi2 = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double ca = i < n ? a.cells[i] : a.out_of_range;
            const double cb = i < n ? b.cells[i] : b.out_of_range;
            const double diff = ca / ta - cb / tb;
            const double var = (ca + eps) / (ta * ta) + (cb + eps) / (tb * tb);
            chi2 += diff * diff / var;
        }
        report.value = chi2;
        return report;
    }
    double tv = 0.0;
    double sup = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double pa = (i < n ? a.cells[i] : a.out_of_range) / ta;
        const double pb = (i < n ? b.cells[i] : b.out_of_range) / tb;
        tv += std::abs(pa - pb);
        sup = std::max(sup, std::abs(pa - pb));
    }
    report.value = metric == DistanceMetric::TotalVariation ? 0.5 * tv : sup;
    return report;
}

namespace {

// Suprema converge only O(h^2) with fringe-sized constants, so the
// cross-check threshold is looser than the quadrature one. An unresolved
// fringe pattern shows up as an O(1) disagreement.
double sup_check(double full, double half, const char* what) {
    const double denom = std::max({full, half, 1e-300});
    if (std::abs(full - half) / denom > 1e-2) {
        throw GridTooCoarseError(std::string(what) +
                                 ": half-resolution supremum differs, refine the grid");
    }
    return full;
}

} // namespace

double no_signaling_gap(const StateConfig& base, double phi1, double phi2, Side side,
                        double t, const Grid1D& grid) {
    grid.validate();
    require(grid.n % 2 == 1, "no_signaling_gap: odd point count required");
    StateConfig c1 = base;
    StateConfig c2 = base;
    c1.phi = phi1;
    c2.phi = phi2;
    double full = 0.0;
    double half = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.point(i);
        const double gap =
            std::abs(marginal_density(side, x, t, c1) - marginal_density(side, x, t, c2));
        full = std::max(full, gap);
        if (i % 2 == 0) half = std::max(half, gap);
    }
    return sup_check(full, half, "no_signaling_gap");
}

double fringe_shift_check(const StateConfig& base, double t, const Grid2D& grid) {
    grid.validate();
    StateConfig c0 = base;
    StateConfig cpi = base;
    c0.phi = 0.0;
    cpi.phi = std::numbers::pi;
    double full = 0.0;
    double half = 0.0;
    for (int i = 0; i < grid.a.n; ++i) {
        const double xa = grid.a.point(i);
        for (int j = 0; j < grid.b.n; ++j) {
            const double xb = grid.b.point(j);
            const SpacetimePoint pt{xa, xb, t};
            double incoherent;
            if (base.kind == StateKind::ProductUpper) {
                incoherent = joint_density(pt, c0);
            } else {
                const double uu = std::norm(packet_amplitude(Slit::Upper, xa, t, base.slits_a) *
                                            packet_amplitude(Slit::Upper, xb, t, base.slits_b));
                const double dd = std::norm(packet_amplitude(Slit::Lower, xa, t, base.slits_a) *
                                            packet_amplitude(Slit::Lower, xb, t, base.slits_b));
                incoherent = 0.5 * (uu + dd);
            }
            const double resid = std::abs(joint_density(pt, c0) + joint_density(pt, cpi) -
                                          2.0 * incoherent);
            full = std::max(full, resid);
            if (i % 2 == 0 && j % 2 == 0) half = std::max(half, resid);
        }
    }
    // Residuals are O(s^2); tolerate them being zero on both grids.
    if (full == 0.0) return 0.0;
    return sup_check(full, half, "fringe_shift_check");
}

double diagonal_fringe_visibility(const StateConfig& c, double t, double half_range,
                                  int n) {
    require(n >= 3 && half_range > 0.0, "visibility: n >= 3 and half_range > 0 required");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -half_range + 2.0 * half_range * i / (n - 1);
        const double rho = joint_density({x, x, t}, c);
        lo = std::min(lo, rho);
        hi = std::max(hi, rho);
    }
    return (hi - lo) / (hi + lo);
}

} // namespace pilotwave
