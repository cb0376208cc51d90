#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pilotwave/analysis.hpp"
#include "pilotwave/rng.hpp"
#include "pilotwave/wavefield.hpp"

using namespace pilotwave;

namespace {

constexpr double kPi = std::numbers::pi;

StateConfig defaults(double phi = 0.0, StateKind kind = StateKind::Entangled) {
    StateConfig c;
    c.slits_a = {0.1, 0.5};
    c.slits_b = {0.1, 0.5};
    c.phi = phi;
    c.kind = kind;
    return c;
}

} // namespace

TEST_CASE("simpson quadrature: gaussian mass, constant fields, convergence order") {
    const Grid1D g1{-8.0, 8.0, 257};
    const double gauss = quadrature_1d(
        [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }, g1);
    CHECK(gauss == doctest::Approx(1.0).epsilon(1e-8));

    const Grid2D g2{{-1.0, 3.0, 21}, {0.0, 1.0, 21}};
    const double c = quadrature_2d([](double, double) { return 2.5; }, g2);
    CHECK(c == doctest::Approx(2.5 * 4.0 * 1.0).epsilon(1e-14));

    // fitted order >= 3.8 on a smooth integrand under grid doubling; point
    // counts with (n-1) % 4 != 0 skip the Richardson guard on purpose
    auto smooth = [](double x, double y) { return std::exp(std::sin(2.0 * x) - y * y); };
    const double exact = quadrature_2d(smooth, Grid2D{{-2, 2, 1025}, {-2, 2, 1025}});
    std::vector<double> errs;
    for (int n : {35, 67, 131}) {
        errs.push_back(std::abs(
            quadrature_2d(smooth, Grid2D{{-2, 2, n}, {-2, 2, n}}) - exact));
    }
    const double order01 = std::log2(errs[0] / errs[1]);
    const double order12 = std::log2(errs[1] / errs[2]);
    CHECK(order01 >= 3.8);
    CHECK(order12 >= 3.8);
}

TEST_CASE("simpson quadrature: coarse grids on rough integrands are rejected") {
    // 5 points cannot represent this oscillation; Richardson disagrees
    auto rough = [](double x, double y) { return std::cos(7.0 * x) * std::cos(5.0 * y) + 1.0; };
    CHECK_THROWS_AS(quadrature_2d(rough, Grid2D{{-3, 3, 5}, {-3, 3, 5}}),
                    GridTooCoarseError);
    CHECK_THROWS_AS(quadrature_1d([](double x) { return std::cos(9.0 * x); },
                                  Grid1D{-3, 3, 5}),
                    GridTooCoarseError);
    // even point counts are not a Simpson grid
    CHECK_THROWS_AS(quadrature_1d([](double) { return 1.0; }, Grid1D{0, 1, 4}),
                    std::invalid_argument);
}

TEST_CASE("numeric evolve oracle: identity at t=0, unitarity, resolution errors") {
    const SlitParams p{0.1, 0.5};
    const int n = 8192;
    const double dx = 0.00625;
    const Grid1D grid{-dx * n / 2, dx * n / 2, n};
    std::vector<Complex> initial(n);
    for (int i = 0; i < n; ++i) {
        initial[i] = packet_amplitude(Slit::Upper, grid.lo + i * dx, 0.0, p);
    }

    const auto same = numeric_evolve_oracle(initial, grid, 0.0, p.sigma);
    CHECK(same == initial);

    // short evolution stays inside this domain; norm conserved to 1e-10
    const auto evolved = numeric_evolve_oracle(initial, grid, 0.1, p.sigma);
    double norm = 0.0;
    for (const Complex& v : evolved) norm += std::norm(v);
    norm *= dx;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));

    // t=4 spreads to sigma_t ~ 20, far beyond +-25: boundary check fires
    CHECK_THROWS_AS(numeric_evolve_oracle(initial, grid, 4.0, p.sigma), ResolutionError);
    // a grid with fewer than 16 points per sigma is rejected
    const int nc = 1024;
    const double dxc = 0.05;
    const Grid1D coarse{-dxc * nc / 2, dxc * nc / 2, nc};
    std::vector<Complex> ci(nc);
    for (int i = 0; i < nc; ++i) {
        ci[i] = packet_amplitude(Slit::Upper, coarse.lo + i * dxc, 0.0, p);
    }
    CHECK_THROWS_AS(numeric_evolve_oracle(ci, coarse, 1.0, p.sigma), ResolutionError);
}

TEST_CASE("distribution distance: identical, disjoint, self-consistency threshold") {
    Histogram2D a(-1, 1, 10, -1, 1, 10);
    Histogram2D b(-1, 1, 10, -1, 1, 10);
    a.add(0.0, 0.0);
    a.add(0.5, -0.5);
    b = a;
    for (auto m : {DistanceMetric::TotalVariation, DistanceMetric::ChiSquare,
                   DistanceMetric::SupNorm}) {
        CHECK(distribution_distance(a, b, m).value == 0.0);
    }

    Histogram2D c(-1, 1, 10, -1, 1, 10);
    c.add(-0.95, -0.95);
    Histogram2D d(-1, 1, 10, -1, 1, 10);
    d.add(0.95, 0.95);
    CHECK(distribution_distance(c, d, DistanceMetric::TotalVariation).value ==
          doctest::Approx(1.0));

    Histogram2D e(-1, 1, 10, -1, 1, 12);
    CHECK_THROWS_AS(distribution_distance(a, e, DistanceMetric::TotalVariation),
                    BinMismatchError);

    // two independent 1e5-sample draws from |psi(4)|^2 stay under TV = 0.02,
    // the self-consistency run that the ensemble tests rely on
    const StateConfig cfg = defaults(0.0);
    const double t = 4.0;
    const double sig_t = cfg.slits_a.spread_sigma(t);
    Histogram2D h1(-200, 200, 40, -200, 200, 40);
    Histogram2D h2(-200, 200, 40, -200, 200, 40);
    const double n2 = cfg.normalization() * cfg.normalization();
    for (int rep = 0; rep < 2; ++rep) {
        Histogram2D& h = rep == 0 ? h1 : h2;
        std::int64_t accepted = 0;
        std::uint64_t idx = 0;
        while (accepted < 100000) {
            Substream ss(rep == 0 ? 111 : 222, idx++);
            const double s = ss.uniform() < 0.5 ? 1.0 : -1.0;
            const double xa = ss.normal(s * 0.5, sig_t);
            const double xb = ss.normal(s * 0.5, sig_t);
            const double rho = joint_density({xa, xb, t}, cfg);
            const double qa = std::exp(-((xa - 0.5) * (xa - 0.5) + (xb - 0.5) * (xb - 0.5)) /
                                       (2.0 * sig_t * sig_t));
            const double qb = std::exp(-((xa + 0.5) * (xa + 0.5) + (xb + 0.5) * (xb + 0.5)) /
                                       (2.0 * sig_t * sig_t));
            const double q = 0.5 * (qa + qb) / (2.0 * kPi * sig_t * sig_t);
            if (ss.uniform() * 2.0 * n2 * q < rho) {
                h.add(xa, xb);
                ++accepted;
            }
        }
    }
    const double tv = distribution_distance(h1, h2, DistanceMetric::TotalVariation).value;
    CHECK(tv < 0.02);
}

TEST_CASE("no-signaling gap: trivial zero, defaults, overlap sweep and bound") {
    const StateConfig c = defaults();
    const Grid1D grid{-66.0, 66.0, 4001};
    CHECK(no_signaling_gap(c, 1.0, 1.0, Side::B, 4.0, grid) == 0.0);

    const double gap = no_signaling_gap(c, 0.0, kPi, Side::B, 4.0, grid);
    CHECK(gap < 1e-4);
    CHECK(gap > 0.0);

    // the gap grows with the overlap (sigma up at fixed d) and respects the
    // analytic bound 2 s_a sup|cross| max(N1^2, N2^2) + s_a s_b N1^2 N2^2 sup(base)
    double prev = 0.0;
    for (double sigma : {0.1, 0.15, 0.2, 0.25, 0.3}) {
        StateConfig cs = c;
        cs.slits_a = {sigma, 0.5};
        cs.slits_b = {sigma, 0.5};
        const double g = no_signaling_gap(cs, 0.0, kPi, Side::B, 4.0, grid);
        CHECK(g > prev);
        prev = g;

        double sup_cross = 0.0;
        double sup_base = 0.0;
        for (int i = 0; i < grid.n; ++i) {
            const double x = grid.point(i);
            const Complex gu = packet_amplitude(Slit::Upper, x, 4.0, cs.slits_b);
            const Complex gd = packet_amplitude(Slit::Lower, x, 4.0, cs.slits_b);
            sup_cross = std::max(sup_cross, std::abs(std::conj(gu) * gd));
            sup_base = std::max(sup_base, 0.5 * (std::norm(gu) + std::norm(gd)));
        }
        const double s_a = cs.slits_a.overlap();
        const double s_b = cs.slits_b.overlap();
        StateConfig c1 = cs;
        StateConfig c2 = cs;
        c1.phi = 0.0;
        c2.phi = kPi;
        const double n1 = c1.normalization() * c1.normalization();
        const double n2 = c2.normalization() * c2.normalization();
        const double bound =
            2.0 * s_a * sup_cross * std::max(n1, n2) + 2.0 * s_a * s_b * n1 * n2 * sup_base;
        CHECK(g <= bound);
    }

    // a grid that cannot resolve the fringe structure is rejected
    CHECK_THROWS_AS(no_signaling_gap(c, 0.0, kPi, Side::B, 4.0, Grid1D{-66.0, 66.0, 15}),
                    GridTooCoarseError);
}

TEST_CASE("fringe shift check: phase-opposed patterns and visibility") {
    const StateConfig c = defaults();
    const Grid2D grid{{-60.0, 60.0, 801}, {-60.0, 60.0, 801}};
    const double resid = fringe_shift_check(c, 4.0, grid);
    CHECK(resid < 1e-5);

    const StateConfig cp = defaults(0.0, StateKind::ProductUpper);
    CHECK(fringe_shift_check(cp, 4.0, grid) == 0.0);

    CHECK(diagonal_fringe_visibility(c, 4.0, 15.0, 4001) > 0.9);
    // the product state shows no fringes along the diagonal at this scale
    CHECK(diagonal_fringe_visibility(cp, 4.0, 5.0, 1001) < 0.2);
}

TEST_CASE("fringe period along the diagonal matches the cross-term phase gradient") {
    const StateConfig c = defaults();
    const double t = 4.0;

    // cross-term phase Theta(x) = arg(conj(g_u g_u) g_d g_d e^{i phi}) along
    // x_a = x_b = x; its gradient calls out the fringe wavenumber
    auto theta = [&](double x) {
        const Complex gu = packet_amplitude(Slit::Upper, x, t, c.slits_a);
        const Complex gd = packet_amplitude(Slit::Lower, x, t, c.slits_a);
        const Complex cross = std::conj(gu * gu) * (gd * gd);
        return cross;
    };
    const double h = 1e-4;
    const double dtheta = std::arg(theta(h) / theta(-h)) / (2.0 * h);

    // extract the period from zero crossings of the oscillatory density part
    auto residual = [&](double x) {
        const double uu = std::norm(packet_amplitude(Slit::Upper, x, t, c.slits_a)) *
                          std::norm(packet_amplitude(Slit::Upper, x, t, c.slits_b));
        const double dd = std::norm(packet_amplitude(Slit::Lower, x, t, c.slits_a)) *
                          std::norm(packet_amplitude(Slit::Lower, x, t, c.slits_b));
        const double n2 = c.normalization() * c.normalization();
        return joint_density({x, x, t}, c) - n2 * 0.5 * (uu + dd);
    };
    std::vector<double> zeros;
    double prev = residual(-20.0);
    for (int i = 1; i <= 8000; ++i) {
        const double x = -20.0 + 40.0 * i / 8000.0;
        const double cur = residual(x);
        if ((prev < 0.0) != (cur < 0.0)) zeros.push_back(x);
        prev = cur;
    }
    REQUIRE(zeros.size() >= 3);
    const double period = 2.0 * (zeros.back() - zeros.front()) / (zeros.size() - 1);
    const double expected = 2.0 * kPi / std::abs(dtheta);
    CHECK(period == doctest::Approx(expected).epsilon(1e-3));
    // frozen: the default geometry puts the diagonal fringe period at ~12.57
    CHECK(period == doctest::Approx(12.566).epsilon(1e-2));
}
