#include "pilotwave/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pilotwave/analysis.hpp"
#include "pilotwave/parallel.hpp"

namespace pilotwave {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Plain tensor Simpson over one bin pair. The flux integrand is signed and
// can cancel to ~0, which would defeat quadrature_2d's relative Richardson
// guard; the grid here is chosen by us, not by a caller.
template <class F>
double bin_simpson(F&& f, double lo_a, double hi_a, double lo_b, double hi_b, int n) {
    const double ha = (hi_a - lo_a) / (n - 1);
    const double hb = (hi_b - lo_b) / (n - 1);
    auto w = [n](int i) { return i == 0 || i == n - 1 ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += w(j) * f(lo_a + i * ha, lo_b + j * hb);
        total += w(i) * row;
    }
    return total * ha * hb / 9.0;
}

} // namespace

void PointerModel::validate() const {
    require(std::isfinite(kappa) && kappa > 0.0, "pointer.kappa must be > 0");
}

void BinningSpec::validate() const {
    require(std::isfinite(t_plane) && t_plane >= 0.0, "binning.t_plane must be >= 0");
    require(n_bins_a > 0, "binning.n_bins_a must be > 0");
    require(n_bins_b > 0, "binning.n_bins_b must be > 0");
    require(lo_a < hi_a, "binning.range_a requires lo < hi");
    require(lo_b < hi_b, "binning.range_b requires lo < hi");
}

std::pair<double, double> BinningSpec::coverage(const StateConfig& c) const {
    validate();
    auto mass = [&](Side side, double lo, double hi) {
        Grid1D g{lo, hi, 2001};
        return quadrature_1d(
            [&](double x) { return marginal_density(side, x, t_plane, c); }, g);
    };
    return {mass(Side::A, lo_a, hi_a), mass(Side::B, lo_b, hi_b)};
}

void BudgetSpec::validate() const {
    require(n_planes > 0, "budget.n_planes must be > 0");
    require(n_bins > 0, "budget.n_bins must be > 0");
    require(pairs_per_bin > 0, "budget.pairs_per_bin must be > 0");
    require(std::isfinite(pair_rate) && pair_rate > 0.0, "budget.pair_rate must be > 0");
}

double budget_seconds(const BudgetSpec& b) {
    b.validate();
    const double bins2 = static_cast<double>(b.n_bins) * static_cast<double>(b.n_bins);
    return static_cast<double>(b.n_planes) * bins2 *
           static_cast<double>(b.pairs_per_bin) * bins2 / b.pair_rate;
}

PlaneSampler::PlaneSampler(const StateConfig& c, double t_plane, int cells)
    : config_(c), t_(t_plane), cells_(cells) {
    c.validate();
    require(std::isfinite(t_plane) && t_plane >= 0.0, "sampler.t_plane must be >= 0");
    require(cells >= 16, "sampler.cells must be >= 16");

    // Support covering the state to ~8 spread widths; truncation < 1e-14.
    const double ra = c.slits_a.half_sep + 8.0 * c.slits_a.spread_sigma(t_plane);
    const double rb = c.slits_b.half_sep + 8.0 * c.slits_b.spread_sigma(t_plane);
    lo_a_ = -ra;
    hi_a_ = ra;
    lo_b_ = -rb;
    hi_b_ = rb;

    const int n = cells_;
    const double ha = (hi_a_ - lo_a_) / n;
    const double hb = (hi_b_ - lo_b_) / n;

    // Density at the (n+1)^2 cell corners.
    std::vector<double> corner(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int i = 0; i <= n; ++i) {
        const double xa = lo_a_ + i * ha;
        for (int j = 0; j <= n; ++j) {
            corner[static_cast<std::size_t>(i) * (n + 1) + j] =
                joint_density({xa, lo_b_ + j * hb, t_plane}, c);
        }
    }

    // Per-cell envelope: max of the four corners and the center, inflated to
    // absorb the in-cell curvature (fringe period >> cell size).
    envelope_.resize(static_cast<std::size_t>(n) * n);
    cum_.resize(envelope_.size());
    double running = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xc = lo_a_ + (i + 0.5) * ha;
        for (int j = 0; j < n; ++j) {
            const double c00 = corner[static_cast<std::size_t>(i) * (n + 1) + j];
            const double c01 = corner[static_cast<std::size_t>(i) * (n + 1) + j + 1];
            const double c10 = corner[static_cast<std::size_t>(i + 1) * (n + 1) + j];
            const double c11 = corner[static_cast<std::size_t>(i + 1) * (n + 1) + j + 1];
            const double cc = joint_density({xc, lo_b_ + (j + 0.5) * hb, t_plane}, c);
            const double m = std::max({c00, c01, c10, c11, cc}) * 1.05;
            envelope_[static_cast<std::size_t>(i) * n + j] = m;
            running += m * ha * hb;
            cum_[static_cast<std::size_t>(i) * n + j] = running;
        }
    }
    total_ = running;
    require(total_ > 0.0, "sampler: density vanishes on the support");
}

std::pair<double, double> PlaneSampler::sample(Substream& stream) const {
    const int n = cells_;
    const double ha = (hi_a_ - lo_a_) / n;
    const double hb = (hi_b_ - lo_b_) / n;
    for (;;) {
        const double u = stream.uniform() * total_;
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        const std::size_t cell = it == cum_.end() ? cum_.size() - 1
                                                  : static_cast<std::size_t>(it - cum_.begin());
        const int i = static_cast<int>(cell) / n;
        const int j = static_cast<int>(cell) % n;
        const double xa = lo_a_ + (i + stream.uniform()) * ha;
        const double xb = lo_b_ + (j + stream.uniform()) * hb;
        const double rho = joint_density({xa, xb, t_}, config_);
        const double m = envelope_[cell];
        if (rho > m) {
            throw std::runtime_error("PlaneSampler: envelope violated; increase cells");
        }
        if (stream.uniform() * m < rho) return {xa, xb};
    }
}

EventSimulator::EventSimulator(const StateConfig& c, const PointerModel& pm,
                               const BinningSpec& bs, double eps_node)
    : config_(c), pointer_(pm), binning_(bs), eps_node_(eps_node),
      sampler_(c, bs.t_plane) {
    pm.validate();
    bs.validate();
    require(eps_node > 0.0, "eps_node must be > 0");
}

DetectionEvent EventSimulator::sample_position(Substream& stream) const {
    const auto [xa, xb] = sampler_.sample(stream);
    DetectionEvent ev;
    ev.x_a = xa;
    ev.x_b = xb;
    ev.bin_a = binning_.bin_a(xa);
    ev.bin_b = binning_.bin_b(xb);
    ev.out_of_range = ev.bin_a < 0 || ev.bin_b < 0;
    return ev;
}

DetectionEvent EventSimulator::simulate_event(Substream& stream) const {
    DetectionEvent ev = sample_position(stream);
    const Complex pw =
        weak_momentum(pointer_.side, {ev.x_a, ev.x_b, binning_.t_plane}, config_, eps_node_);
    const double signal = pointer_.kappa * pw.real();
    if (std::abs(signal) > 1.0) {
        throw SaturationError("pointer saturated: kappa * |Re p_w| = " +
                              std::to_string(std::abs(signal)));
    }
    ev.outcome = stream.uniform() < 0.5 * (1.0 + signal) ? 1 : -1;
    return ev;
}

ProfileResult estimate_profile(const StateConfig& c, const PointerModel& pm,
                               const BinningSpec& bs, int fixed_bin_a,
                               std::int64_t pairs_per_bin, std::uint64_t seed,
                               const ProfileOptions& opt) {
    require(fixed_bin_a >= 0 && fixed_bin_a < bs.n_bins_a,
            "fixed_bin_a outside [0, n_bins_a)");
    require(pairs_per_bin >= 1, "pairs_per_bin must be >= 1");
    require(opt.max_events > 0 && opt.batch > 0, "profile: max_events and batch must be > 0");

    const EventSimulator sim(c, pm, bs, opt.eps_node);
    const int nb = bs.n_bins_b;

    // Per-event record of one batch: conditioned outcome per x_b bin, or a
    // skip reason. Filled independently per index, then folded in order.
    struct Slot {
        std::int32_t bin = -1; // -1: not conditioned / out of range
        std::int8_t outcome = 0;
        std::int8_t flag = 0; // 0 none, 1 saturated, 2 node, 3 out-of-range
    };

    ProfileResult res;
    res.bins.resize(static_cast<std::size_t>(nb));
    std::vector<std::int64_t> count(static_cast<std::size_t>(nb), 0);
    std::vector<std::int64_t> sum(static_cast<std::size_t>(nb), 0);

    std::vector<Slot> batch(static_cast<std::size_t>(opt.batch));
    std::int64_t produced = 0;
    auto filled = [&] {
        for (int j = 0; j < nb; ++j) {
            if (count[static_cast<std::size_t>(j)] < pairs_per_bin) return false;
        }
        return true;
    };

    while (!filled() && produced < opt.max_events) {
        const std::int64_t n = std::min<std::int64_t>(opt.batch, opt.max_events - produced);
        parallel_for_index(n, opt.threads, [&](std::int64_t k) {
            Substream ss(seed, static_cast<std::uint64_t>(produced + k));
            Slot& slot = batch[static_cast<std::size_t>(k)];
            slot = Slot{};
            DetectionEvent ev = sim.sample_position(ss);
            if (ev.bin_a != fixed_bin_a) return;
            slot.bin = -2; // conditioned marker
            if (ev.bin_b < 0) {
                slot.flag = 3;
                return;
            }
            try {
                const Complex pw = weak_momentum(
                    pm.side, {ev.x_a, ev.x_b, bs.t_plane}, c, opt.eps_node);
                const double signal = pm.kappa * pw.real();
                if (std::abs(signal) > 1.0) {
                    slot.flag = 1;
                    return;
                }
                slot.outcome = ss.uniform() < 0.5 * (1.0 + signal) ? 1 : -1;
                slot.bin = ev.bin_b;
            } catch (const NodeRegionError&) {
                slot.flag = 2;
            }
        });
        for (std::int64_t k = 0; k < n; ++k) {
            const Slot& slot = batch[static_cast<std::size_t>(k)];
            if (slot.bin == -1 && slot.flag == 0) continue;
            ++res.conditioned_events;
            if (slot.flag == 1) ++res.saturated;
            else if (slot.flag == 2) ++res.node_skipped;
            else if (slot.flag == 3) ++res.out_of_range;
            if (slot.bin >= 0) {
                ++count[static_cast<std::size_t>(slot.bin)];
                sum[static_cast<std::size_t>(slot.bin)] += slot.outcome;
            }
        }
        produced += n;
    }
    res.total_events = produced;
    res.cap_hit = !filled();

    const double center_a = bs.center_a(fixed_bin_a);
    const double wa = (bs.hi_a - bs.lo_a) / bs.n_bins_a;
    const double wb = (bs.hi_b - bs.lo_b) / bs.n_bins_b;
    for (int j = 0; j < nb; ++j) {
        ProfileBin& out = res.bins[static_cast<std::size_t>(j)];
        out.x_b_center = bs.center_b(j);
        const std::int64_t nj = count[static_cast<std::size_t>(j)];
        out.n_used = nj;
        out.underfilled = nj < pairs_per_bin;
        if (nj >= 2) {
            const double mean = static_cast<double>(sum[static_cast<std::size_t>(j)]) /
                                static_cast<double>(nj);
            out.v_hat = mean / pm.kappa;
            // outcomes are +-1, so the sample variance is n/(n-1) (1 - mean^2)
            const double var =
                std::max(0.0, (1.0 - mean * mean) * static_cast<double>(nj) /
                                  static_cast<double>(nj - 1));
            out.stderr_v = std::sqrt(var / static_cast<double>(nj)) / pm.kappa;
        } else {
            out.v_hat = std::numeric_limits<double>::quiet_NaN();
            out.stderr_v = std::numeric_limits<double>::quiet_NaN();
        }
        out.v_analytic = velocity(pm.side, {center_a, out.x_b_center, bs.t_plane}, c,
                                  opt.eps_node);
        // Density-weighted in-bin average: flux / mass over the bin pair.
        // The flux integrand Im(conj(psi) grad psi) stays bounded at nodes.
        const double a0 = center_a - 0.5 * wa;
        const double a1 = center_a + 0.5 * wa;
        const double b0 = out.x_b_center - 0.5 * wb;
        const double b1 = out.x_b_center + 0.5 * wb;
        const double flux = bin_simpson(
            [&](double xa, double xb) {
                const FieldPoint f = evaluate_field({xa, xb, bs.t_plane}, c);
                const Complex grad = pm.side == Side::A ? f.grad_a : f.grad_b;
                return (std::conj(f.psi) * grad).imag();
            },
            a0, a1, b0, b1, 17);
        const double mass = bin_simpson(
            [&](double xa, double xb) { return joint_density({xa, xb, bs.t_plane}, c); },
            a0, a1, b0, b1, 17);
        out.v_analytic_bin_avg = mass > 0.0 ? flux / mass
                                            : std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

} // namespace pilotwave
