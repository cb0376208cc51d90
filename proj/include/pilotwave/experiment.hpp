#ifndef PILOTWAVE_EXPERIMENT_HPP
#define PILOTWAVE_EXPERIMENT_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "pilotwave/errors.hpp"
#include "pilotwave/rng.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave {

/// Linear-response pointer: a binary +-1 readout with success probability
/// (1 + kappa * Re p_w) / 2, the minimal abstraction of the polarization
/// rotation proportional to the momentum weak value. kappa = chi * t_int.
struct PointerModel {
    double kappa = 0.1;
    Side side = Side::B; ///< which photon's momentum is weakly measured
    void validate() const;
};

/// Detection plane: time, per-side detector ranges and bin counts.
struct BinningSpec {
    double t_plane = 4.0;
    double lo_a = -20.5, hi_a = 20.5;
    double lo_b = -20.0, hi_b = 20.0;
    int n_bins_a = 41;
    int n_bins_b = 40;

    int bin_a(double x) const { return bin_index(x, lo_a, hi_a, n_bins_a); }
    int bin_b(double x) const { return bin_index(x, lo_b, hi_b, n_bins_b); }
    double center_a(int i) const { return lo_a + (i + 0.5) * (hi_a - lo_a) / n_bins_a; }
    double center_b(int j) const { return lo_b + (j + 0.5) * (hi_b - lo_b) / n_bins_b; }

    /// Fraction of each side's marginal probability inside the declared
    /// range at t_plane. Full-plane mapping requires >= 99.9% per side;
    /// a profile scan may deliberately cover less.
    std::pair<double, double> coverage(const StateConfig& c) const;

    void validate() const;

private:
    static int bin_index(double x, double lo, double hi, int n) {
        if (x < lo || x >= hi) return -1;
        const int i = static_cast<int>((x - lo) / (hi - lo) * n);
        return i >= n ? n - 1 : i;
    }
};

/// One simulated coincidence.
struct DetectionEvent {
    double x_a = 0.0;
    double x_b = 0.0;
    int bin_a = -1; ///< -1 when outside the declared range
    int bin_b = -1;
    int outcome = 0; ///< pointer readout, +-1
    bool out_of_range = false;
};

/// Feasibility arithmetic inputs.
struct BudgetSpec {
    std::int64_t n_planes = 25;
    std::int64_t n_bins = 40; ///< per side and plane
    std::int64_t pairs_per_bin = 1000;
    double pair_rate = 1e6; ///< detected coincidences per second
    void validate() const;
};

/// Total acquisition time in seconds:
///   n_planes * n_bins^2 * pairs_per_bin * (n_bins^2 / pair_rate).
/// The detectors dwell on one bin pair at a time, so the per-pair rate is
/// pair_rate / n_bins^2 and all n_bins^2 combinations need pairs_per_bin
/// coincidences. Exactly multiplicative in every factor.
double budget_seconds(const BudgetSpec& b);

/// Position sampler for one detection plane: the joint density is tabulated
/// on a cells x cells grid over the state's full support, cell masses are
/// drawn by inverse CDF over the tabulated prefix sums, and the value inside
/// the cell is polished by rejection against the exact density (per-cell
/// envelope from corner/center scans). Exact up to the envelope, which is
/// validated during construction.
class PlaneSampler {
public:
    PlaneSampler(const StateConfig& c, double t_plane, int cells = 1024);

    std::pair<double, double> sample(Substream& stream) const;

    double support_lo_a() const { return lo_a_; }
    double support_hi_a() const { return hi_a_; }
    double support_lo_b() const { return lo_b_; }
    double support_hi_b() const { return hi_b_; }

private:
    StateConfig config_;
    double t_;
    int cells_;
    double lo_a_, hi_a_, lo_b_, hi_b_;
    std::vector<double> envelope_; ///< per-cell density bound
    std::vector<double> cum_;      ///< prefix sums of envelope * cell area
    double total_ = 0.0;
};

/// Simulates coincidences and weak readouts for one plane. Thread safe after
/// construction; each event consumes one substream.
class EventSimulator {
public:
    EventSimulator(const StateConfig& c, const PointerModel& pm, const BinningSpec& bs,
                   double eps_node = kDefaultEpsNode);

    /// One coincidence: positions from the plane sampler, bins from the
    /// declared ranges (out-of-range events are flagged, not dropped), and
    /// the pointer outcome. Throws SaturationError when kappa * |Re p_w| > 1
    /// at the sampled point and NodeRegionError at a density node.
    DetectionEvent simulate_event(Substream& stream) const;

    /// Positions and bins only; used where the pointer readout of an
    /// unconditioned event is never consumed. Draws the same position values
    /// as simulate_event for the same substream.
    DetectionEvent sample_position(Substream& stream) const;

    const BinningSpec& binning() const { return binning_; }
    const PlaneSampler& sampler() const { return sampler_; }

private:
    StateConfig config_;
    PointerModel pointer_;
    BinningSpec binning_;
    double eps_node_;
    PlaneSampler sampler_;
};

struct ProfileBin {
    double x_b_center = 0.0;
    double v_hat = 0.0;            ///< mean(outcome) / kappa
    double stderr_v = 0.0;         ///< sample std / (kappa sqrt(n))
    std::int64_t n_used = 0;
    double v_analytic = 0.0;         ///< velocity at (fixed bin center, x_b center)
    double v_analytic_bin_avg = 0.0; ///< density-weighted average over the bin pair
    bool underfilled = false;
};

struct ProfileResult {
    std::vector<ProfileBin> bins;
    std::int64_t total_events = 0;       ///< coincidences generated
    std::int64_t conditioned_events = 0; ///< events landing in the fixed A bin
    std::int64_t saturated = 0;          ///< conditioned events with kappa |v| > 1
    std::int64_t node_skipped = 0;       ///< conditioned events at a density node
    std::int64_t out_of_range = 0;       ///< conditioned events outside the B range
    bool cap_hit = false;
};

struct ProfileOptions {
    std::int64_t max_events = 40'000'000;
    std::int64_t batch = 1 << 16;
    int threads = 1;
    double eps_node = kDefaultEpsNode;
};

/// Reconstructs the velocity profile of the pointer side versus x_b from
/// weak readouts of events landing in the fixed A-side bin. Events
/// accumulate until every bin holds pairs_per_bin readouts or max_events is
/// reached, in which case short bins are flagged underfilled. Saturated and
/// node-region events are counted and discarded. Deterministic in
/// (seed, config) for any thread count.
ProfileResult estimate_profile(const StateConfig& c, const PointerModel& pm,
                               const BinningSpec& bs, int fixed_bin_a,
                               std::int64_t pairs_per_bin, std::uint64_t seed,
                               const ProfileOptions& opt = {});

} // namespace pilotwave

#endif
