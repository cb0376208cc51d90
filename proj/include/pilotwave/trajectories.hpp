#ifndef PILOTWAVE_TRAJECTORIES_HPP
#define PILOTWAVE_TRAJECTORIES_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "pilotwave/errors.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave {

enum class IntegratorMethod { RK4, Euler };

/// Fixed-step integration of the guidance equation. RK4 is the production
/// method; Euler exists as a cross-check oracle only. Near nodes the step is
/// halved locally up to max_step_shrink times before the trajectory is
/// abandoned.
struct IntegratorConfig {
    double dt = 0.002;
    double t_end = 4.0;
    IntegratorMethod method = IntegratorMethod::RK4;
    double eps_node = kDefaultEpsNode;
    int max_step_shrink = 12;
    /// Record every record_stride-th base step (first and last samples are
    /// always kept); 0 keeps endpoints only. Large ensembles need thinning.
    std::int64_t record_stride = 1;

    void validate() const;
};

struct TrajectorySample {
    double t;
    double x_a;
    double x_b;
    double v_a;
    double v_b;
};

/// Time-ordered configuration-space path. t increases strictly from 0;
/// velocities are finite at every retained sample.
struct Trajectory {
    std::vector<TrajectorySample> samples;
};

/// Result of one integration; `stalled` marks trajectories abandoned at a
/// node, with the path retained up to last_valid_time.
struct IntegrationOutcome {
    Trajectory trajectory;
    bool stalled = false;
    double last_valid_time = 0.0;
};

struct EnsembleSpec {
    std::int64_t n = 1;
    std::uint64_t seed = 0;
    void validate() const;
};

/// i.i.d. draws from |psi(x_a, x_b, 0)|^2: the two-branch Gaussian mixture,
/// with the O(s) interference cross term handled exactly (extra mixture
/// component for cos phi >= 0, rejection for cos phi < 0). Sample i consumes
/// its own substream of the seed, so the result is deterministic and
/// independent of execution order.
std::vector<std::pair<double, double>> sample_initial(const StateConfig& c,
                                                      const EnsembleSpec& spec);

/// Integrates (dx_a/dt, dx_b/dt) = (v_a, v_b) from x0 at t = 0. Throws
/// std::invalid_argument when the initial density is below the node
/// threshold and NodeStallError when step shrinking is exhausted.
Trajectory integrate_pair(std::pair<double, double> x0, const StateConfig& c,
                          const IntegratorConfig& ic);

/// Like integrate_pair but reports a stall in the outcome instead of
/// throwing; used by ensemble runs where stalls are collected, not fatal.
IntegrationOutcome integrate_pair_outcome(std::pair<double, double> x0,
                                          const StateConfig& c,
                                          const IntegratorConfig& ic);

/// sample_initial followed by element-wise integrate_pair, optionally on
/// several threads. Results are assembled in input order; output is
/// schedule independent.
std::vector<IntegrationOutcome> integrate_ensemble(const StateConfig& c,
                                                   const EnsembleSpec& spec,
                                                   const IntegratorConfig& ic,
                                                   int threads = 1);

/// |x_b^{phi1}(t_end) - x_b^{phi2}(t_end)| for identical initial conditions:
/// the remote-action signature in one number. Propagates NodeStallError.
double divergence_metric(std::pair<double, double> x0, const StateConfig& base,
                         double phi1, double phi2, const IntegratorConfig& ic);

} // namespace pilotwave

#endif
