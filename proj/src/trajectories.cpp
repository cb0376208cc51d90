#include "pilotwave/trajectories.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pilotwave/parallel.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

struct Xy {
    double a;
    double b;
};

Xy field(const Xy& x, double t, const StateConfig& c, double eps_node) {
    const VelocityPair v = velocity_pair({x.a, x.b, t}, c, eps_node);
    return {v.v_a, v.v_b};
}

Xy rk4_step(const Xy& x, double t, double h, const StateConfig& c, double eps_node) {
    const Xy k1 = field(x, t, c, eps_node);
    const Xy k2 = field({x.a + 0.5 * h * k1.a, x.b + 0.5 * h * k1.b}, t + 0.5 * h, c, eps_node);
    const Xy k3 = field({x.a + 0.5 * h * k2.a, x.b + 0.5 * h * k2.b}, t + 0.5 * h, c, eps_node);
    const Xy k4 = field({x.a + h * k3.a, x.b + h * k3.b}, t + h, c, eps_node);
    return {x.a + h / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a),
            x.b + h / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b)};
}

Xy euler_step(const Xy& x, double t, double h, const StateConfig& c, double eps_node) {
    const Xy k = field(x, t, c, eps_node);
    return {x.a + h * k.a, x.b + h * k.b};
}

/// Advances one step of size h, splitting it in half (recursively, up to
/// `shrink` levels) whenever a stage lands in a node region.
Xy advance(const Xy& x, double t, double h, int shrink, const StateConfig& c,
           const IntegratorConfig& ic) {
    try {
        return ic.method == IntegratorMethod::RK4 ? rk4_step(x, t, h, c, ic.eps_node)
                                                  : euler_step(x, t, h, c, ic.eps_node);
    } catch (const NodeRegionError&) {
        if (shrink <= 0) {
            throw NodeStallError("trajectory stalled in a node region at t=" +
                                     std::to_string(t),
                                 t);
        }
        const Xy mid = advance(x, t, 0.5 * h, shrink - 1, c, ic);
        return advance(mid, t + 0.5 * h, 0.5 * h, shrink - 1, c, ic);
    }
}

} // namespace

void IntegratorConfig::validate() const {
    require(std::isfinite(dt) && dt > 0.0, "integrator.dt must be > 0");
    require(std::isfinite(t_end) && t_end > 0.0, "integrator.t_end must be > 0");
    require(eps_node > 0.0, "integrator.eps_node must be > 0");
    require(max_step_shrink >= 0, "integrator.max_step_shrink must be >= 0");
    require(record_stride >= 0, "integrator.record_stride must be >= 0");
}

void EnsembleSpec::validate() const {
    require(n >= 1, "ensemble.n must be >= 1");
}

std::vector<std::pair<double, double>> sample_initial(const StateConfig& c,
                                                      const EnsembleSpec& spec) {
    c.validate();
    spec.validate();
    const double sig_a = c.slits_a.sigma;
    const double sig_b = c.slits_b.sigma;
    const double a_a = c.slits_a.half_sep;
    const double a_b = c.slits_b.half_sep;
    const double gamma = c.kind == StateKind::ProductUpper
                             ? 0.0
                             : c.slits_a.overlap() * c.slits_b.overlap() * std::cos(c.phi);

    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(spec.n));
    for (std::int64_t i = 0; i < spec.n; ++i) {
        Substream ss(spec.seed, static_cast<std::uint64_t>(i));
        double xa;
        double xb;
        if (c.kind == StateKind::ProductUpper) {
            xa = ss.normal(a_a, sig_a);
            xb = ss.normal(a_b, sig_b);
        } else if (gamma >= 0.0) {
            // Exact mixture: branch pair with weight 1/(1+gamma), centered
            // cross component with weight gamma/(1+gamma).
            if (ss.uniform() * (1.0 + gamma) < gamma) {
                xa = ss.normal(0.0, sig_a);
                xb = ss.normal(0.0, sig_b);
            } else {
                const double s = ss.uniform() < 0.5 ? 1.0 : -1.0;
                xa = ss.normal(s * a_a, sig_a);
                xb = ss.normal(s * a_b, sig_b);
            }
        } else {
            // Negative cross term: rejection against the branch mixture.
            // p / (N^2 q) = 1 + cos(phi) sech(delta/2) with
            // delta = 2 a_a x_a / sigma_a^2 + 2 a_b x_b / sigma_b^2; the
            // overlap factors cancel against sqrt(U D) exactly.
            const double cphi = std::cos(c.phi);
            for (;;) {
                const double s = ss.uniform() < 0.5 ? 1.0 : -1.0;
                xa = ss.normal(s * a_a, sig_a);
                xb = ss.normal(s * a_b, sig_b);
                const double delta =
                    2.0 * a_a * xa / (sig_a * sig_a) + 2.0 * a_b * xb / (sig_b * sig_b);
                const double accept = 1.0 + cphi / std::cosh(0.5 * delta);
                if (ss.uniform() < accept) break;
            }
        }
        out[static_cast<std::size_t>(i)] = {xa, xb};
    }
    return out;
}

IntegrationOutcome integrate_pair_outcome(std::pair<double, double> x0,
                                          const StateConfig& c,
                                          const IntegratorConfig& ic) {
    c.validate();
    ic.validate();

    const double rho0 = joint_density({x0.first, x0.second, 0.0}, c);
    require(rho0 >= ic.eps_node * density_scale(0.0, c),
            "x0: initial density below the node threshold");

    const auto n_steps =
        static_cast<std::int64_t>(std::ceil(ic.t_end / ic.dt - 1e-12));
    const std::int64_t stride = ic.record_stride;

    IntegrationOutcome out;
    Xy x{x0.first, x0.second};

    auto record = [&](double t, const Xy& pos) {
        const VelocityPair v = velocity_pair({pos.a, pos.b, t}, c, ic.eps_node);
        out.trajectory.samples.push_back({t, pos.a, pos.b, v.v_a, v.v_b});
    };

    try {
        record(0.0, x);
        for (std::int64_t i = 0; i < n_steps; ++i) {
            const double t = i * ic.dt;
            const double t_next = std::min((i + 1) * ic.dt, ic.t_end);
            x = advance(x, t, t_next - t, ic.max_step_shrink, c, ic);
            const bool keep = (i + 1 == n_steps) || (stride > 0 && (i + 1) % stride == 0);
            if (keep) record(t_next, x);
            out.last_valid_time = t_next;
        }
    } catch (const NodeStallError& stall) {
        out.stalled = true;
        out.last_valid_time = stall.last_valid_time;
    } catch (const NodeRegionError&) {
        // A recorded sample point itself sits in a node region.
        out.stalled = true;
    }
    return out;
}

Trajectory integrate_pair(std::pair<double, double> x0, const StateConfig& c,
                          const IntegratorConfig& ic) {
    IntegrationOutcome out = integrate_pair_outcome(x0, c, ic);
    if (out.stalled) {
        throw NodeStallError("trajectory stalled in a node region at t=" +
                                 std::to_string(out.last_valid_time),
                             out.last_valid_time);
    }
    return std::move(out.trajectory);
}

std::vector<IntegrationOutcome> integrate_ensemble(const StateConfig& c,
                                                   const EnsembleSpec& spec,
                                                   const IntegratorConfig& ic,
                                                   int threads) {
    const auto starts = sample_initial(c, spec);
    std::vector<IntegrationOutcome> out(starts.size());
    parallel_for_index(
        static_cast<std::int64_t>(starts.size()), threads, [&](std::int64_t i) {
            const auto& x0 = starts[static_cast<std::size_t>(i)];
            IntegrationOutcome& slot = out[static_cast<std::size_t>(i)];
            // a |psi|^2 draw can land below the node threshold; that is a
            // stall at t = 0, not a caller error
            if (joint_density({x0.first, x0.second, 0.0}, c) <
                ic.eps_node * density_scale(0.0, c)) {
                slot.stalled = true;
                slot.last_valid_time = 0.0;
                return;
            }
            slot = integrate_pair_outcome(x0, c, ic);
        });
    return out;
}

double divergence_metric(std::pair<double, double> x0, const StateConfig& base,
                         double phi1, double phi2, const IntegratorConfig& ic) {
    StateConfig c1 = base;
    StateConfig c2 = base;
    c1.phi = phi1;
    c2.phi = phi2;
    const Trajectory t1 = integrate_pair(x0, c1, ic);
    const Trajectory t2 = integrate_pair(x0, c2, ic);
    return std::abs(t1.samples.back().x_b - t2.samples.back().x_b);
}

} // namespace pilotwave
