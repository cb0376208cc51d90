#ifndef PILOTWAVE_WAVEFIELD_HPP
#define PILOTWAVE_WAVEFIELD_HPP

#include <complex>

#include "pilotwave/errors.hpp"

namespace pilotwave {

using Complex = std::complex<double>;

enum class Slit { Upper, Lower };
enum class Side { A, B };
enum class StateKind { Entangled, ProductUpper };

/// Relative density threshold below which the guidance velocity is treated
/// as undefined (node region).
inline constexpr double kDefaultEpsNode = 1e-12;

/// Gaussian slit geometry for one side, natural units (hbar = m = 1).
struct SlitParams {
    double sigma = 0.1;    ///< packet width at t = 0
    double half_sep = 0.5; ///< a = d/2, half the slit separation

    /// Inter-slit amplitude overlap s = exp(-d^2 / (8 sigma^2)), time invariant
    /// under free evolution. ~3.7e-6 for the defaults.
    double overlap() const;

    /// Packet width sigma_t = sigma * sqrt(1 + (t / (2 sigma^2))^2) at time t.
    double spread_sigma(double t) const;

    void validate(const char* name = "slits") const;
};

/// Full specification of the two-photon state.
struct StateConfig {
    SlitParams slits_a;
    SlitParams slits_b;
    double phi = 0.0; ///< phase behind the lower slit on the A side, [0, 2pi)
    StateKind kind = StateKind::Entangled;

    /// Exact normalization constant: N = (1 + s_a s_b cos phi)^(-1/2) for the
    /// entangled state, 1 for the product baseline. Time independent.
    double normalization() const;

    void validate() const;
};

/// One configuration-space point (x_a, x_b) at time t >= 0.
struct SpacetimePoint {
    double x_a = 0.0;
    double x_b = 0.0;
    double t = 0.0;
};

/// Conversion between lab geometry and natural units: propagation distance z
/// maps to natural time via t = z / (k0 * length_scale^2).
struct ParaxialMap {
    double k0 = 0.0;           ///< central longitudinal wavevector, 1/(lab length)
    double length_scale = 0.0; ///< lab length per natural unit of length
    void validate() const;
};

/// Freely evolved single-slit packet
///   g(x,t) = (2 pi sigma^2)^(-1/4) alpha^(-1/2) exp(-(x-x0)^2 / (4 sigma s_t)),
/// s_t = sigma * alpha, alpha = 1 + i t / (2 sigma^2), x0 = +-half_sep.
/// Unit L2 norm for all t.
Complex packet_amplitude(Slit slit, double x, double t, const SlitParams& p);

/// Analytic d/dx of packet_amplitude: -(x - x0) / (2 sigma s_t) * g(x,t).
Complex packet_gradient(Slit slit, double x, double t, const SlitParams& p);

/// psi(x_a, x_b, t). Entangled:
///   N/sqrt(2) * (g_u(x_a) g_u(x_b) + e^{i phi} g_d(x_a) g_d(x_b));
/// ProductUpper: g_u(x_a) g_u(x_b).
Complex two_photon_amplitude(const SpacetimePoint& pt, const StateConfig& c);

/// Exact partial derivative of psi with respect to the chosen particle's
/// coordinate.
Complex two_photon_gradient(Side side, const SpacetimePoint& pt, const StateConfig& c);

/// psi and both gradients from one evaluation of the four packet amplitudes.
struct FieldPoint {
    Complex psi;
    Complex grad_a;
    Complex grad_b;
};
FieldPoint evaluate_field(const SpacetimePoint& pt, const StateConfig& c);

/// Reference scale for the instantaneous peak of |psi|^2, used for the
/// relative node threshold. N^2 * prod (2 pi sigma_t^2)^(-1/2); within a
/// factor of 2 of the true supremum for any phi.
double density_scale(double t, const StateConfig& c);

/// Bohmian guidance velocity v = Im(d psi / d x_side / psi) in natural units.
/// Throws NodeRegionError when |psi|^2 < eps_node * density_scale(t).
double velocity(Side side, const SpacetimePoint& pt, const StateConfig& c,
                double eps_node = kDefaultEpsNode);

/// Both velocities from a single field evaluation; same node handling.
struct VelocityPair {
    double v_a;
    double v_b;
};
VelocityPair velocity_pair(const SpacetimePoint& pt, const StateConfig& c,
                           double eps_node = kDefaultEpsNode);

/// Momentum weak value conditioned on the two-particle position,
/// p_w = -i (d psi / d x_side) / psi. Re(p_w) equals the guidance velocity;
/// Im(p_w) = -(1/2) d ln rho / d x_side. Node handling as in velocity().
Complex weak_momentum(Side side, const SpacetimePoint& pt, const StateConfig& c,
                      double eps_node = kDefaultEpsNode);

/// Two-particle detection probability density |psi|^2.
double joint_density(const SpacetimePoint& pt, const StateConfig& c);

/// Single-particle marginal in closed form:
///   N^2 [ (|g_u|^2 + |g_d|^2)/2 + s_other Re(e^{i phi} conj(g_u) g_d) ],
/// with s_other the other side's overlap; |g_u|^2 for the product state.
/// Depends on phi only through terms bounded by the overlap, which is the
/// no-signaling statement.
double marginal_density(Side side, double x, double t, const StateConfig& c);

/// Natural-unit time for longitudinal lab position z >= 0. Linear in z.
double paraxial_time(double z, const ParaxialMap& map);

} // namespace pilotwave

#endif
