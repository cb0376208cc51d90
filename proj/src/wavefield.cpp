#include "pilotwave/wavefield.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pilotwave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace

double SlitParams::overlap() const {
    const double d = 2.0 * half_sep;
    return std::exp(-d * d / (8.0 * sigma * sigma));
}

double SlitParams::spread_sigma(double t) const {
    const double tau = t / (2.0 * sigma * sigma);
    return sigma * std::sqrt(1.0 + tau * tau);
}

void SlitParams::validate(const char* name) const {
    const std::string n = name;
    require(std::isfinite(sigma) && sigma > 0.0, n + ".sigma must be > 0");
    require(std::isfinite(half_sep) && half_sep > 0.0, n + ".half_sep must be > 0");
}

double StateConfig::normalization() const {
    if (kind == StateKind::ProductUpper) return 1.0;
    const double s2 = slits_a.overlap() * slits_b.overlap();
    return 1.0 / std::sqrt(1.0 + s2 * std::cos(phi));
}

void StateConfig::validate() const {
    slits_a.validate("slits_a");
    slits_b.validate("slits_b");
    require(std::isfinite(phi) && phi >= 0.0 && phi < 2.0 * kPi,
            "phi must lie in [0, 2*pi)");
}

void ParaxialMap::validate() const {
    require(std::isfinite(k0) && k0 > 0.0, "paraxial.k0 must be > 0");
    require(std::isfinite(length_scale) && length_scale > 0.0,
            "paraxial.length_scale must be > 0");
}

Complex packet_amplitude(Slit slit, double x, double t, const SlitParams& p) {
    const double x0 = (slit == Slit::Upper) ? p.half_sep : -p.half_sep;
    const Complex alpha{1.0, t / (2.0 * p.sigma * p.sigma)};
    const Complex s_t = p.sigma * alpha;
    const double dx = x - x0;
    const double norm0 = std::pow(2.0 * kPi * p.sigma * p.sigma, -0.25);
    return norm0 / std::sqrt(alpha) * std::exp(-dx * dx / (4.0 * p.sigma * s_t));
}

Complex packet_gradient(Slit slit, double x, double t, const SlitParams& p) {
    const double x0 = (slit == Slit::Upper) ? p.half_sep : -p.half_sep;
    const Complex alpha{1.0, t / (2.0 * p.sigma * p.sigma)};
    const Complex s_t = p.sigma * alpha;
    const double dx = x - x0;
    return -dx / (2.0 * p.sigma * s_t) * packet_amplitude(slit, x, t, p);
}

namespace {

struct PacketEval {
    Complex amp;
    Complex damp;
};

// amplitude and its derivative from one exponential evaluation
PacketEval packet_eval(Slit slit, double x, double t, const SlitParams& p) {
    const double x0 = (slit == Slit::Upper) ? p.half_sep : -p.half_sep;
    const Complex alpha{1.0, t / (2.0 * p.sigma * p.sigma)};
    const Complex s_t = p.sigma * alpha;
    const double dx = x - x0;
    const double norm0 = std::pow(2.0 * kPi * p.sigma * p.sigma, -0.25);
    const Complex amp = norm0 / std::sqrt(alpha) * std::exp(-dx * dx / (4.0 * p.sigma * s_t));
    return {amp, -dx / (2.0 * p.sigma * s_t) * amp};
}

Complex psi_only(const SpacetimePoint& pt, const StateConfig& c) {
    const double t = pt.t;
    const Complex gu_a = packet_amplitude(Slit::Upper, pt.x_a, t, c.slits_a);
    const Complex gu_b = packet_amplitude(Slit::Upper, pt.x_b, t, c.slits_b);
    if (c.kind == StateKind::ProductUpper) return gu_a * gu_b;
    const Complex gd_a = packet_amplitude(Slit::Lower, pt.x_a, t, c.slits_a);
    const Complex gd_b = packet_amplitude(Slit::Lower, pt.x_b, t, c.slits_b);
    const Complex phase = std::exp(kI * c.phi);
    const double pref = c.normalization() / std::numbers::sqrt2;
    return pref * (gu_a * gu_b + phase * (gd_a * gd_b));
}

} // namespace

FieldPoint evaluate_field(const SpacetimePoint& pt, const StateConfig& c) {
    const double t = pt.t;
    const PacketEval u_a = packet_eval(Slit::Upper, pt.x_a, t, c.slits_a);
    const PacketEval u_b = packet_eval(Slit::Upper, pt.x_b, t, c.slits_b);
    if (c.kind == StateKind::ProductUpper) {
        return {u_a.amp * u_b.amp, u_a.damp * u_b.amp, u_a.amp * u_b.damp};
    }
    const PacketEval d_a = packet_eval(Slit::Lower, pt.x_a, t, c.slits_a);
    const PacketEval d_b = packet_eval(Slit::Lower, pt.x_b, t, c.slits_b);
    const Complex phase = std::exp(kI * c.phi);
    const double pref = c.normalization() / std::numbers::sqrt2;
    // packet products are grouped first so the exchange and parity
    // symmetries hold exactly in floating point
    return {pref * (u_a.amp * u_b.amp + phase * (d_a.amp * d_b.amp)),
            pref * (u_a.damp * u_b.amp + phase * (d_a.damp * d_b.amp)),
            pref * (u_a.amp * u_b.damp + phase * (d_a.amp * d_b.damp))};
}

Complex two_photon_amplitude(const SpacetimePoint& pt, const StateConfig& c) {
    return psi_only(pt, c);
}

Complex two_photon_gradient(Side side, const SpacetimePoint& pt, const StateConfig& c) {
    const FieldPoint f = evaluate_field(pt, c);
    return side == Side::A ? f.grad_a : f.grad_b;
}

double density_scale(double t, const StateConfig& c) {
    const double peak_a = 1.0 / std::sqrt(2.0 * kPi) / c.slits_a.spread_sigma(t);
    const double peak_b = 1.0 / std::sqrt(2.0 * kPi) / c.slits_b.spread_sigma(t);
    const double n = c.normalization();
    return n * n * peak_a * peak_b;
}

namespace {

FieldPoint field_above_node(const SpacetimePoint& pt, const StateConfig& c,
                            double eps_node) {
    if (!(eps_node > 0.0)) throw std::invalid_argument("eps_node must be > 0");
    const FieldPoint f = evaluate_field(pt, c);
    const double rho = std::norm(f.psi);
    if (rho < eps_node * density_scale(pt.t, c)) {
        throw NodeRegionError("velocity undefined: |psi|^2 below node threshold at t=" +
                              std::to_string(pt.t));
    }
    return f;
}

} // namespace

double velocity(Side side, const SpacetimePoint& pt, const StateConfig& c,
                double eps_node) {
    const FieldPoint f = field_above_node(pt, c, eps_node);
    const Complex g = (side == Side::A ? f.grad_a : f.grad_b) / f.psi;
    return g.imag();
}

VelocityPair velocity_pair(const SpacetimePoint& pt, const StateConfig& c,
                           double eps_node) {
    const FieldPoint f = field_above_node(pt, c, eps_node);
    return {(f.grad_a / f.psi).imag(), (f.grad_b / f.psi).imag()};
}

Complex weak_momentum(Side side, const SpacetimePoint& pt, const StateConfig& c,
                      double eps_node) {
    const FieldPoint f = field_above_node(pt, c, eps_node);
    const Complex g = (side == Side::A ? f.grad_a : f.grad_b) / f.psi;
    // -i * g
    return {g.imag(), -g.real()};
}

double joint_density(const SpacetimePoint& pt, const StateConfig& c) {
    return std::norm(psi_only(pt, c));
}

double marginal_density(Side side, double x, double t, const StateConfig& c) {
    const SlitParams& own = (side == Side::A) ? c.slits_a : c.slits_b;
    const Complex gu = packet_amplitude(Slit::Upper, x, t, own);
    if (c.kind == StateKind::ProductUpper) return std::norm(gu);
    const SlitParams& other = (side == Side::A) ? c.slits_b : c.slits_a;
    const Complex gd = packet_amplitude(Slit::Lower, x, t, own);
    const Complex phase = std::exp(kI * c.phi);
    const double n = c.normalization();
    const double cross = (phase * std::conj(gu) * gd).real();
    return n * n * (0.5 * (std::norm(gu) + std::norm(gd)) + other.overlap() * cross);
}

double paraxial_time(double z, const ParaxialMap& map) {
    map.validate();
    if (!(std::isfinite(z) && z >= 0.0)) throw std::invalid_argument("z must be >= 0");
    return z / (map.k0 * map.length_scale * map.length_scale);
}

} // namespace pilotwave
