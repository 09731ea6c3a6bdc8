#include "njpo/model.hpp"

#include <cmath>

namespace njpo {

double wrap_phase(double theta) {
    double w = std::remainder(theta, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

void ModeParams::validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
    if (!(kerr > 0.0)) throw std::invalid_argument("Kerr coefficient must be positive");
    if (!(gamma_ext > 0.0) || !(gamma_ext <= gamma_total))
        throw std::invalid_argument("loss rates must satisfy 0 < gamma_ext <= gamma_total");
}

TwoModeSystem TwoModeSystem::make(const ModeParams& m3, const ModeParams& m4) {
    m3.validate();
    m4.validate();
    TwoModeSystem sys;
    sys.mode3 = m3;
    sys.mode4 = m4;
    sys.cross_kerr = std::sqrt(m3.kerr * m4.kerr);
    sys.gamma_eff = std::sqrt(m3.gamma_total * m4.gamma_total);
    return sys;
}

TwoModeSystem TwoModeSystem::measured_device() {
    ModeParams m3{from_hz(4.345e9), from_hz(0.56e6), from_hz(0.52e6), from_hz(71e3)};
    ModeParams m4{from_hz(6.150e9), from_hz(0.78e6), from_hz(0.70e6), from_hz(178e3)};
    return make(m3, m4);
}

const ModeParams& TwoModeSystem::mode(int index) const {
    if (index == 3) return mode3;
    if (index == 4) return mode4;
    throw std::invalid_argument("mode index must be 3 or 4");
}

void TwoModeSystem::validate() const {
    mode3.validate();
    mode4.validate();
    const double ck = mode3.kerr * mode4.kerr;
    const double ge = mode3.gamma_total * mode4.gamma_total;
    if (std::abs(cross_kerr * cross_kerr - ck) > 1e-12 * ck)
        throw std::invalid_argument("stale cross_kerr cache");
    if (std::abs(gamma_eff * gamma_eff - ge) > 1e-12 * ge)
        throw std::invalid_argument("stale gamma_eff cache");
}

void PumpDrive::validate() const {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("pump amplitude must be >= 0");
}

void InjectionTone::validate() const {
    if (mode_index != 3 && mode_index != 4)
        throw std::invalid_argument("tone mode index must be 3 or 4");
    if (!(amplitude >= 0.0)) throw std::invalid_argument("tone amplitude must be >= 0");
    if (!(phase > -std::numbers::pi - 1e-12) || !(phase <= std::numbers::pi + 1e-12))
        throw std::invalid_argument("tone phase must lie in (-pi, pi]");
}

const char* to_string(StabilityRegion r) {
    switch (r) {
        case StabilityRegion::GroundOnly: return "ground-only";
        case StabilityRegion::OscillationOnly: return "oscillation";
        case StabilityRegion::Bistable: return "bistable";
    }
    return "?";
}

KerrDetunings kerr_detunings_photons(const TwoModeSystem& sys, double delta,
                                     double n3, double n4) {
    KerrDetunings z;
    z.zeta3 = delta + sys.mode3.kerr * n3 + 2.0 * sys.cross_kerr * n4;
    z.zeta4 = delta + sys.mode4.kerr * n4 + 2.0 * sys.cross_kerr * n3;
    return z;
}

KerrDetunings kerr_detunings(const TwoModeSystem& sys, const PumpDrive& pump,
                             const FieldState& state) {
    return kerr_detunings_photons(sys, pump.delta, std::norm(state.a3),
                                  std::norm(state.a4));
}

double threshold_detuning(const TwoModeSystem& sys, double epsilon) {
    const double g = sys.gamma_eff;
    if (epsilon < g)
        throw below_threshold_error("below parametric threshold: eps < Gamma");
    const double r = epsilon / g;
    return 0.5 * (sys.mode3.gamma_total + sys.mode4.gamma_total) *
           std::sqrt(r * r - 1.0);
}

namespace {
// Boundary tie-break helper: |a - b| within 1e-12 relative of scale.
bool near(double a, double b, double scale) {
    return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), scale});
}
}  // namespace

StabilityRegion classify_region(const TwoModeSystem& sys, const PumpDrive& pump) {
    const double g = sys.gamma_eff;
    if (pump.epsilon < g || near(pump.epsilon, g, g))
        return StabilityRegion::GroundOnly;
    const double dth = threshold_detuning(sys, pump.epsilon);
    if (pump.delta > dth || near(pump.delta, dth, g))
        return StabilityRegion::GroundOnly;
    if (pump.delta < -dth && !near(pump.delta, -dth, g))
        return StabilityRegion::Bistable;
    return StabilityRegion::OscillationOnly;
}

SteadyStatePhotons steady_state_photons(const TwoModeSystem& sys,
                                        const PumpDrive& pump) {
    const double g3 = sys.mode3.gamma_total;
    const double g4 = sys.mode4.gamma_total;
    if (pump.epsilon < sys.gamma_eff)
        throw ground_state_error("ground state only: eps < Gamma");
    const double dth = threshold_detuning(sys, pump.epsilon);
    if (pump.delta > dth)
        throw ground_state_error("ground state only: delta > delta_th");
    const double denom = sys.mode3.kerr * g4 + sys.mode4.kerr * g3 +
                         2.0 * sys.cross_kerr * (g3 + g4);
    SteadyStatePhotons out;
    out.n3 = 2.0 * g4 * (dth - pump.delta) / denom;
    out.n4 = g3 / g4 * out.n3;
    return out;
}

OutputFlux output_flux(const TwoModeSystem& sys, const SteadyStatePhotons& photons) {
    if (!(photons.n3 >= 0.0) || !(photons.n4 >= 0.0))
        throw std::invalid_argument("photon numbers must be >= 0");
    return {2.0 * sys.mode3.gamma_ext * photons.n3,
            2.0 * sys.mode4.gamma_ext * photons.n4};
}

OnsetShift onset_frequency_shift(const TwoModeSystem& sys, double delta) {
    const double g3 = sys.mode3.gamma_total;
    const double g4 = sys.mode4.gamma_total;
    const double d3 = delta * (g3 - g4) / (g3 + g4);
    return {d3, -d3};
}

double oscillation_frequency_shift(const TwoModeSystem& sys, const PumpDrive& pump) {
    const SteadyStatePhotons ss = steady_state_photons(sys, pump);
    const KerrDetunings z = kerr_detunings_photons(sys, pump.delta, ss.n3, ss.n4);
    const double g3 = sys.mode3.gamma_total;
    const double g4 = sys.mode4.gamma_total;
    return (g3 * z.zeta4 - g4 * z.zeta3) / (g3 + g4);
}

double phase_sum(const TwoModeSystem& sys, double epsilon) {
    const double g = sys.gamma_eff;
    if (epsilon <= g)
        throw below_threshold_error("below parametric threshold: eps <= Gamma");
    // Theta in (pi/2, pi) with tan(Theta) = -Gamma/sqrt(eps^2 - Gamma^2).
    return std::numbers::pi -
           std::atan(g / std::sqrt(epsilon * epsilon - g * g));
}

double locked_phase(const TwoModeSystem& sys, double epsilon, double theta_in) {
    const double g = sys.gamma_eff;
    if (epsilon <= g)
        throw below_threshold_error("below parametric threshold: eps <= Gamma");
    const double shift = std::atan(1.5 * g / std::sqrt(epsilon * epsilon - g * g));
    return wrap_phase(theta_in - shift);
}

double classical_hamiltonian(const TwoModeSystem& sys, const PumpDrive& pump,
                             const FieldState& state) {
    const double n3 = std::norm(state.a3);
    const double n4 = std::norm(state.a4);
    double h = -(pump.delta * n3 + 0.5 * sys.mode3.kerr * n3 * n3) -
               (pump.delta * n4 + 0.5 * sys.mode4.kerr * n4 * n4) -
               2.0 * sys.cross_kerr * n3 * n4;
    h -= pump.epsilon * 2.0 * std::real(state.a3 * state.a4);
    return h;
}

FieldState steady_state_field(const TwoModeSystem& sys, const PumpDrive& pump,
                              double psi) {
    const SteadyStatePhotons ss = steady_state_photons(sys, pump);
    const double theta = (pump.epsilon > sys.gamma_eff)
                             ? phase_sum(sys, pump.epsilon)
                             : 0.5 * std::numbers::pi;
    FieldState s;
    s.a3 = std::polar(std::sqrt(ss.n3), 0.5 * (theta + psi));
    s.a4 = std::polar(std::sqrt(ss.n4), 0.5 * (theta - psi));
    return s;
}

double input_photon_number(const TwoModeSystem& sys, const InjectionTone& tone) {
    tone.validate();
    const double g0 = sys.mode(tone.mode_index).gamma_ext;
    return tone.amplitude * tone.amplitude / (2.0 * g0);
}

double tone_amplitude_for_photon_number(const TwoModeSystem& sys, int mode_index,
                                        double n_photons) {
    if (!(n_photons >= 0.0)) throw std::invalid_argument("photon number must be >= 0");
    return std::sqrt(2.0 * sys.mode(mode_index).gamma_ext * n_photons);
}

}  // namespace njpo
