#include "njpo/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "njpo/model.hpp"

namespace njpo {

void IntegratorConfig::validate() const {
    if (!(dt >= 0.0)) throw std::invalid_argument("dt must be >= 0");
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
    if (!(seed_amplitude > 0.0))
        throw std::invalid_argument("seed amplitude must be positive");
}

DriveTone drive_tone_for(const TwoModeSystem& sys, const PumpDrive& pump,
                         const InjectionTone& tone) {
    tone.validate();
    const double d0 = oscillation_frequency_shift(sys, pump);
    const double free_run = (tone.mode_index == 3) ? d0 : -d0;
    DriveTone out;
    out.mode_index = tone.mode_index;
    out.amplitude = tone.amplitude;
    out.frame_rate = -(free_run + tone.detuning);
    out.phase = tone.phase;
    return out;
}

double suggest_dt(const TwoModeSystem& sys, const PumpDrive& pump) {
    double rate = std::max({sys.mode3.gamma_total, sys.mode4.gamma_total,
                            pump.epsilon, std::abs(pump.delta)});
    try {
        const SteadyStatePhotons ss = steady_state_photons(sys, pump);
        const KerrDetunings z = kerr_detunings_photons(sys, pump.delta, ss.n3, ss.n4);
        rate = std::max({rate, std::abs(z.zeta3), std::abs(z.zeta4)});
    } catch (const ground_state_error&) {
    }
    return 0.07 / rate;
}

namespace {

struct DriftParams {
    double g3, g4, eps, delta;
    double k3, k4, kx;
    double b3_amp = 0.0, b3_rate = 0.0, b3_phase = 0.0;
    double b4_amp = 0.0, b4_rate = 0.0, b4_phase = 0.0;
    double coup3, coup4;  // sqrt(2 Gamma_n0)

    DriftParams(const TwoModeSystem& sys, const PumpDrive& pump,
                std::span<const DriveTone> tones)
        : g3(sys.mode3.gamma_total), g4(sys.mode4.gamma_total),
          eps(pump.epsilon), delta(pump.delta),
          k3(sys.mode3.kerr), k4(sys.mode4.kerr), kx(sys.cross_kerr),
          coup3(std::sqrt(2.0 * sys.mode3.gamma_ext)),
          coup4(std::sqrt(2.0 * sys.mode4.gamma_ext)) {
        int n3 = 0, n4 = 0;
        for (const DriveTone& t : tones) {
            if (t.mode_index == 3) {
                b3_amp = t.amplitude; b3_rate = t.frame_rate; b3_phase = t.phase;
                ++n3;
            } else if (t.mode_index == 4) {
                b4_amp = t.amplitude; b4_rate = t.frame_rate; b4_phase = t.phase;
                ++n4;
            } else {
                throw std::invalid_argument("tone mode index must be 3 or 4");
            }
        }
        if (n3 > 1 || n4 > 1)
            throw std::invalid_argument("at most one drive tone per mode");
    }

    inline void eval(const complexd a3, const complexd a4, double t,
                     double delta_off, complexd& d3, complexd& d4) const {
        const double n3 = std::norm(a3);
        const double n4 = std::norm(a4);
        const double z3 = delta + delta_off + k3 * n3 + 2.0 * kx * n4;
        const double z4 = delta + delta_off + k4 * n4 + 2.0 * kx * n3;
        d3 = complexd(-g3, z3) * a3 + complexd(0.0, eps) * std::conj(a4);
        d4 = complexd(-g4, z4) * a4 + complexd(0.0, eps) * std::conj(a3);
        if (b3_amp > 0.0)
            d3 -= complexd(0.0, coup3 * b3_amp) * std::polar(1.0, b3_rate * t + b3_phase);
        if (b4_amp > 0.0)
            d4 -= complexd(0.0, coup4 * b4_amp) * std::polar(1.0, b4_rate * t + b4_phase);
    }
};

inline void rk4_step(const DriftParams& p, complexd& a3, complexd& a4, double t,
                     double dt, double delta_off) {
    complexd k13, k14, k23, k24, k33, k34, k43, k44;
    p.eval(a3, a4, t, delta_off, k13, k14);
    p.eval(a3 + 0.5 * dt * k13, a4 + 0.5 * dt * k14, t + 0.5 * dt, delta_off, k23, k24);
    p.eval(a3 + 0.5 * dt * k23, a4 + 0.5 * dt * k24, t + 0.5 * dt, delta_off, k33, k34);
    p.eval(a3 + dt * k33, a4 + dt * k34, t + dt, delta_off, k43, k44);
    a3 += dt / 6.0 * (k13 + 2.0 * (k23 + k33) + k43);
    a4 += dt / 6.0 * (k14 + 2.0 * (k24 + k34) + k44);
}

}  // namespace

FieldState drift(const TwoModeSystem& sys, const PumpDrive& pump,
                 std::span<const DriveTone> tones, const FieldState& state,
                 double t) {
    DriftParams p(sys, pump, tones);
    FieldState d;
    p.eval(state.a3, state.a4, t, 0.0, d.a3, d.a4);
    return d;
}

Trajectory integrate(const TwoModeSystem& sys, const PumpDrive& pump,
                     std::span<const DriveTone> tones, const NoiseConfig& noise,
                     const IntegratorConfig& cfg_in) {
    sys.validate();
    pump.validate();
    noise.validate();
    IntegratorConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.dt == 0.0) cfg.dt = suggest_dt(sys, pump);

    NoiseStreamGenerator gen(sys, noise, cfg.dt, cfg.duration);
    FieldState state = cfg.initial_state ? *cfg.initial_state
                                         : gen.draw_initial_state(cfg.seed_amplitude);

    // Stability guard, evaluated at run start: initial-state zetas plus the
    // steady-state zetas when an oscillating solution exists.
    {
        double rate = std::max({sys.mode3.gamma_total, sys.mode4.gamma_total,
                                pump.epsilon, std::abs(pump.delta)});
        const KerrDetunings zi = kerr_detunings(sys, pump, state);
        rate = std::max({rate, std::abs(zi.zeta3), std::abs(zi.zeta4)});
        try {
            const SteadyStatePhotons ss = steady_state_photons(sys, pump);
            const KerrDetunings zs =
                kerr_detunings_photons(sys, pump.delta, ss.n3, ss.n4);
            rate = std::max({rate, std::abs(zs.zeta3), std::abs(zs.zeta4)});
        } catch (const ground_state_error&) {
        }
        for (const DriveTone& t : tones)
            rate = std::max(rate, std::abs(t.frame_rate));
        if (cfg.dt * rate >= 0.1)
            throw std::invalid_argument(
                "integration step too large: dt * max rate = " +
                std::to_string(cfg.dt * rate) + " >= 0.1");
    }

    const auto n_steps = static_cast<std::size_t>(cfg.duration / cfg.dt);
    const auto n_rec = n_steps / static_cast<std::size_t>(cfg.record_stride);

    Trajectory traj;
    traj.dt_record = cfg.dt * cfg.record_stride;
    traj.a3.reserve(n_rec);
    traj.a4.reserve(n_rec);
    traj.provenance = Provenance{sys, pump,
                                 std::vector<DriveTone>(tones.begin(), tones.end()),
                                 noise, cfg};
    traj.default_discard = 20.0 / sys.gamma_eff;

    DriftParams p(sys, pump, tones);
    StepNoise sn;
    double t = 0.0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        gen.next(sn);
        rk4_step(p, state.a3, state.a4, t, cfg.dt, sn.delta_offset);
        state.a3 += sn.xi3;
        state.a4 += sn.xi4;
        t += cfg.dt;
        if (!std::isfinite(state.a3.real()) || !std::isfinite(state.a3.imag()) ||
            !std::isfinite(state.a4.real()) || !std::isfinite(state.a4.imag()))
            throw integrator_error("non-finite state encountered", i);
        if ((i + 1) % static_cast<std::size_t>(cfg.record_stride) == 0) {
            traj.a3.push_back(state.a3);
            traj.a4.push_back(state.a4);
        }
    }
    return traj;
}

Trajectory reproduce(const Provenance& prov) {
    return integrate(prov.system, prov.pump, prov.tones, prov.noise, prov.integrator);
}

std::size_t Trajectory::index_at(double t) const {
    if (t <= 0.0 || dt_record <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(std::ceil(t / dt_record));
    return std::min(k, size());
}

}  // namespace njpo
