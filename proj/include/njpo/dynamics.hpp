#pragma once

// Time integration of the quasiclassical equations of motion
//   i dA3/dt + (zeta3 + i Gamma3) A3 + eps A4* = sqrt(2 Gamma30) B3(t)
//   i dA4/dt + (zeta4 + i Gamma4) A4 + eps A3* = sqrt(2 Gamma40) B4(t)
// with an explicit RK4 step for the drift and Euler-Maruyama addition of the
// (additive) noise increments.

#include <optional>
#include <span>
#include <vector>

#include "njpo/noise.hpp"
#include "njpo/types.hpp"

namespace njpo {

/// A coherent drive as the integrator sees it: B(t) = amplitude *
/// exp(i (frame_rate t + phase)) in the rotating frame of the targeted mode.
/// Per the frame dictionary (model.hpp) a tone at detection detuning d has
/// frame_rate = -d.
struct DriveTone {
    int mode_index = 3;
    double amplitude = 0.0;   ///< sqrt(photons/s)
    double frame_rate = 0.0;  ///< rad/s
    double phase = 0.0;
};

/// Resolve an InjectionTone (detuning relative to the free-running oscillation
/// of its mode) into the rotating-frame drive. Requires an oscillating
/// operating point to define the free-running frequency.
DriveTone drive_tone_for(const TwoModeSystem& sys, const PumpDrive& pump,
                         const InjectionTone& tone);

struct IntegratorConfig {
    double dt = 0.0;          ///< step (s); 0 selects suggest_dt()
    double duration = 0.0;    ///< total simulated time (s)
    int record_stride = 1;    ///< integration steps between stored samples
    std::optional<FieldState> initial_state;  ///< default: random |A| = 1e-3
    double seed_amplitude = 1e-3;

    void validate() const;
};

/// Largest step satisfying dt * max(Gamma_n, eps, |zeta_n|) < 0.1 with a
/// safety factor, the zetas taken at the steady state when one exists.
double suggest_dt(const TwoModeSystem& sys, const PumpDrive& pump);

struct Provenance {
    TwoModeSystem system;
    PumpDrive pump;
    std::vector<DriveTone> tones;
    NoiseConfig noise;
    IntegratorConfig integrator;
};

/// Recorded time series of the two amplitudes. Sample k sits at
/// t = (k+1) * dt_record; the stride is uniform by construction.
struct Trajectory {
    double dt_record = 0.0;
    std::vector<complexd> a3;
    std::vector<complexd> a4;
    Provenance provenance;
    double default_discard = 0.0;  ///< transient time analyses drop by default

    std::size_t size() const { return a3.size(); }
    double time_at(std::size_t k) const { return (k + 1) * dt_record; }
    /// First sample index at or after time t.
    std::size_t index_at(double t) const;
};

/// Equations-of-motion right-hand side (the deterministic drift).
FieldState drift(const TwoModeSystem& sys, const PumpDrive& pump,
                 std::span<const DriveTone> tones, const FieldState& state,
                 double t);

/// Integrate and record. Throws integrator_error on non-finite states and
/// std::invalid_argument when the stability guard rejects the step size.
Trajectory integrate(const TwoModeSystem& sys, const PumpDrive& pump,
                     std::span<const DriveTone> tones, const NoiseConfig& noise,
                     const IntegratorConfig& cfg);

inline Trajectory integrate(const TwoModeSystem& sys, const PumpDrive& pump,
                            const NoiseConfig& noise, const IntegratorConfig& cfg) {
    return integrate(sys, pump, {}, noise, cfg);
}

/// Re-run a trajectory from its provenance block.
Trajectory reproduce(const Provenance& prov);

}  // namespace njpo
