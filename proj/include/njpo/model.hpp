#pragma once

// Closed-form theory of the nondegenerate parametric oscillator: thresholds,
// steady-state intensities, emission frequencies and phase constraints.
//
// Frame and sign dictionary used throughout the library:
//   * Amplitudes A_n live in frames rotating at omega_n + delta.
//   * A steady emission at detection detuning d_n (lab frequency
//     omega_n + delta + d_n) appears in A_n as a factor exp(-i d_n t).
//   * Above threshold mode 3 emits at d_3 = +Delta0 and mode 4 at
//     d_4 = -Delta0, so A3 ~ exp(-i Delta0 t) and A4 ~ exp(+i Delta0 t).
// The demodulation in signal_analysis follows the same dictionary.

#include "njpo/types.hpp"

namespace njpo {

struct KerrDetunings {
    double zeta3 = 0.0;
    double zeta4 = 0.0;
};

/// Nonlinear detunings zeta_n = delta + alpha_n |A_n|^2 + 2 alpha |A_m|^2.
KerrDetunings kerr_detunings(const TwoModeSystem& sys, const PumpDrive& pump,
                             const FieldState& state);

/// Same, from photon numbers directly.
KerrDetunings kerr_detunings_photons(const TwoModeSystem& sys, double delta,
                                     double n3, double n4);

/// Half-width of the unstable detuning interval:
/// delta_th = (Gamma3+Gamma4)/2 * sqrt(eps^2/Gamma^2 - 1).
/// Throws below_threshold_error for eps < Gamma.
double threshold_detuning(const TwoModeSystem& sys, double epsilon);

/// Region I/II/III classification. Points within 1e-12 relative distance of
/// a boundary resolve to the smaller region index.
StabilityRegion classify_region(const TwoModeSystem& sys, const PumpDrive& pump);

struct SteadyStatePhotons {
    double n3 = 0.0;  ///< |A3|^2
    double n4 = 0.0;  ///< |A4|^2
};

/// Oscillation intensities of the steady state,
///   |A3|^2 = 2 Gamma4 (delta_th - delta) / (a3 G4 + a4 G3 + 2 a (G3+G4)),
///   |A4|^2 = (Gamma3/Gamma4) |A3|^2.
/// Defined for eps >= Gamma and delta <= delta_th (regions II and III);
/// throws ground_state_error otherwise.
SteadyStatePhotons steady_state_photons(const TwoModeSystem& sys,
                                        const PumpDrive& pump);

struct OutputFlux {
    double c3 = 0.0;  ///< |C3|^2, photons/s
    double c4 = 0.0;  ///< |C4|^2, photons/s
};

/// Output photon flux |C_n|^2 = 2 Gamma_n0 |A_n|^2.
OutputFlux output_flux(const TwoModeSystem& sys, const SteadyStatePhotons& photons);

struct OnsetShift {
    double delta3 = 0.0;
    double delta4 = 0.0;
};

/// Radiation frequency offsets at oscillation onset:
/// delta3 = -delta4 = delta (Gamma3-Gamma4)/(Gamma3+Gamma4).
OnsetShift onset_frequency_shift(const TwoModeSystem& sys, double delta);

/// Emission frequency offset Delta0 = (G3 zeta4 - G4 zeta3)/(G3+G4) with the
/// zetas evaluated at the steady-state intensities. Mode 3 emits at detection
/// detuning +Delta0, mode 4 at -Delta0. Propagates ground_state_error.
double oscillation_frequency_shift(const TwoModeSystem& sys, const PumpDrive& pump);

/// Constrained phase sum Theta = theta3 + theta4, in (pi/2, pi), with
/// tan(Theta) = -1/sqrt(eps^2/Gamma^2 - 1). The phase difference is free.
/// Throws below_threshold_error for eps <= Gamma.
double phase_sum(const TwoModeSystem& sys, double epsilon);

/// Injection-locked phase of mode 3 for an on-resonance input of phase
/// theta_in: theta3 = theta_in - arctan(3 Gamma / (2 sqrt(eps^2-Gamma^2))),
/// wrapped to (-pi, pi]. Throws below_threshold_error for eps <= Gamma.
double locked_phase(const TwoModeSystem& sys, double epsilon, double theta_in);

/// Classical energy (H/hbar) of the rotating-frame two-mode Hamiltonian
/// evaluated at classical amplitudes.
double classical_hamiltonian(const TwoModeSystem& sys, const PumpDrive& pump,
                             const FieldState& state);

/// Steady oscillating state with Eq.-consistent moduli and phase sum; the free
/// phase difference psi = theta3 - theta4 picks the point on the degenerate
/// circle. Propagates ground_state_error.
FieldState steady_state_field(const TwoModeSystem& sys, const PumpDrive& pump,
                              double psi = 0.0);

/// Average coherent photon number of an input tone, <n> = |B|^2/(2 Gamma_n0).
double input_photon_number(const TwoModeSystem& sys, const InjectionTone& tone);

/// |B| producing a given <n> on the targeted mode.
double tone_amplitude_for_photon_number(const TwoModeSystem& sys, int mode_index,
                                        double n_photons);

}  // namespace njpo
