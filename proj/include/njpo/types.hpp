#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace njpo {

using complexd = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Convert a cyclic frequency in Hz to an angular rate in rad/s.
/// All rates and frequencies inside the library are angular (rad/s);
/// Hz values appear only at configuration boundaries.
inline constexpr double from_hz(double f) { return two_pi * f; }
inline constexpr double to_hz(double w) { return w / two_pi; }

/// Wrap an angle to (-pi, pi].
double wrap_phase(double theta);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Requested quantity is defined only above the parametric threshold eps > Gamma.
class below_threshold_error : public std::domain_error {
public:
    explicit below_threshold_error(const std::string& what)
        : std::domain_error(what) {}
};

/// No oscillating solution exists at the requested operating point.
class ground_state_error : public std::domain_error {
public:
    explicit ground_state_error(const std::string& what)
        : std::domain_error(what) {}
};

/// Time integration aborted (non-finite state, bad step, ...).
class integrator_error : public std::runtime_error {
public:
    integrator_error(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
          step_index(step) {}
    std::size_t step_index;
};

/// Configuration text or value rejected.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                      : what),
          line_number(line) {}
    int line_number;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Parameters of one resonator mode. All rates in rad/s.
struct ModeParams {
    double omega = 0.0;        ///< resonant frequency
    double gamma_total = 0.0;  ///< total (amplitude) loss rate Gamma_n
    double gamma_ext = 0.0;    ///< external loss rate Gamma_n0
    double kerr = 0.0;         ///< self-Kerr coefficient alpha_n

    void validate() const;
};

/// The two pumped modes (labelled 3 and 4) plus derived couplings.
///
/// cross_kerr = sqrt(alpha3*alpha4) and gamma_eff = sqrt(Gamma3*Gamma4) are
/// cached at construction; gamma_eff is the threshold rate: parametric
/// oscillations require eps > gamma_eff.
struct TwoModeSystem {
    ModeParams mode3;
    ModeParams mode4;
    double cross_kerr = 0.0;
    double gamma_eff = 0.0;

    static TwoModeSystem make(const ModeParams& m3, const ModeParams& m4);

    /// The device of the bundled default configuration.
    static TwoModeSystem measured_device();

    const ModeParams& mode(int index) const;
    void validate() const;
};

/// Parametric pump: omega_p = omega3 + omega4 + 2*delta, effective amplitude eps.
struct PumpDrive {
    double epsilon = 0.0;  ///< effective pump amplitude (rad/s), >= 0
    double delta = 0.0;    ///< pump detuning (rad/s)

    void validate() const;
};

/// Complex mode amplitudes in the doubly rotating frame; |a_n|^2 is the
/// photon number of mode n.
struct FieldState {
    complexd a3{0.0, 0.0};
    complexd a4{0.0, 0.0};
};

/// A coherent input tone applied to one mode.
///
/// `detuning` is measured from the free-running oscillation frequency of the
/// targeted mode (the Delta_s of the synchronization experiments), not from
/// the rotating frame.
struct InjectionTone {
    int mode_index = 3;      ///< 3 or 4
    double amplitude = 0.0;  ///< |B|, sqrt(photons/s), >= 0
    double detuning = 0.0;   ///< Delta_s (rad/s)
    double phase = 0.0;      ///< theta_in, wrapped to (-pi, pi]

    void validate() const;
};

/// Stability classification of an (eps, delta) operating point.
enum class StabilityRegion {
    GroundOnly,       ///< region I: only A_n = 0 is stable
    OscillationOnly,  ///< region II: ground state unstable, oscillations run
    Bistable,         ///< region III: ground state and oscillations coexist
};

const char* to_string(StabilityRegion r);

}  // namespace njpo
