#pragma once

// Sectioned key-value run configuration. Frequencies and rates are written in
// Hz (suffixes kHz/MHz/GHz allowed), times in seconds (ms/us/ns allowed); the
// library converts to rad/s exactly once when the typed objects are built.
// Unknown keys and sections are rejected with line numbers.

#include <optional>
#include <string>

#include "njpo/dynamics.hpp"
#include "njpo/experiments.hpp"
#include "njpo/types.hpp"

namespace njpo {

struct ToneConfig {
    int mode = 3;
    double amplitude_sqrt_flux = -1.0;  ///< sqrt(photons/s); <0 = photon_number given
    double photon_number = -1.0;
    double detuning_hz = 0.0;
    double phase_rad = 0.0;

    bool operator==(const ToneConfig&) const = default;
};

struct SweepConfig {
    std::string axis;
    double min = 0.0, max = 0.0;
    int points = 1;
    bool log_scale = false;
    std::string axis2;
    double min2 = 0.0, max2 = 0.0;
    int points2 = 1;
    bool log_scale2 = false;
    int trajectories = 1;

    bool operator==(const SweepConfig&) const = default;
};

/// Parsed run configuration. Values are stored in the units of the file
/// (Hz, seconds) so render/parse round-trips are bit-exact; build() performs
/// the one conversion to internal rad/s objects.
struct RunConfig {
    // [system]
    double mode3_frequency_hz = 0.0, mode3_gamma_total_hz = 0.0;
    double mode3_gamma_ext_hz = 0.0, mode3_kerr_hz = 0.0;
    double mode4_frequency_hz = 0.0, mode4_gamma_total_hz = 0.0;
    double mode4_gamma_ext_hz = 0.0, mode4_kerr_hz = 0.0;
    // [pump]
    double epsilon_hz = 0.0, delta_hz = 0.0;
    // [tone]
    std::optional<ToneConfig> tone;
    // [noise]
    bool vacuum_on = true;
    double vacuum_scale = 1.0;
    double flicker_amplitude = 0.0;
    // [integrator]
    double dt_s = 0.0;        ///< 0 = automatic
    double duration_s = 20e-3;
    int record_stride = 50;
    double seed_amplitude = 1e-3;
    // [run]
    std::uint64_t seed = 1;
    int workers = 0;
    std::string output_dir = "njpo-out";
    // [sweep]
    std::optional<SweepConfig> sweep;

    TwoModeSystem system() const;
    PumpDrive pump() const;
    std::optional<InjectionTone> injection_tone() const;  ///< resolves photon_number
    NoiseConfig noise_config() const;
    IntegratorConfig integrator_config() const;
    ExperimentContext experiment_context() const;

    bool operator==(const RunConfig&) const = default;
};

/// Parse configuration text. Errors carry the offending line number.
RunConfig parse_config(const std::string& text);

/// Render a configuration to the canonical text form; parse(render(c)) == c.
std::string render_config(const RunConfig& cfg);

/// The bundled default configuration (the measured device of configs/default.cfg).
const std::string& default_config_text();

}  // namespace njpo
