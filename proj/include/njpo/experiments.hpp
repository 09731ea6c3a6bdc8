#pragma once

// End-to-end experiment drivers: stability maps, pump ramps, injection
// locking, synchronization/idler scans and the Kerr-coefficient round trip.
// Grid points run on a bounded worker pool with per-trajectory seeds derived
// as master_seed XOR flat_index; results are collected in grid order.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "njpo/dynamics.hpp"
#include "njpo/model.hpp"
#include "njpo/spectrum.hpp"
#include "njpo/stats.hpp"

namespace njpo {

struct SweepAxis {
    std::string parameter;
    double min = 0.0;
    double max = 0.0;
    int points = 1;
    bool log_scale = false;

    std::vector<double> values() const;
};

struct SweepSpec {
    std::vector<SweepAxis> axes;  ///< row-major expansion, axis order as declared
    int trajectories_per_point = 1;
    std::uint64_t master_seed = 1;

    std::size_t point_count() const;
    /// Coordinates of flat point `index` (row-major).
    std::vector<double> coords(std::size_t index) const;
};

/// Shared experiment context. `operating_point` is the pump setting of the
/// locking/synchronization experiments (spectral scans sweep around it).
struct ExperimentContext {
    TwoModeSystem system = TwoModeSystem::measured_device();
    PumpDrive operating_point{0.0, 0.0};  ///< epsilon = 0 selects 3*Gamma, delta 0
    NoiseConfig noise;
    int workers = 0;  ///< 0 = hardware concurrency (capped at 8)

    PumpDrive resolved_operating_point() const;
    int resolved_workers() const;
};

struct PointRecord {
    std::vector<double> coords;
    std::vector<double> values;  ///< aligned with ExperimentResult::columns
    std::string error;           ///< empty on success

    bool ok() const { return error.empty(); }
};

struct ExperimentResult {
    std::string name;
    SweepSpec sweep;
    std::vector<std::string> coord_names;
    std::vector<std::string> columns;
    std::vector<PointRecord> points;
    ExperimentContext context;

    const PointRecord& at(std::size_t i) const { return points.at(i); }
    double value(std::size_t point, const std::string& column) const;
};

/// Run `fn(index)` for indices [0, n) on `workers` threads.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Stability map (regions, intensities vs eps and delta)
// ---------------------------------------------------------------------------

/// Default grid: eps in [0.25, 4] Gamma x delta in [-8, 4] Gamma.
SweepSpec default_stability_sweep(const TwoModeSystem& sys, int eps_points = 16,
                                  int delta_points = 25);

/// Per point: closed-form and simulated output intensities, the latter from a
/// ground-seeded (|A| = 1e-3) and an oscillation-seeded run so both attractors
/// of region III are reported.
/// Columns: region, c3_theory, c4_theory, c3_ground, c4_ground, c3_osc, c4_osc.
ExperimentResult stability_map(const ExperimentContext& ctx, const SweepSpec& sweep);

// ---------------------------------------------------------------------------
// Pump-ramp spectrogram
// ---------------------------------------------------------------------------

struct RampResult {
    ExperimentResult table;  ///< eps, peak3_hz, peak4_hz, theory_hz, onset_hz
    std::vector<SpectralDensity> psd3;  ///< one per eps point
    std::vector<SpectralDensity> psd4;
};

/// Emission spectra vs pump amplitude at fixed detuning (default 0.26 Gamma).
/// Noiseless by default so the lines sit exactly at the oscillation frequency.
RampResult pump_ramp_spectrogram(const ExperimentContext& ctx,
                                 const SweepAxis& eps_axis, double delta);

RampResult pump_ramp_spectrogram(const ExperimentContext& ctx);

// ---------------------------------------------------------------------------
// Injection locking
// ---------------------------------------------------------------------------

struct LockScanOptions {
    std::vector<double> photon_numbers{0.01, 0.03, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 2.0};
    int ensemble = 12;            ///< trajectories pooled per point
    double duration = 20e-3;      ///< per trajectory (s)
    double detection_bandwidth = 0.4e6;  ///< Hz, phase-statistics filter
    double subsample_interval = 2.5e-4;  ///< s between pooled phase samples
    int linewidth_segment = 16384;       ///< Welch segment for linewidth runs
    double linewidth_duration = 40e-3;
};

struct LockScanResult {
    ExperimentResult table;  ///< n, phase_std3, phase_std4, linewidth3_hz,
                             ///< linewidth4_hz, lw3_resolved, lw4_resolved
    std::vector<PhaseStats> stats3;  ///< pooled phase statistics per point
    std::vector<PhaseStats> stats4;
};

/// Phase statistics and linewidths vs input photon number for an on-resonance
/// tone injected into mode 3 at the operating point.
LockScanResult injection_locking_scan(const ExperimentContext& ctx,
                                      const LockScanOptions& opt = {});

/// Free-running emission linewidth of one mode at the operating point.
LinewidthResult free_running_linewidth(const ExperimentContext& ctx, int mode_index,
                                       double duration, int segment_length,
                                       std::uint64_t seed);

/// Linewidth with an on-resonance tone of `n_photons` injected into mode 3.
LinewidthResult locked_linewidth(const ExperimentContext& ctx, int mode_index,
                                 double n_photons, double duration,
                                 int segment_length, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synchronization and idlers
// ---------------------------------------------------------------------------

struct SyncScanOptions {
    std::vector<double> photon_numbers{0.5, 1.0, 2.0, 4.0};
    /// Signal-detuning grid per photon number: points at
    /// k/points * span_scale * sqrt(n) * 2pi*1e6 for k in [-points, points].
    double span_scale = 0.55;  ///< MHz at n = 1
    int points_per_side = 10;
    double duration = 8e-3;
    int segment = 8192;
    double sync_residual_threshold = 0.25;
    double near_band_hz = 150e3;
};

struct SyncPointDetail {
    double n_photons = 0.0;
    double signal_detuning = 0.0;  ///< rad/s
    bool synchronized = false;
    double residual = 0.0;
    std::vector<Peak> peaks3;
    std::vector<Peak> peaks4;
    double mode4_peak_hz = 0.0;  ///< dominant mode-4 emission (axis rel. center)
};

struct SyncScanResult {
    ExperimentResult table;  ///< n, delta_s, synchronized, residual, mode4_peak_hz
    std::vector<SyncPointDetail> details;
    std::vector<double> gap_n;        ///< photon numbers with measured gaps
    std::vector<double> gap_width;    ///< rad/s, grid-resolution error bars
    std::vector<double> gap_step;     ///< grid step per photon number
    SqrtLawFit sqrt_fit;              ///< g = c sqrt(n)
};

/// Synchronized-flag scan over signal detuning for each input photon number.
/// A point is synchronized when, outside a +-3 RBW window around the signal,
/// the near-carrier band holds less than `sync_residual_threshold` of the
/// total near-band power (the free-running line has collapsed onto the
/// signal). The gap is the contiguous synchronized interval through zero.
SyncScanResult synchronization_scan(const ExperimentContext& ctx,
                                    const SyncScanOptions& opt = {});

struct IdlerCensus {
    double signal_detuning = 0.0;     ///< rad/s, nominal
    double osc3_hz = 0.0;             ///< measured mode-3 oscillation center
    double effective_detuning_hz = 0.0;  ///< signal minus measured center
    std::vector<Peak> peaks3;
    std::vector<Peak> peaks4;
    Peak signal3;                     ///< the injected line in mode 3
    std::optional<Peak> secondary3;   ///< expected at -Delta_s from center
    std::optional<Peak> primary4;     ///< expected at -Delta_s, narrow
    std::optional<Peak> secondary4;   ///< expected at +Delta_s, broad
    double narrow_width_limit_hz = 0.0;  ///< 3x measured signal width
    int extra_peak_count = 0;         ///< detections beyond osc/signal/idlers
};

struct IdlerCensusOptions {
    double n_photons = 0.05;
    double signal_detuning = two_pi * 300e3;  ///< rad/s, well outside the gap
    double duration = 120e-3;
    int segment = 4096;
    double floor_offset_db = 7.0;
    double prominence_db = 3.0;
    /// Detection sensitivity: the broad amplified-vacuum pedestal scales with
    /// the noise level while the idler responses do not, so a reduced vacuum
    /// level resolves the secondary idlers without changing their positions
    /// or the broad/narrow hierarchy.
    double vacuum_scale = 0.08;
};

/// Detect and classify the idler peaks produced by a detuned signal. Peak
/// positions are referenced to the measured oscillation center, which absorbs
/// the frequency pulling near the synchronization gap.
IdlerCensus idler_census(const ExperimentContext& ctx,
                         const IdlerCensusOptions& opt = {});

// ---------------------------------------------------------------------------
// Kerr-coefficient round trip
// ---------------------------------------------------------------------------

struct KerrSlopes {
    double intensity_slope = 0.0;   ///< d|C3|^2/d delta (photons/s per rad/s)
    double frequency_slope = 0.0;   ///< d Delta0 / d delta (dimensionless)
};

/// Closed-form slopes at fixed eps of the |C3|^2 and Delta0 vs delta curves.
KerrSlopes kerr_slopes_closed_form(const TwoModeSystem& sys, double epsilon);

struct KerrFitResult {
    double alpha3 = 0.0;
    double alpha4 = 0.0;
    double relative_error3 = 0.0;
    double relative_error4 = 0.0;
    KerrSlopes slopes;
    bool from_simulation = false;
};

/// Invert the two slope equations for (alpha3, alpha4) given the loss rates.
/// Throws std::runtime_error with a condition diagnostic when the inversion
/// has no positive solution.
KerrFitResult kerr_extraction_from_slopes(const TwoModeSystem& sys_truth,
                                          double epsilon, const KerrSlopes& slopes);

struct KerrRoundTripOptions {
    double epsilon_over_gamma = 3.0;
    std::vector<double> delta_over_gamma{-1.5, -1.2, -0.9, -0.6, -0.3, 0.0};
    double duration = 15e-3;
    int segment = 8192;
    bool simulate = true;  ///< false: invert the closed-form slopes directly
};

/// Full round trip: simulate the delta scans, extract slopes, invert, report
/// errors against the configured Kerr coefficients.
KerrFitResult kerr_extraction_roundtrip(const ExperimentContext& ctx,
                                        const KerrRoundTripOptions& opt = {});

}  // namespace njpo
