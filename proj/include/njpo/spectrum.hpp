#pragma once

// Detection-side analysis: demodulated quadratures, Welch photon spectral
// densities, linewidths and peak tables.
//
// Frequency axis convention: psd bins are emission detunings relative to the
// demodulation frame, so radiation at detection detuning d demodulated at
// detuning d_n peaks at (d - d_n)/2pi Hz. This matches the closed-form
// Delta0 of model.hpp without sign gymnastics downstream.

#include <optional>
#include <span>
#include <vector>

#include "njpo/dynamics.hpp"
#include "njpo/types.hpp"

namespace njpo {

/// Demodulated quadratures I(t) + iQ(t) of one mode's output field, in
/// sqrt(photons/s). |I+iQ|^2 equals the output flux |C_n|^2.
struct Quadratures {
    int mode_index = 0;
    double detuning = 0.0;     ///< demodulation (detection) detuning, rad/s
    double sample_rate = 0.0;  ///< Hz
    std::vector<complexd> iq;

    std::size_t size() const { return iq.size(); }
};

/// Demodulate a trajectory at detection detuning `detuning`.
///
/// `discard` drops the leading transient (defaults to the trajectory's
/// 20/Gamma hint). `decimate` boxcar-averages the complex signal by that
/// factor, emulating a finite detection bandwidth of sample_rate/decimate;
/// phase statistics want ~0.4 MHz of bandwidth, spectra want 1.
/// Throws std::invalid_argument when |detuning| exceeds the Nyquist band.
Quadratures demodulate(const Trajectory& traj, int mode_index, double detuning,
                       std::optional<double> discard = std::nullopt,
                       int decimate = 1);

struct SpectralDensity {
    std::vector<double> freq_hz;  ///< uniform grid, ascending, centered on 0
    std::vector<double> value;    ///< photons/(s Hz)
    double rbw_hz = 0.0;          ///< resolution bandwidth (Hann ENBW)
    int segments_averaged = 0;

    double bin_hz() const { return freq_hz.size() > 1 ? freq_hz[1] - freq_hz[0] : 0.0; }
    /// Trapezoid-free total: sum(value) * bin. Equals mean |iq|^2 for
    /// stationary inputs (Parseval).
    double total_power() const;
    /// Integrated power over [f_lo, f_hi].
    double band_power(double f_lo, double f_hi) const;
};

/// Welch-averaged photon spectral density of the complex baseband signal.
/// Hann window, calibrated so a coherent tone of flux F photons/s integrates
/// to F. Requires at least two segments.
SpectralDensity photon_spectral_density(const Quadratures& q, int segment_length,
                                        double overlap = 0.5);

/// PSD of a real-valued series (one-sided, f > 0).
SpectralDensity real_spectral_density(std::span<const double> x, double sample_rate,
                                      int segment_length, double overlap = 0.5);

struct LinewidthResult {
    enum class Status { Resolved, BelowResolution, NoLine };
    Status status = Status::NoLine;
    double width_hz = 0.0;      ///< -3 dB full width; upper bound when below resolution
    double peak_freq_hz = 0.0;
    double peak_value = 0.0;

    bool resolved() const { return status == Status::Resolved; }
};

/// Interpolated -3 dB full width of the dominant peak. Reports
/// BelowResolution (width bound 2 bins) for unresolved lines and NoLine when
/// no peak clears the median floor by 6 dB.
LinewidthResult linewidth(const SpectralDensity& psd);

struct Peak {
    double freq_hz = 0.0;
    double height = 0.0;    ///< psd value at the interpolated maximum
    double width_hz = 0.0;  ///< -3 dB full width (bin-limited from below)
};

/// Local maxima above median * 10^(floor_offset_db/10), pruned to peaks with
/// at least `prominence_db` of standout over the saddle toward any taller
/// neighbour, sorted by height descending.
std::vector<Peak> detect_peaks(const SpectralDensity& psd, double floor_offset_db,
                               double prominence_db = 3.0);

/// Power-weighted centroid within +-half_window of the tallest bin.
double dominant_peak_centroid(const SpectralDensity& psd, double half_window_hz);

}  // namespace njpo
