#pragma once

// Phase statistics, histograms and the small fits used by the experiments:
// 1/f + white frequency-noise decomposition, sqrt-law gap fit, chi-square
// uniformity test.

#include <cstdint>
#include <span>
#include <vector>

#include "njpo/spectrum.hpp"
#include "njpo/types.hpp"

namespace njpo {

/// Continuous unwrapped phase of I + iQ (nearest branch per sample). Samples
/// with |I+iQ| below 1e-6 of the mean amplitude are bridged by linear
/// interpolation; if more than 1% of samples are that low the phase is
/// undefined and std::domain_error is thrown.
std::vector<double> phase_series(const Quadratures& q);

struct PhaseStats {
    double std_dev = 0.0;      ///< linear std of mean-centered wrapped phases
    double circular_mean = 0.0;
    std::vector<std::uint64_t> histogram;  ///< over (-pi, pi]
    double gaussianity = 0.0;  ///< excess kurtosis; 0 Gaussian-like, -1.2 uniform
};

/// Dispersion of wrapped phases: center at the circular mean, wrap deviations
/// to (-pi, pi], take the linear standard deviation. Uniform phases give
/// pi/sqrt(3), a delta gives 0.
PhaseStats phase_statistics(std::span<const double> theta, int bins = 36);

struct NoiseFitResult {
    double flicker_coeff = 0.0;  ///< A in S(f) = A/f + W  (Hz^2/Hz * Hz)
    double white_floor = 0.0;    ///< W (Hz^2/Hz)
    double residual = 0.0;       ///< reduced chi-square of the weighted fit
    bool valid = false;
};

struct FrequencyNoiseSpectrum {
    SpectralDensity psd;  ///< one-sided PSD of (1/2pi) dtheta/dt, Hz^2/Hz
    NoiseFitResult fit;
};

/// Frequency-noise spectrum from an unwrapped phase series sampled at fs.
/// The instantaneous frequency is the first difference; the fit runs on
/// log-binned averages over [2 bins, fs/8] where the difference filter is
/// flat to ~5%. Fit failure is reported via fit.valid = false.
FrequencyNoiseSpectrum frequency_noise_spectrum(std::span<const double> theta,
                                                double sample_rate,
                                                int segment_length = 0);

struct Histogram2D {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    int nx = 0, ny = 0;
    std::vector<std::uint64_t> counts;  ///< row-major [iy * nx + ix]
    std::uint64_t overflow = 0;         ///< samples outside the ranges

    std::uint64_t total() const;
    std::uint64_t at(int ix, int iy) const { return counts[static_cast<std::size_t>(iy) * nx + ix]; }
    void merge(const Histogram2D& other);
};

Histogram2D histogram2d(std::span<const double> x, std::span<const double> y,
                        int nx, int ny, double xmin, double xmax, double ymin,
                        double ymax);

struct SqrtLawFit {
    double coefficient = 0.0;
    double r_squared = 0.0;
};

/// Least-squares c for g = c sqrt(n). Throws std::invalid_argument for fewer
/// than 3 points, non-positive n, or degenerate data.
SqrtLawFit fit_sqrt_law(std::span<const double> n_values,
                        std::span<const double> gap_values);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Upper-tail p-value of a chi-square statistic with k degrees of freedom.
double chi_square_p_value(double chi2, int dof);

/// Chi-square uniformity p-value of wrapped phases over `bins` angular bins.
double phase_uniformity_p_value(std::span<const double> theta, int bins = 36);

/// Pearson correlation coefficient.
double correlation(std::span<const double> x, std::span<const double> y);

/// Log-log slope of a PSD between f_lo and f_hi (log-binned least squares).
double loglog_slope(const SpectralDensity& psd, double f_lo, double f_hi);

}  // namespace njpo
