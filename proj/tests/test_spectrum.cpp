#include <doctest.h>

#include <cmath>
#include <random>

#include "njpo/model.hpp"
#include "njpo/spectrum.hpp"

using namespace njpo;

TEST_SUITE_BEGIN("spectrum");

namespace {

const TwoModeSystem kSys = TwoModeSystem::measured_device();
const double kGamma = kSys.gamma_eff;

Quadratures synthetic_tone(double amp, double f_hz, double fs, std::size_t n,
                           double phase = 0.0) {
    Quadratures q;
    q.mode_index = 3;
    q.sample_rate = fs;
    q.iq.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        q.iq[k] = std::polar(amp, two_pi * f_hz * k / fs + phase);
    return q;
}

Quadratures synthetic_noise(double sigma, double fs, std::size_t n,
                            std::uint64_t seed) {
    GaussianSampler g(seed);
    Quadratures q;
    q.mode_index = 3;
    q.sample_rate = fs;
    q.iq.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double a, b;
        g.normal_pair(a, b);
        q.iq[k] = complexd(sigma * a, sigma * b);
    }
    return q;
}

}  // namespace

TEST_CASE("psd calibration: a unit-flux tone integrates to its flux") {
    const double fs = 4e6;
    // off-bin frequency so Hann scalloping is exercised
    const Quadratures q = synthetic_tone(1.0, 123456.7, fs, 1 << 16);
    const SpectralDensity psd = photon_spectral_density(q, 4096);
    const LinewidthResult lw = linewidth(psd);
    CHECK(lw.peak_freq_hz == doctest::Approx(123456.7).epsilon(2e-3));
    CHECK(psd.band_power(lw.peak_freq_hz - 6 * psd.rbw_hz,
                         lw.peak_freq_hz + 6 * psd.rbw_hz) ==
          doctest::Approx(1.0).epsilon(0.02));
    // flux scaling: amplitude a gives integral a^2
    const Quadratures q2 = synthetic_tone(3.0, -250e3, fs, 1 << 16);
    const SpectralDensity psd2 = photon_spectral_density(q2, 4096);
    CHECK(psd2.total_power() == doctest::Approx(9.0).epsilon(0.02));
}

TEST_CASE("psd of complex white noise sits at 2 sigma^2 / fs") {
    const double fs = 2e6;
    const double sigma = 0.8;
    const Quadratures q = synthetic_noise(sigma, fs, 1 << 18, 21);
    const SpectralDensity psd = photon_spectral_density(q, 2048);
    const double expect = 2.0 * sigma * sigma / fs;
    double mean = 0.0;
    for (double v : psd.value) mean += v;
    mean /= static_cast<double>(psd.value.size());
    CHECK(mean == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("parseval: psd integral equals mean time-domain power within 1%") {
    const double fs = 4e6;
    SUBCASE("tone plus noise") {
        Quadratures q = synthetic_noise(0.5, fs, 1 << 17, 4);
        for (std::size_t k = 0; k < q.size(); ++k)
            q.iq[k] += std::polar(2.0, two_pi * 300e3 * k / fs);
        double power = 0.0;
        for (const complexd& z : q.iq) power += std::norm(z);
        power /= static_cast<double>(q.size());
        const SpectralDensity psd = photon_spectral_density(q, 4096);
        CHECK(psd.total_power() == doctest::Approx(power).epsilon(0.01));
    }
    SUBCASE("pure noise") {
        const Quadratures q = synthetic_noise(1.3, fs, 1 << 17, 5);
        double power = 0.0;
        for (const complexd& z : q.iq) power += std::norm(z);
        power /= static_cast<double>(q.size());
        const SpectralDensity psd = photon_spectral_density(q, 8192);
        CHECK(psd.total_power() == doctest::Approx(power).epsilon(0.01));
    }
}

TEST_CASE("demodulation basics") {
    const PumpDrive pump{3 * kGamma, 0.0};
    NoiseConfig off;
    off.vacuum_noise_on = false;
    IntegratorConfig cfg;
    cfg.duration = 2e-3;
    cfg.record_stride = 50;
    cfg.initial_state = steady_state_field(kSys, pump, 0.2);
    const Trajectory traj = integrate(kSys, pump, {}, off, cfg);

    SUBCASE("flux calibration: |I+iQ|^2 equals |C3|^2") {
        const Quadratures q = demodulate(traj, 3, 0.0, 0.0);
        const OutputFlux f = output_flux(kSys, steady_state_photons(kSys, pump));
        CHECK(std::norm(q.iq.back()) == doctest::Approx(f.c3).epsilon(1e-6));
    }
    SUBCASE("stationary phase when demodulated at the emission frequency") {
        const double d0 = oscillation_frequency_shift(kSys, pump);
        const Quadratures q = demodulate(traj, 3, d0, 0.0);
        // |d theta/dt| time-average below 1e-3 Gamma
        double worst = 0.0;
        for (std::size_t k = 1; k < q.size(); ++k) {
            const double dth = std::arg(q.iq[k] / q.iq[k - 1]);
            worst = std::max(worst, std::abs(dth) * q.sample_rate);
        }
        CHECK(worst < 1e-3 * kGamma);
    }
    SUBCASE("aliasing guard") {
        CHECK_THROWS_AS(demodulate(traj, 3, two_pi * 3e6, 0.0),
                        std::invalid_argument);
    }
    SUBCASE("decimation reduces the rate and keeps a centered signal intact") {
        const double d0 = oscillation_frequency_shift(kSys, pump);
        const Quadratures q = demodulate(traj, 3, d0, 0.0, 8);
        CHECK(q.sample_rate == doctest::Approx(1.0 / traj.dt_record / 8));
        const OutputFlux f = output_flux(kSys, steady_state_photons(kSys, pump));
        CHECK(std::norm(q.iq.back()) == doctest::Approx(f.c3).epsilon(1e-5));
    }
}

TEST_CASE("noiseless region-II emission peaks at +Delta0 on the psd axis") {
    const PumpDrive pump{3 * kGamma, 0.3 * kGamma};
    const double d0 = oscillation_frequency_shift(kSys, pump);
    NoiseConfig off;
    off.vacuum_noise_on = false;
    off.rng_seed = 2;
    IntegratorConfig cfg;
    cfg.duration = 300.0 / kGamma + 2.5e-3;
    cfg.record_stride = 12;  // ~16.7 MHz recording
    const Trajectory traj = integrate(kSys, pump, {}, off, cfg);
    const Quadratures q3 = demodulate(traj, 3, 0.0, 300.0 / kGamma);
    const Quadratures q4 = demodulate(traj, 4, 0.0, 300.0 / kGamma);
    const SpectralDensity p3 = photon_spectral_density(q3, 4096);
    const SpectralDensity p4 = photon_spectral_density(q4, 4096);
    CHECK(linewidth(p3).peak_freq_hz == doctest::Approx(to_hz(d0)).epsilon(0.02));
    CHECK(linewidth(p4).peak_freq_hz == doctest::Approx(-to_hz(d0)).epsilon(0.02));
}

TEST_CASE("frame shift rigidly translates the psd") {
    const PumpDrive pump{3 * kGamma, 0.0};
    NoiseConfig noise;
    noise.rng_seed = 31;
    IntegratorConfig cfg;
    cfg.duration = 4e-3;
    cfg.record_stride = 50;
    const Trajectory traj = integrate(kSys, pump, {}, noise, cfg);
    const int nseg = 4096;
    const SpectralDensity a =
        photon_spectral_density(demodulate(traj, 3, 0.0), nseg);
    const double df = a.bin_hz();
    const double shift_hz = 32 * df;  // integer bins, exact translation
    const SpectralDensity b =
        photon_spectral_density(demodulate(traj, 3, two_pi * shift_hz), nseg);

    // locate the best alignment by cross-correlation of the value arrays
    int best_lag = 0;
    double best = -1.0;
    for (int lag = -64; lag <= 64; ++lag) {
        double acc = 0.0;
        for (int i = std::max(0, -lag); i < nseg - std::max(0, lag); ++i)
            acc += a.value[static_cast<std::size_t>(i + lag)] *
                   b.value[static_cast<std::size_t>(i)];
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    CHECK(best_lag == 32);
}

TEST_CASE("linewidth") {
    SUBCASE("synthetic Lorentzian: width 2 gamma within 5%") {
        SpectralDensity psd;
        const double hwhm = 3000.0;
        const int n = 4096;
        psd.rbw_hz = 1.5 * 250.0;
        psd.segments_averaged = 1;
        for (int i = 0; i < n; ++i) {
            const double f = (i - n / 2) * 250.0;
            psd.freq_hz.push_back(f);
            psd.value.push_back(1.0 / (1.0 + (f / hwhm) * (f / hwhm)));
        }
        const LinewidthResult lw = linewidth(psd);
        CHECK(lw.resolved());
        CHECK(lw.width_hz == doctest::Approx(2.0 * hwhm).epsilon(0.05));
    }
    SUBCASE("pure tone reports below resolution") {
        const Quadratures q = synthetic_tone(1.0, 100e3, 4e6, 1 << 16);
        const SpectralDensity psd = photon_spectral_density(q, 4096);
        const LinewidthResult lw = linewidth(psd);
        CHECK(lw.status == LinewidthResult::Status::BelowResolution);
        CHECK(lw.width_hz == doctest::Approx(2.0 * psd.bin_hz()));
    }
    SUBCASE("flat noise reports no line") {
        const Quadratures q = synthetic_noise(1.0, 4e6, 1 << 16, 9);
        const SpectralDensity psd = photon_spectral_density(q, 1024);
        CHECK(linewidth(psd).status == LinewidthResult::Status::NoLine);
    }
}

TEST_CASE("peak detection") {
    const double fs = 4e6;
    SUBCASE("flat noise yields no peaks at a 10 dB offset") {
        const Quadratures q = synthetic_noise(1.0, fs, 1 << 16, 17);
        const SpectralDensity psd = photon_spectral_density(q, 2048);
        CHECK(detect_peaks(psd, 10.0).empty());
    }
    SUBCASE("two tones 20 dB above the floor are both recovered within a bin") {
        Quadratures q = synthetic_noise(0.05, fs, 1 << 17, 23);
        for (std::size_t k = 0; k < q.size(); ++k) {
            q.iq[k] += std::polar(0.9, two_pi * 400e3 * k / fs);
            q.iq[k] += std::polar(0.5, -two_pi * 750e3 * k / fs + 1.0);
        }
        const SpectralDensity psd = photon_spectral_density(q, 8192);
        const std::vector<Peak> peaks = detect_peaks(psd, 10.0);
        REQUIRE(peaks.size() == 2);
        CHECK(peaks[0].freq_hz == doctest::Approx(400e3).epsilon(1e-3));
        CHECK(peaks[1].freq_hz == doctest::Approx(-750e3).epsilon(1e-3));
    }
}

TEST_CASE("welch input validation") {
    const Quadratures q = synthetic_tone(1.0, 1e5, 4e6, 4000);
    CHECK_THROWS_AS(photon_spectral_density(q, 8192), std::invalid_argument);
    CHECK_THROWS_AS(photon_spectral_density(q, 4000), std::invalid_argument);
}

TEST_SUITE_END();
