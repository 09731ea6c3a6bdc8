#include "njpo/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

namespace njpo {

namespace {

std::mutex fftw_plan_mutex;

/// Thread-confined forward c2c FFT of fixed size (FFTW plans are not
/// thread-safe to create, execution on own buffers is).
class Fft {
public:
    explicit Fft(int n) : n_(n) {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        in_ = fftw_alloc_complex(n);
        out_ = fftw_alloc_complex(n);
        plan_ = fftw_plan_dft_1d(n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    complexd* in() { return reinterpret_cast<complexd*>(in_); }
    const complexd* out() const { return reinterpret_cast<const complexd*>(out_); }
    void execute() { fftw_execute(plan_); }
    int size() const { return n_; }

private:
    int n_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

std::vector<double> hann_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(two_pi * i / n));
    return w;
}

}  // namespace

Quadratures demodulate(const Trajectory& traj, int mode_index, double detuning,
                       std::optional<double> discard, int decimate) {
    if (mode_index != 3 && mode_index != 4)
        throw std::invalid_argument("mode index must be 3 or 4");
    if (decimate < 1) throw std::invalid_argument("decimate must be >= 1");
    const double fs_in = 1.0 / traj.dt_record;
    if (std::abs(detuning) > std::numbers::pi * fs_in)
        throw std::invalid_argument("demodulation detuning outside the Nyquist band");

    const double drop = discard.value_or(traj.default_discard);
    const std::size_t k0 = traj.index_at(drop);
    const std::vector<complexd>& src = (mode_index == 3) ? traj.a3 : traj.a4;
    const double coup =
        std::sqrt(2.0 * traj.provenance.system.mode(mode_index).gamma_ext);

    Quadratures q;
    q.mode_index = mode_index;
    q.detuning = detuning;
    q.sample_rate = fs_in / decimate;
    const std::size_t n_out = (src.size() - std::min(k0, src.size())) / decimate;
    q.iq.resize(n_out);
    // Output field in the detection frame. conj(A_n) makes an emission at
    // detection detuning d rotate as exp(+i(d - detuning)t), i.e. land at
    // +d on the spectral axis; see the header note.
    std::size_t k = k0;
    for (std::size_t j = 0; j < n_out; ++j) {
        complexd acc(0.0, 0.0);
        for (int m = 0; m < decimate; ++m, ++k) {
            const double t = traj.time_at(k);
            acc += std::conj(src[k]) * std::polar(1.0, -detuning * t);
        }
        q.iq[j] = coup * acc / static_cast<double>(decimate);
    }
    return q;
}

double SpectralDensity::total_power() const {
    return std::accumulate(value.begin(), value.end(), 0.0) * bin_hz();
}

double SpectralDensity::band_power(double f_lo, double f_hi) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < freq_hz.size(); ++i)
        if (freq_hz[i] >= f_lo && freq_hz[i] <= f_hi) acc += value[i];
    return acc * bin_hz();
}

namespace {

SpectralDensity welch(std::span<const complexd> z, double fs, int nseg,
                      double overlap, bool onesided_real) {
    if (nseg < 8) throw std::invalid_argument("segment length too small");
    if (overlap < 0.0 || overlap >= 1.0)
        throw std::invalid_argument("overlap must be in [0, 1)");
    if (static_cast<std::size_t>(nseg) > z.size())
        throw std::invalid_argument("segment longer than data");
    const int hop = std::max(1, static_cast<int>(nseg * (1.0 - overlap)));
    const int nsegs = 1 + static_cast<int>((z.size() - nseg) / hop);
    if (nsegs < 2) throw std::invalid_argument("need at least two segments");

    const std::vector<double> w = hann_window(nseg);
    const double wsum2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    Fft fft(nseg);
    std::vector<double> acc(nseg, 0.0);
    for (int s = 0; s < nsegs; ++s) {
        const complexd* seg = z.data() + static_cast<std::size_t>(s) * hop;
        for (int i = 0; i < nseg; ++i) fft.in()[i] = w[i] * seg[i];
        fft.execute();
        for (int i = 0; i < nseg; ++i) acc[i] += std::norm(fft.out()[i]);
    }
    const double scale = 1.0 / (static_cast<double>(nsegs) * fs * wsum2);

    SpectralDensity psd;
    psd.segments_averaged = nsegs;
    psd.rbw_hz = 1.5 * fs / nseg;  // Hann equivalent noise bandwidth
    if (onesided_real) {
        const int nbin = nseg / 2;
        psd.freq_hz.resize(nbin);
        psd.value.resize(nbin);
        for (int i = 1; i <= nbin; ++i) {
            psd.freq_hz[i - 1] = fs * i / nseg;
            const double mirror = (i < nseg - i) ? acc[nseg - i] : 0.0;
            psd.value[i - 1] = scale * (acc[i] + mirror);
        }
    } else {
        psd.freq_hz.resize(nseg);
        psd.value.resize(nseg);
        const int half = nseg / 2;
        for (int i = 0; i < nseg; ++i) {
            const int k = (i + half) % nseg;  // fftshift
            psd.freq_hz[i] = fs * (i - half) / nseg;
            psd.value[i] = scale * acc[k];
        }
    }
    return psd;
}

}  // namespace

SpectralDensity photon_spectral_density(const Quadratures& q, int segment_length,
                                        double overlap) {
    return welch(q.iq, q.sample_rate, segment_length, overlap, false);
}

SpectralDensity real_spectral_density(std::span<const double> x, double sample_rate,
                                      int segment_length, double overlap) {
    std::vector<complexd> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = complexd(x[i], 0.0);
    return welch(z, sample_rate, segment_length, overlap, true);
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

/// Linear interpolation of the crossing of `level` between grid points.
double cross_left(const SpectralDensity& psd, std::size_t i_peak, double level) {
    std::size_t i = i_peak;
    while (i > 0 && psd.value[i] > level) --i;
    if (psd.value[i] > level) return psd.freq_hz.front();
    const double f0 = psd.freq_hz[i], f1 = psd.freq_hz[i + 1];
    const double v0 = psd.value[i], v1 = psd.value[i + 1];
    return f0 + (level - v0) / (v1 - v0) * (f1 - f0);
}

double cross_right(const SpectralDensity& psd, std::size_t i_peak, double level) {
    std::size_t i = i_peak;
    const std::size_t n = psd.value.size();
    while (i + 1 < n && psd.value[i] > level) ++i;
    if (psd.value[i] > level) return psd.freq_hz.back();
    const double f0 = psd.freq_hz[i - 1], f1 = psd.freq_hz[i];
    const double v0 = psd.value[i - 1], v1 = psd.value[i];
    return f0 + (level - v0) / (v1 - v0) * (f1 - f0);
}

/// Parabolic (log-domain) refinement of a local maximum.
double refine_peak(const SpectralDensity& psd, std::size_t i) {
    if (i == 0 || i + 1 >= psd.value.size()) return psd.freq_hz[i];
    const double a = std::log(std::max(psd.value[i - 1], 1e-300));
    const double b = std::log(std::max(psd.value[i], 1e-300));
    const double c = std::log(std::max(psd.value[i + 1], 1e-300));
    const double denom = a - 2.0 * b + c;
    if (denom >= 0.0) return psd.freq_hz[i];
    const double shift = 0.5 * (a - c) / denom;
    return psd.freq_hz[i] + shift * psd.bin_hz();
}

}  // namespace

LinewidthResult linewidth(const SpectralDensity& psd) {
    LinewidthResult r;
    if (psd.value.size() < 8) return r;
    const auto it = std::max_element(psd.value.begin(), psd.value.end());
    const std::size_t ip = static_cast<std::size_t>(it - psd.value.begin());
    const double floor = median_of(psd.value);
    if (*it < floor * std::pow(10.0, 0.6)) {
        r.status = LinewidthResult::Status::NoLine;
        return r;
    }
    r.peak_value = *it;
    r.peak_freq_hz = refine_peak(psd, ip);
    const double half = 0.5 * (*it);
    const double width = cross_right(psd, ip, half) - cross_left(psd, ip, half);
    if (width < 2.0 * psd.bin_hz()) {
        r.status = LinewidthResult::Status::BelowResolution;
        r.width_hz = 2.0 * psd.bin_hz();
    } else {
        r.status = LinewidthResult::Status::Resolved;
        r.width_hz = width;
    }
    return r;
}

std::vector<Peak> detect_peaks(const SpectralDensity& psd, double floor_offset_db,
                               double prominence_db) {
    std::vector<Peak> out;
    const std::size_t n = psd.value.size();
    if (n < 8) return out;
    const double floor = median_of(psd.value);
    const double thr = floor * std::pow(10.0, floor_offset_db / 10.0);
    const double prom = std::pow(10.0, prominence_db / 10.0);

    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (psd.value[i] > thr && psd.value[i] > psd.value[i - 1] &&
            psd.value[i] >= psd.value[i + 1])
            cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(),
              [&](std::size_t a, std::size_t b) { return psd.value[a] > psd.value[b]; });

    std::vector<std::size_t> kept;
    for (std::size_t i : cand) {
        // Prominence against already-kept (taller) peaks: the candidate must
        // rise prominence_db above the saddle between it and the nearest one.
        bool ok = true;
        for (std::size_t j : kept) {
            const auto lo = std::min(i, j), hi = std::max(i, j);
            double saddle = psd.value[lo];
            for (std::size_t k = lo; k <= hi; ++k)
                saddle = std::min(saddle, psd.value[k]);
            if (psd.value[i] < saddle * prom) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
    }

    for (std::size_t i : kept) {
        Peak p;
        p.freq_hz = refine_peak(psd, i);
        p.height = psd.value[i];
        const double half = 0.5 * psd.value[i];
        p.width_hz = std::max(cross_right(psd, i, half) - cross_left(psd, i, half),
                              psd.bin_hz());
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(),
              [](const Peak& a, const Peak& b) { return a.height > b.height; });
    return out;
}

double dominant_peak_centroid(const SpectralDensity& psd, double half_window_hz) {
    const auto it = std::max_element(psd.value.begin(), psd.value.end());
    const double f0 = psd.freq_hz[static_cast<std::size_t>(it - psd.value.begin())];
    double wsum = 0.0, fsum = 0.0;
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
        if (std::abs(psd.freq_hz[i] - f0) <= half_window_hz) {
            wsum += psd.value[i];
            fsum += psd.value[i] * psd.freq_hz[i];
        }
    }
    return wsum > 0.0 ? fsum / wsum : f0;
}

}  // namespace njpo
