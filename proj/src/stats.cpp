#include "njpo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace njpo {

std::vector<double> phase_series(const Quadratures& q) {
    const std::size_t n = q.size();
    if (n == 0) throw std::domain_error("phase undefined: empty quadratures");
    double mean_amp = 0.0;
    for (const complexd& z : q.iq) mean_amp += std::abs(z);
    mean_amp /= static_cast<double>(n);
    const double low = 1e-6 * mean_amp;

    std::size_t n_low = 0;
    std::vector<double> theta(n);
    std::vector<bool> ok(n);
    for (std::size_t i = 0; i < n; ++i) {
        ok[i] = std::abs(q.iq[i]) > low;
        if (!ok[i]) ++n_low;
        theta[i] = ok[i] ? std::arg(q.iq[i]) : 0.0;
    }
    if (n_low * 100 > n)
        throw std::domain_error("phase undefined: amplitude ~0 on >1% of samples");

    // unwrap over valid samples, bridge gaps linearly
    std::vector<double> out(n);
    double prev = 0.0;
    bool have_prev = false;
    std::size_t last_good = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) continue;
        double th = theta[i];
        if (have_prev) {
            th = prev + wrap_phase(th - prev);
            if (i > last_good + 1) {
                const double step = (th - prev) / static_cast<double>(i - last_good);
                for (std::size_t j = last_good + 1; j < i; ++j)
                    out[j] = prev + step * static_cast<double>(j - last_good);
            }
        } else {
            // leading gap: backfill flat
            for (std::size_t j = 0; j < i; ++j) out[j] = th;
        }
        out[i] = th;
        prev = th;
        last_good = i;
        have_prev = true;
    }
    for (std::size_t j = last_good + 1; j < n; ++j) out[j] = prev;
    return out;
}

PhaseStats phase_statistics(std::span<const double> theta, int bins) {
    PhaseStats st;
    if (theta.empty()) return st;
    double cs = 0.0, sn = 0.0;
    for (double t : theta) {
        cs += std::cos(t);
        sn += std::sin(t);
    }
    st.circular_mean = std::atan2(sn, cs);

    st.histogram.assign(static_cast<std::size_t>(bins), 0);
    double m2 = 0.0, m4 = 0.0;
    for (double t : theta) {
        const double d = wrap_phase(t - st.circular_mean);
        m2 += d * d;
        m4 += d * d * d * d;
        int b = static_cast<int>((wrap_phase(t) + std::numbers::pi) / two_pi * bins);
        b = std::clamp(b, 0, bins - 1);
        ++st.histogram[static_cast<std::size_t>(b)];
    }
    const double n = static_cast<double>(theta.size());
    m2 /= n;
    m4 /= n;
    st.std_dev = std::sqrt(m2);
    st.gaussianity = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;
    return st;
}

namespace {

struct LogBins {
    std::vector<double> f, s;
    std::vector<int> count;
};

LogBins log_bin(const SpectralDensity& psd, double f_lo, double f_hi,
                int per_decade = 12) {
    LogBins b;
    if (f_lo <= 0.0 || f_hi <= f_lo) return b;
    const double lf0 = std::log10(f_lo);
    const int nb = std::max(1, static_cast<int>(std::ceil(
                                    (std::log10(f_hi) - lf0) * per_decade)));
    std::vector<double> fs(nb, 0.0), ss(nb, 0.0);
    std::vector<int> cnt(nb, 0);
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
        const double f = psd.freq_hz[i];
        if (f < f_lo || f > f_hi) continue;
        int k = static_cast<int>((std::log10(f) - lf0) * per_decade);
        k = std::clamp(k, 0, nb - 1);
        fs[k] += f;
        ss[k] += psd.value[i];
        ++cnt[k];
    }
    for (int k = 0; k < nb; ++k) {
        if (cnt[k] == 0) continue;
        b.f.push_back(fs[k] / cnt[k]);
        b.s.push_back(ss[k] / cnt[k]);
        b.count.push_back(cnt[k]);
    }
    return b;
}

}  // namespace

FrequencyNoiseSpectrum frequency_noise_spectrum(std::span<const double> theta,
                                                double sample_rate,
                                                int segment_length) {
    if (theta.size() < 10000)
        throw std::invalid_argument("frequency-noise spectrum needs >= 1e4 samples");
    std::vector<double> nu(theta.size() - 1);
    const double scale = sample_rate / two_pi;
    for (std::size_t i = 0; i + 1 < theta.size(); ++i)
        nu[i] = (theta[i + 1] - theta[i]) * scale;

    int nseg = segment_length;
    if (nseg <= 0) {
        nseg = 1;
        while (nseg * 8 <= static_cast<int>(nu.size()) && nseg < (1 << 16)) nseg <<= 1;
    }
    FrequencyNoiseSpectrum out;
    out.psd = real_spectral_density(nu, sample_rate, nseg);

    // Weighted least squares of S = A/f + W on log-binned averages, between
    // 2 bins and fs/8 (the first-difference response is flat to ~5% there).
    const double f_lo = 2.0 * out.psd.bin_hz();
    const double f_hi = sample_rate / 8.0;
    const LogBins b = log_bin(out.psd, f_lo, f_hi);
    if (b.f.size() >= 4) {
        // basis u = 1/f, v = 1; weights ~ count / S^2 (relative error equalized)
        double suu = 0, suv = 0, svv = 0, sus = 0, svs = 0;
        for (std::size_t k = 0; k < b.f.size(); ++k) {
            if (b.s[k] <= 0.0) continue;
            const double w = b.count[k] / (b.s[k] * b.s[k]);
            const double u = 1.0 / b.f[k];
            suu += w * u * u;
            suv += w * u;
            svv += w;
            sus += w * u * b.s[k];
            svs += w * b.s[k];
        }
        const double det = suu * svv - suv * suv;
        if (std::abs(det) > 1e-300) {
            double A = (sus * svv - svs * suv) / det;
            double W = (suu * svs - suv * sus) / det;
            // non-negativity: refit single-parameter when a coefficient pins
            if (A < 0.0) {
                A = 0.0;
                W = svs / svv;
            }
            if (W < 0.0) {
                W = 0.0;
                A = sus / suu;
                if (A < 0.0) A = 0.0;
            }
            double chi2 = 0.0;
            int m = 0;
            for (std::size_t k = 0; k < b.f.size(); ++k) {
                if (b.s[k] <= 0.0) continue;
                const double model = A / b.f[k] + W;
                const double sigma = b.s[k] / std::sqrt(static_cast<double>(b.count[k]));
                const double r = (b.s[k] - model) / sigma;
                chi2 += r * r;
                ++m;
            }
            out.fit.flicker_coeff = A;
            out.fit.white_floor = W;
            out.fit.residual = (m > 2) ? chi2 / (m - 2) : 0.0;
            out.fit.valid = true;
        }
    }
    return out;
}

std::uint64_t Histogram2D::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) + overflow;
}

void Histogram2D::merge(const Histogram2D& other) {
    if (other.nx != nx || other.ny != ny || other.xmin != xmin || other.xmax != xmax ||
        other.ymin != ymin || other.ymax != ymax)
        throw std::invalid_argument("histogram layouts differ");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    overflow += other.overflow;
}

Histogram2D histogram2d(std::span<const double> x, std::span<const double> y,
                        int nx, int ny, double xmin, double xmax, double ymin,
                        double ymax) {
    if (x.size() != y.size()) throw std::invalid_argument("series lengths differ");
    if (nx < 1 || ny < 1 || !(xmax > xmin) || !(ymax > ymin))
        throw std::invalid_argument("bad histogram layout");
    Histogram2D h;
    h.xmin = xmin; h.xmax = xmax; h.ymin = ymin; h.ymax = ymax;
    h.nx = nx; h.ny = ny;
    h.counts.assign(static_cast<std::size_t>(nx) * ny, 0);
    const double sx = nx / (xmax - xmin);
    const double sy = ny / (ymax - ymin);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int ix = static_cast<int>(std::floor((x[i] - xmin) * sx));
        const int iy = static_cast<int>(std::floor((y[i] - ymin) * sy));
        if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) {
            ++h.overflow;
            continue;
        }
        ++h.counts[static_cast<std::size_t>(iy) * nx + ix];
    }
    return h;
}

SqrtLawFit fit_sqrt_law(std::span<const double> n_values,
                        std::span<const double> gap_values) {
    if (n_values.size() != gap_values.size() || n_values.size() < 3)
        throw std::invalid_argument("sqrt-law fit needs >= 3 matched points");
    double sn = 0.0, sgn = 0.0, g_mean = 0.0;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (!(n_values[i] > 0.0))
            throw std::invalid_argument("sqrt-law fit needs positive n");
        sn += n_values[i];
        sgn += gap_values[i] * std::sqrt(n_values[i]);
        g_mean += gap_values[i];
    }
    g_mean /= static_cast<double>(n_values.size());
    if (!(sn > 0.0)) throw std::invalid_argument("degenerate sqrt-law input");
    SqrtLawFit fit;
    fit.coefficient = sgn / sn;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        const double r = gap_values[i] - fit.coefficient * std::sqrt(n_values[i]);
        ss_res += r * r;
        ss_tot += (gap_values[i] - g_mean) * (gap_values[i] - g_mean);
    }
    if (!(ss_tot > 0.0)) throw std::invalid_argument("degenerate sqrt-law input");
    fit.r_squared = 1.0 - ss_res / ss_tot;
    return fit;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear fit needs >= 2 matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) throw std::invalid_argument("degenerate linear fit");
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += r * r;
    }
    f.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

namespace {

// Regularized incomplete gamma functions (series + continued fraction).
double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chi_square_p_value(double chi2, int dof) {
    if (dof < 1 || chi2 < 0.0) throw std::invalid_argument("bad chi-square input");
    if (chi2 == 0.0) return 1.0;
    const double a = 0.5 * dof, x = 0.5 * chi2;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double phase_uniformity_p_value(std::span<const double> theta, int bins) {
    if (theta.empty() || bins < 2) throw std::invalid_argument("bad uniformity input");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    for (double t : theta) {
        int b = static_cast<int>((wrap_phase(t) + std::numbers::pi) / two_pi * bins);
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const double expected = static_cast<double>(theta.size()) / bins;
    double chi2 = 0.0;
    for (std::uint64_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    return chi_square_p_value(chi2, bins - 1);
}

double correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("correlation needs matched series");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double cxy = 0, cxx = 0, cyy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        cxy += dx * dy;
        cxx += dx * dx;
        cyy += dy * dy;
    }
    if (!(cxx > 0.0) || !(cyy > 0.0)) return 0.0;
    return cxy / std::sqrt(cxx * cyy);
}

double loglog_slope(const SpectralDensity& psd, double f_lo, double f_hi) {
    const LogBins b = log_bin(psd, f_lo, f_hi);
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < b.f.size(); ++k) {
        if (b.s[k] <= 0.0) continue;
        lx.push_back(std::log10(b.f[k]));
        ly.push_back(std::log10(b.s[k]));
    }
    return linear_fit(lx, ly).slope;
}

}  // namespace njpo
