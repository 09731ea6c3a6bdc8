#include "njpo/noise.hpp"

#include <cmath>

namespace njpo {

void NoiseConfig::validate() const {
    if (!(vacuum_scale >= 0.0))
        throw std::invalid_argument("vacuum_scale must be >= 0");
    if (!(flicker_amplitude >= 0.0))
        throw std::invalid_argument("flicker_amplitude must be >= 0");
}

double GaussianSampler::uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void GaussianSampler::normal_pair(double& a, double& b) {
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    a = u * m;
    b = v * m;
}

NoiseStreamGenerator::NoiseStreamGenerator(const TwoModeSystem& sys,
                                           const NoiseConfig& cfg, double dt,
                                           double duration)
    : gauss_(cfg.rng_seed) {
    cfg.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    vacuum_on_ = cfg.vacuum_noise_on && cfg.vacuum_scale > 0.0;
    if (vacuum_on_) {
        const double half = 0.5 * cfg.vacuum_scale * dt;
        sig3_ext_ = std::sqrt(sys.mode3.gamma_ext * half);
        sig3_int_ = std::sqrt((sys.mode3.gamma_total - sys.mode3.gamma_ext) * half);
        sig4_ext_ = std::sqrt(sys.mode4.gamma_ext * half);
        sig4_int_ = std::sqrt((sys.mode4.gamma_total - sys.mode4.gamma_ext) * half);
    }
    if (cfg.flicker_amplitude > 0.0) {
        // Equal-variance OU components with log-spaced rates, 3 per decade,
        // covering [1/duration, 1/(10 dt)]. Summed Lorentzians approximate a
        // 1/f spectrum across that band.
        const double f_lo = 1.0 / std::max(duration, 10.0 * dt);
        const double f_hi = 1.0 / (10.0 * dt);
        const double decades = std::log10(f_hi / f_lo);
        const int n = std::max(1, static_cast<int>(std::ceil(3.0 * decades)) + 1);
        const double var = cfg.flicker_amplitude / 3.0;  // variance per component
        for (int k = 0; k < n; ++k) {
            const double f = f_lo * std::pow(10.0, k / 3.0);
            const double rate = two_pi * std::min(f, f_hi);
            ou_rate_.push_back(rate);
            const double e = std::exp(-rate * dt);
            ou_decay_.push_back(e);
            ou_kick_.push_back(std::sqrt(var * (1.0 - e * e)));
        }
        // stationary start
        ou_state_.resize(ou_rate_.size());
        const double sd = std::sqrt(var);
        for (std::size_t k = 0; k < ou_state_.size(); k += 2) {
            double a, b;
            gauss_.normal_pair(a, b);
            ou_state_[k] = sd * a;
            if (k + 1 < ou_state_.size()) ou_state_[k + 1] = sd * b;
        }
    }
}

FieldState NoiseStreamGenerator::draw_initial_state(double amp) {
    FieldState s;
    const double p3 = two_pi * gauss_.uniform();
    const double p4 = two_pi * gauss_.uniform();
    s.a3 = std::polar(amp, p3);
    s.a4 = std::polar(amp, p4);
    return s;
}

void NoiseStreamGenerator::next(StepNoise& out) {
    if (vacuum_on_) {
        double a, b, c, d;
        gauss_.normal_pair(a, b);
        gauss_.normal_pair(c, d);
        out.xi3 = complexd(sig3_ext_ * a + sig3_int_ * c, sig3_ext_ * b + sig3_int_ * d);
        gauss_.normal_pair(a, b);
        gauss_.normal_pair(c, d);
        out.xi4 = complexd(sig4_ext_ * a + sig4_int_ * c, sig4_ext_ * b + sig4_int_ * d);
    } else {
        out.xi3 = out.xi4 = complexd(0.0, 0.0);
    }
    if (!ou_state_.empty()) {
        double sum = 0.0;
        for (std::size_t k = 0; k < ou_state_.size(); k += 2) {
            double a, b;
            gauss_.normal_pair(a, b);
            ou_state_[k] = ou_decay_[k] * ou_state_[k] + ou_kick_[k] * a;
            sum += ou_state_[k];
            if (k + 1 < ou_state_.size()) {
                ou_state_[k + 1] = ou_decay_[k + 1] * ou_state_[k + 1] + ou_kick_[k + 1] * b;
                sum += ou_state_[k + 1];
            }
        }
        out.delta_offset = sum;
    } else {
        out.delta_offset = 0.0;
    }
}

NoiseStreams generate_noise_stream(const TwoModeSystem& sys, const NoiseConfig& cfg,
                                   std::size_t n_steps, double dt) {
    NoiseStreamGenerator gen(sys, cfg, dt, n_steps * dt);
    NoiseStreams out;
    out.xi3.resize(n_steps);
    out.xi4.resize(n_steps);
    out.delta_offset.resize(n_steps);
    StepNoise s;
    for (std::size_t i = 0; i < n_steps; ++i) {
        gen.next(s);
        out.xi3[i] = s.xi3;
        out.xi4[i] = s.xi4;
        out.delta_offset[i] = s.delta_offset;
    }
    return out;
}

}  // namespace njpo
