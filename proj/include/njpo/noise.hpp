#pragma once

// Seeded noise generation for the Langevin integrator: white vacuum-level
// increments per mode plus an optional 1/f pump-detuning series built from a
// bank of Ornstein-Uhlenbeck processes.

#include <cstdint>
#include <random>
#include <vector>

#include "njpo/types.hpp"

namespace njpo {

struct NoiseConfig {
    bool vacuum_noise_on = true;
    double vacuum_scale = 1.0;      ///< multiplier on the half-photon vacuum level
    double flicker_amplitude = 0.0; ///< 1/f detuning-noise variance per decade (rad^2/s^2)
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Marsaglia-polar normal sampler over mt19937_64. Identical seeds give
/// identical streams on any platform; std::normal_distribution is not
/// guaranteed to.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double uniform();  ///< in [0, 1)
    void normal_pair(double& a, double& b);

private:
    std::mt19937_64 rng_;
};

/// Additive noise for one integration step.
struct StepNoise {
    complexd xi3{0.0, 0.0};   ///< amplitude increment for mode 3
    complexd xi4{0.0, 0.0};   ///< amplitude increment for mode 4
    double delta_offset = 0.0;  ///< flicker addition to the pump detuning
};

/// Streaming generator used by the integrator. Per step the vacuum channel
/// draws one complex increment per loss channel (external and internal, in
/// proportion Gamma_n0 : Gamma_n - Gamma_n0) and sums them; each quadrature
/// carries variance Gamma_n * vacuum_scale/2 * dt.
class NoiseStreamGenerator {
public:
    NoiseStreamGenerator(const TwoModeSystem& sys, const NoiseConfig& cfg,
                         double dt, double duration);

    void next(StepNoise& out);

    /// Random initial state |A| = amp with uniform phases, drawn from the
    /// same seeded stream ahead of the step noise.
    FieldState draw_initial_state(double amp);

    int flicker_component_count() const { return static_cast<int>(ou_rate_.size()); }

private:
    GaussianSampler gauss_;
    bool vacuum_on_ = false;
    double sig3_ext_ = 0.0, sig3_int_ = 0.0;
    double sig4_ext_ = 0.0, sig4_int_ = 0.0;
    // OU bank: x_k+1 = decay*x_k + kick*xi
    std::vector<double> ou_rate_;
    std::vector<double> ou_decay_;
    std::vector<double> ou_kick_;
    std::vector<double> ou_state_;
};

/// Materialized noise streams, for analysis and tests.
struct NoiseStreams {
    std::vector<complexd> xi3;
    std::vector<complexd> xi4;
    std::vector<double> delta_offset;
};

NoiseStreams generate_noise_stream(const TwoModeSystem& sys, const NoiseConfig& cfg,
                                   std::size_t n_steps, double dt);

}  // namespace njpo
