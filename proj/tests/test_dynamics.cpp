#include <doctest.h>

#include <cmath>

#include "njpo/dynamics.hpp"
#include "njpo/model.hpp"
#include "njpo/stats.hpp"

using namespace njpo;

TEST_SUITE_BEGIN("dynamics");

namespace {

const TwoModeSystem kSys = TwoModeSystem::measured_device();
const double kGamma = kSys.gamma_eff;

NoiseConfig noiseless() {
    NoiseConfig n;
    n.vacuum_noise_on = false;
    return n;
}

}  // namespace

TEST_CASE("drift basics") {
    SUBCASE("ground state is a fixed point") {
        const FieldState f = drift(kSys, {3 * kGamma, 0.0}, {}, FieldState{}, 0.0);
        CHECK(f.a3 == complexd(0.0, 0.0));
        CHECK(f.a4 == complexd(0.0, 0.0));
    }
    SUBCASE("decoupled mode decays as (i zeta - Gamma) A") {
        const PumpDrive pump{0.0, 0.2 * kGamma};
        FieldState s{complexd(0.7, -0.3), complexd(0.0, 0.0)};
        const FieldState f = drift(kSys, pump, {}, s, 0.0);
        const double zeta3 = pump.delta + kSys.mode3.kerr * std::norm(s.a3);
        const complexd expect = complexd(-kSys.mode3.gamma_total, zeta3) * s.a3;
        CHECK(std::abs(f.a3 - expect) < 1e-9 * std::abs(expect));
        CHECK(f.a4 == complexd(0.0, 0.0));
    }
    SUBCASE("drive tone enters as -i sqrt(2 Gamma_30) B(t)") {
        DriveTone tone{3, 2.0, 0.0, 0.5};
        const FieldState f = drift(kSys, {0.0, 0.0}, {{tone}}, FieldState{}, 0.0);
        const complexd expect = complexd(0.0, -1.0) *
                                std::sqrt(2.0 * kSys.mode3.gamma_ext) * 2.0 *
                                std::polar(1.0, 0.5);
        CHECK(std::abs(f.a3 - expect) < 1e-12 * std::abs(expect));
    }
}

TEST_CASE("noiseless region-II run converges to the closed-form intensities") {
    const PumpDrive pump{3 * kGamma, 0.0};
    const SteadyStatePhotons ss = steady_state_photons(kSys, pump);
    IntegratorConfig cfg;
    cfg.duration = 20.0 / kGamma;
    cfg.record_stride = 20;
    NoiseConfig noise = noiseless();
    noise.rng_seed = 3;

    const Trajectory traj = integrate(kSys, pump, {}, noise, cfg);
    const double n3 = std::norm(traj.a3.back());
    const double n4 = std::norm(traj.a4.back());
    CHECK(n3 == doctest::Approx(ss.n3).epsilon(0.01));
    CHECK(n4 == doctest::Approx(ss.n4).epsilon(0.01));
    CHECK(n3 == doctest::Approx(6.48).epsilon(0.01));

    SUBCASE("any nonzero seed state converges") {
        for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
            IntegratorConfig c2 = cfg;
            NoiseConfig n2 = noise;
            n2.rng_seed = seed;
            const Trajectory t2 = integrate(kSys, pump, {}, n2, c2);
            CHECK(std::norm(t2.a3.back()) == doctest::Approx(ss.n3).epsilon(0.01));
        }
    }
}

TEST_CASE("region-I runs decay to the ground state") {
    IntegratorConfig cfg;
    cfg.duration = 60.0 / kGamma;
    cfg.record_stride = 50;
    const Trajectory traj =
        integrate(kSys, {0.6 * kGamma, 0.0}, {}, noiseless(), cfg);
    CHECK(std::norm(traj.a3.back()) < 1e-6);
    CHECK(std::norm(traj.a4.back()) < 1e-6);
}

TEST_CASE("region III is bistable: attractor depends on the seed state") {
    const double dth = threshold_detuning(kSys, 3 * kGamma);
    const PumpDrive pump{3 * kGamma, -1.3 * dth};
    IntegratorConfig cfg;
    cfg.duration = 60.0 / kGamma;
    cfg.record_stride = 50;

    // a small seed decays back to the (stable) ground state
    const Trajectory ground = integrate(kSys, pump, {}, noiseless(), cfg);
    CHECK(std::norm(ground.a3.back()) < 1e-6);

    // exact zero stays zero
    IntegratorConfig czero = cfg;
    czero.initial_state = FieldState{};
    const Trajectory zero = integrate(kSys, pump, {}, noiseless(), czero);
    CHECK(std::norm(zero.a3.back()) == 0.0);

    // a seed near the oscillating solution stays on it
    const SteadyStatePhotons ss = steady_state_photons(kSys, pump);
    IntegratorConfig cosc = cfg;
    FieldState near = steady_state_field(kSys, pump, 0.3);
    near.a3 *= 1.02;
    cosc.initial_state = near;
    const Trajectory osc = integrate(kSys, pump, {}, noiseless(), cosc);
    CHECK(std::norm(osc.a3.back()) == doctest::Approx(ss.n3).epsilon(0.01));
    CHECK(std::norm(osc.a4.back()) == doctest::Approx(ss.n4).epsilon(0.01));
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
    const PumpDrive pump{3 * kGamma, -0.4 * kGamma};
    NoiseConfig noise;
    noise.rng_seed = 77;
    noise.flicker_amplitude = 1.0;
    IntegratorConfig cfg;
    cfg.duration = 0.2e-3;
    cfg.record_stride = 10;

    const Trajectory a = integrate(kSys, pump, {}, noise, cfg);
    const Trajectory b = integrate(kSys, pump, {}, noise, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.a3[i] == b.a3[i]);
        CHECK(a.a4[i] == b.a4[i]);
    }
    const Trajectory c = reproduce(a.provenance);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.a3[i] == c.a3[i]);

    NoiseConfig other = noise;
    other.rng_seed = 78;
    const Trajectory d = integrate(kSys, pump, {}, other, cfg);
    CHECK(a.a3.back() != d.a3.back());
}

TEST_CASE("step-halving: dt and dt/2 noiseless trajectories agree to 1e-6") {
    const PumpDrive pump{3 * kGamma, 0.3 * kGamma};
    IntegratorConfig cfg;
    cfg.dt = 1e-9;
    cfg.duration = 10.0 / kGamma;
    cfg.record_stride = 8;
    cfg.initial_state = FieldState{complexd(1e-3, 0.0), complexd(0.0, -1e-3)};

    IntegratorConfig half = cfg;
    half.dt = 0.5e-9;
    half.record_stride = 16;

    const Trajectory a = integrate(kSys, pump, {}, noiseless(), cfg);
    const Trajectory b = integrate(kSys, pump, {}, noiseless(), half);
    REQUIRE(a.size() == b.size());
    double max_diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(a.a3[i] - b.a3[i]));
        max_diff = std::max(max_diff, std::abs(a.a4[i] - b.a4[i]));
    }
    CHECK(max_diff < 1e-6);
}

TEST_CASE("stability guard rejects oversized steps") {
    IntegratorConfig cfg;
    cfg.dt = 1e-7;  // dt * zeta ~ 1.4 at eps = 3 Gamma
    cfg.duration = 1e-5;
    CHECK_THROWS_AS(integrate(kSys, {3 * kGamma, 0.0}, {}, noiseless(), cfg),
                    std::invalid_argument);
}

TEST_CASE("non-finite states abort with the step index") {
    IntegratorConfig cfg;
    cfg.dt = 1e-9;
    cfg.duration = 1e-5;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cfg.initial_state = FieldState{complexd(nan, 0.0), complexd(0.0, 0.0)};
    try {
        integrate(kSys, {0.0, 0.0}, {}, noiseless(), cfg);
        FAIL("expected integrator_error");
    } catch (const integrator_error& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("noisy region-II run fluctuates around the closed form") {
    const PumpDrive pump{3 * kGamma, 0.0};
    const SteadyStatePhotons ss = steady_state_photons(kSys, pump);
    NoiseConfig noise;
    noise.rng_seed = 8;
    IntegratorConfig cfg;
    cfg.duration = 8e-3;
    cfg.record_stride = 100;
    const Trajectory traj = integrate(kSys, pump, {}, noise, cfg);
    const std::size_t k0 = traj.index_at(60.0 / kGamma);
    double mean3 = 0.0;
    for (std::size_t k = k0; k < traj.size(); ++k) mean3 += std::norm(traj.a3[k]);
    mean3 /= static_cast<double>(traj.size() - k0);
    CHECK(mean3 == doctest::Approx(ss.n3).epsilon(0.05));
}

TEST_CASE("noisy steady state anti-correlates the two mode phases") {
    // theta3 + theta4 is pinned, so fluctuations about the means satisfy
    // corr(d theta3, -d theta4) ~ 1
    const PumpDrive pump{3 * kGamma, 0.0};
    const double d0 = oscillation_frequency_shift(kSys, pump);
    NoiseConfig noise;
    noise.rng_seed = 21;
    IntegratorConfig cfg;
    cfg.duration = 25e-3;
    cfg.record_stride = 50;
    const Trajectory traj = integrate(kSys, pump, {}, noise, cfg);
    const Quadratures q3 = demodulate(traj, 3, d0, std::nullopt, 10);
    const Quadratures q4 = demodulate(traj, 4, -d0, std::nullopt, 10);
    const std::vector<double> th3 = phase_series(q3);
    std::vector<double> th4_neg = phase_series(q4);
    for (double& v : th4_neg) v = -v;
    CHECK(correlation(th3, th4_neg) > 0.9);
}

TEST_CASE("injection tone frame resolution tracks the emission frequency") {
    const PumpDrive pump{3 * kGamma, 0.0};
    const double d0 = oscillation_frequency_shift(kSys, pump);
    InjectionTone tone{3, 1.0, 0.0, 0.0};
    CHECK(drive_tone_for(kSys, pump, tone).frame_rate == doctest::Approx(-d0));
    tone.mode_index = 4;
    CHECK(drive_tone_for(kSys, pump, tone).frame_rate == doctest::Approx(d0));
    tone.mode_index = 3;
    tone.detuning = two_pi * 1e5;
    CHECK(drive_tone_for(kSys, pump, tone).frame_rate ==
          doctest::Approx(-(d0 + two_pi * 1e5)));
}

TEST_SUITE_END();
