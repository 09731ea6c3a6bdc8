#include "njpo/experiments.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace njpo {

std::vector<double> SweepAxis::values() const {
    if (points < 1) throw std::invalid_argument("sweep axis needs >= 1 point");
    std::vector<double> v(static_cast<std::size_t>(points));
    if (points == 1) {
        v[0] = min;
        return v;
    }
    if (log_scale) {
        if (!(min > 0.0) || !(max > 0.0))
            throw std::invalid_argument("log axis needs positive bounds");
        const double r = std::log(max / min) / (points - 1);
        for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = min * std::exp(r * i);
    } else {
        const double step = (max - min) / (points - 1);
        for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = min + step * i;
    }
    return v;
}

std::size_t SweepSpec::point_count() const {
    std::size_t n = 1;
    for (const SweepAxis& a : axes) n *= static_cast<std::size_t>(a.points);
    return n;
}

std::vector<double> SweepSpec::coords(std::size_t index) const {
    std::vector<double> c(axes.size());
    std::size_t rem = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
        const auto pts = static_cast<std::size_t>(axes[a].points);
        const std::size_t i = rem % pts;
        rem /= pts;
        c[a] = axes[a].values()[i];
    }
    return c;
}

PumpDrive ExperimentContext::resolved_operating_point() const {
    PumpDrive p = operating_point;
    if (p.epsilon == 0.0) p.epsilon = 3.0 * system.gamma_eff;
    return p;
}

int ExperimentContext::resolved_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(hw == 0 ? 2u : hw, 8u));
}

double ExperimentResult::value(std::size_t point, const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == column) return points.at(point).values.at(c);
    throw std::out_of_range("no column " + column);
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
    const int nw = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (nw == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mutex;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

namespace {

/// Integrator settings recording at ~fs_target with the stability-guard step.
IntegratorConfig make_recorder(const TwoModeSystem& sys, const PumpDrive& pump,
                               double duration, double fs_target) {
    IntegratorConfig cfg;
    cfg.dt = suggest_dt(sys, pump);
    cfg.record_stride = std::max(1, static_cast<int>(std::round(1.0 / (fs_target * cfg.dt))));
    cfg.duration = duration;
    return cfg;
}

double tail_mean_photons(const Trajectory& traj, int mode, double discard) {
    const std::size_t k0 = traj.index_at(discard);
    const std::vector<complexd>& a = (mode == 3) ? traj.a3 : traj.a4;
    if (k0 >= a.size()) return 0.0;
    double acc = 0.0;
    for (std::size_t k = k0; k < a.size(); ++k) acc += std::norm(a[k]);
    return acc / static_cast<double>(a.size() - k0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stability map
// ---------------------------------------------------------------------------

SweepSpec default_stability_sweep(const TwoModeSystem& sys, int eps_points,
                                  int delta_points) {
    const double g = sys.gamma_eff;
    SweepSpec s;
    s.axes = {SweepAxis{"epsilon", 0.25 * g, 4.0 * g, eps_points, false},
              SweepAxis{"delta", -8.0 * g, 4.0 * g, delta_points, false}};
    return s;
}

ExperimentResult stability_map(const ExperimentContext& ctx, const SweepSpec& sweep) {
    if (sweep.axes.size() != 2)
        throw std::invalid_argument("stability map needs (epsilon, delta) axes");
    ExperimentResult res;
    res.name = "stability-map";
    res.sweep = sweep;
    res.context = ctx;
    res.coord_names = {"epsilon_rad_s", "delta_rad_s"};
    res.columns = {"region",    "c3_theory", "c4_theory", "c3_ground",
                   "c4_ground", "c3_osc",    "c4_osc"};
    const std::size_t n = sweep.point_count();
    res.points.resize(n);

    const bool noisy = ctx.noise.vacuum_noise_on && ctx.noise.vacuum_scale > 0.0;
    const double t_converge =
        noisy ? 12e-3 : 300.0 / ctx.system.gamma_eff;
    const double discard = noisy ? 60.0 / ctx.system.gamma_eff : 0.9 * t_converge;

    parallel_for(n, ctx.resolved_workers(), [&](std::size_t i) {
        PointRecord& rec = res.points[i];
        rec.coords = sweep.coords(i);
        const PumpDrive pump{rec.coords[0], rec.coords[1]};
        const StabilityRegion region = classify_region(ctx.system, pump);

        double c3_th = 0.0, c4_th = 0.0;
        if (region != StabilityRegion::GroundOnly) {
            const OutputFlux f = output_flux(ctx.system,
                                             steady_state_photons(ctx.system, pump));
            c3_th = f.c3;
            c4_th = f.c4;
        }
        try {
            IntegratorConfig cfg = make_recorder(ctx.system, pump, t_converge, 2e6);
            NoiseConfig noise = ctx.noise;
            noise.rng_seed = sweep.master_seed ^ (2 * i);
            const Trajectory ground = integrate(ctx.system, pump, {}, noise, cfg);

            noise.rng_seed = sweep.master_seed ^ (2 * i + 1);
            IntegratorConfig cfg_osc = cfg;
            if (region != StabilityRegion::GroundOnly)
                cfg_osc.initial_state = steady_state_field(ctx.system, pump);
            const Trajectory osc = integrate(ctx.system, pump, {}, noise, cfg_osc);

            const double g30 = 2.0 * ctx.system.mode3.gamma_ext;
            const double g40 = 2.0 * ctx.system.mode4.gamma_ext;
            rec.values = {static_cast<double>(region),
                          c3_th,
                          c4_th,
                          g30 * tail_mean_photons(ground, 3, discard),
                          g40 * tail_mean_photons(ground, 4, discard),
                          g30 * tail_mean_photons(osc, 3, discard),
                          g40 * tail_mean_photons(osc, 4, discard)};
        } catch (const std::exception& e) {
            rec.error = e.what();
            rec.values.assign(res.columns.size(),
                              std::numeric_limits<double>::quiet_NaN());
            rec.values[0] = static_cast<double>(region);
        }
    });
    return res;
}

// ---------------------------------------------------------------------------
// Pump ramp
// ---------------------------------------------------------------------------

RampResult pump_ramp_spectrogram(const ExperimentContext& ctx,
                                 const SweepAxis& eps_axis, double delta) {
    RampResult out;
    out.table.name = "pump-ramp";
    out.table.sweep.axes = {eps_axis};
    out.table.sweep.master_seed = 1;
    out.table.context = ctx;
    out.table.coord_names = {"epsilon_rad_s"};
    out.table.columns = {"peak3_hz", "peak4_hz", "theory_delta0_hz", "onset_delta3_hz"};
    const std::vector<double> eps = eps_axis.values();
    out.table.points.resize(eps.size());
    out.psd3.resize(eps.size());
    out.psd4.resize(eps.size());

    const double onset3 = onset_frequency_shift(ctx.system, delta).delta3;
    parallel_for(eps.size(), ctx.resolved_workers(), [&](std::size_t i) {
        PointRecord& rec = out.table.points[i];
        rec.coords = {eps[i]};
        const PumpDrive pump{eps[i], delta};
        double d0 = std::numeric_limits<double>::quiet_NaN();
        if (classify_region(ctx.system, pump) != StabilityRegion::GroundOnly)
            d0 = oscillation_frequency_shift(ctx.system, pump);
        try {
            const double t_conv = 400.0 / ctx.system.gamma_eff;
            const int nseg = 4096;
            const double fs = 20e6;
            IntegratorConfig cfg =
                make_recorder(ctx.system, pump, t_conv + 3.5 * nseg / fs, fs);
            NoiseConfig noise = ctx.noise;
            noise.rng_seed = out.table.sweep.master_seed ^ i;
            const Trajectory traj = integrate(ctx.system, pump, {}, noise, cfg);
            const Quadratures q3 = demodulate(traj, 3, 0.0, t_conv);
            const Quadratures q4 = demodulate(traj, 4, 0.0, t_conv);
            out.psd3[i] = photon_spectral_density(q3, nseg);
            out.psd4[i] = photon_spectral_density(q4, nseg);
            const LinewidthResult l3 = linewidth(out.psd3[i]);
            const LinewidthResult l4 = linewidth(out.psd4[i]);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            rec.values = {l3.status == LinewidthResult::Status::NoLine ? nan
                                                                       : l3.peak_freq_hz,
                          l4.status == LinewidthResult::Status::NoLine ? nan
                                                                       : l4.peak_freq_hz,
                          to_hz(d0), to_hz(onset3)};
        } catch (const std::exception& e) {
            rec.error = e.what();
            rec.values.assign(out.table.columns.size(),
                              std::numeric_limits<double>::quiet_NaN());
        }
    });
    return out;
}

RampResult pump_ramp_spectrogram(const ExperimentContext& ctx) {
    const double g = ctx.system.gamma_eff;
    return pump_ramp_spectrogram(ctx, SweepAxis{"epsilon", 1.05 * g, 4.0 * g, 13, false},
                                 0.26 * g);
}

// ---------------------------------------------------------------------------
// Injection locking
// ---------------------------------------------------------------------------

namespace {

struct LockPointSetup {
    PumpDrive pump;
    double d0;
    std::vector<DriveTone> tones;
};

LockPointSetup lock_setup(const ExperimentContext& ctx, double n_photons) {
    LockPointSetup s;
    s.pump = ctx.resolved_operating_point();
    s.d0 = oscillation_frequency_shift(ctx.system, s.pump);
    if (n_photons > 0.0) {
        InjectionTone tone;
        tone.mode_index = 3;
        tone.amplitude = tone_amplitude_for_photon_number(ctx.system, 3, n_photons);
        tone.detuning = 0.0;
        tone.phase = 0.0;
        s.tones = {drive_tone_for(ctx.system, s.pump, tone)};
    }
    return s;
}

}  // namespace

LockScanResult injection_locking_scan(const ExperimentContext& ctx,
                                      const LockScanOptions& opt) {
    LockScanResult out;
    out.table.name = "injection-locking";
    out.table.context = ctx;
    out.table.sweep.axes = {SweepAxis{"n_photons", 0, 0,
                                      static_cast<int>(opt.photon_numbers.size()),
                                      false}};
    out.table.sweep.master_seed = 1;
    out.table.coord_names = {"n_photons"};
    out.table.columns = {"phase_std3", "phase_std4", "linewidth3_hz", "linewidth4_hz",
                         "lw3_status", "lw4_status"};
    const std::size_t np = opt.photon_numbers.size();
    out.table.points.resize(np);
    out.stats3.resize(np);
    out.stats4.resize(np);

    const double fs = 4e6;
    // Pooled phase samples from an ensemble of trajectories per point.
    std::vector<std::vector<double>> pool3(np * static_cast<std::size_t>(opt.ensemble));
    std::vector<std::vector<double>> pool4(pool3.size());

    parallel_for(pool3.size(), ctx.resolved_workers(), [&](std::size_t task) {
        const std::size_t ip = task / static_cast<std::size_t>(opt.ensemble);
        const LockPointSetup s = lock_setup(ctx, opt.photon_numbers[ip]);
        IntegratorConfig cfg = make_recorder(ctx.system, s.pump, opt.duration, fs);
        NoiseConfig noise = ctx.noise;
        noise.rng_seed = out.table.sweep.master_seed ^ task;
        const Trajectory traj = integrate(ctx.system, s.pump, s.tones, noise, cfg);
        const int decim =
            std::max(1, static_cast<int>(std::round(fs / opt.detection_bandwidth)));
        const Quadratures q3 = demodulate(traj, 3, s.d0, std::nullopt, decim);
        const Quadratures q4 = demodulate(traj, 4, -s.d0, std::nullopt, decim);
        const auto stride = std::max<std::size_t>(
            1, static_cast<std::size_t>(opt.subsample_interval * q3.sample_rate));
        for (std::size_t k = 0; k < q3.size(); k += stride) {
            pool3[task].push_back(std::arg(q3.iq[k]));
            pool4[task].push_back(std::arg(q4.iq[k]));
        }
    });

    // Linewidth runs, one per point.
    std::vector<LinewidthResult> lw3(np), lw4(np);
    parallel_for(np, ctx.resolved_workers(), [&](std::size_t ip) {
        const LockPointSetup s = lock_setup(ctx, opt.photon_numbers[ip]);
        IntegratorConfig cfg =
            make_recorder(ctx.system, s.pump, opt.linewidth_duration, fs);
        NoiseConfig noise = ctx.noise;
        noise.rng_seed = out.table.sweep.master_seed ^ (0x10000 + ip);
        const Trajectory traj = integrate(ctx.system, s.pump, s.tones, noise, cfg);
        lw3[ip] = linewidth(
            photon_spectral_density(demodulate(traj, 3, s.d0), opt.linewidth_segment));
        lw4[ip] = linewidth(
            photon_spectral_density(demodulate(traj, 4, -s.d0), opt.linewidth_segment));
    });

    for (std::size_t ip = 0; ip < np; ++ip) {
        std::vector<double> th3, th4;
        for (int k = 0; k < opt.ensemble; ++k) {
            const std::size_t task = ip * static_cast<std::size_t>(opt.ensemble) +
                                     static_cast<std::size_t>(k);
            th3.insert(th3.end(), pool3[task].begin(), pool3[task].end());
            th4.insert(th4.end(), pool4[task].begin(), pool4[task].end());
        }
        out.stats3[ip] = phase_statistics(th3);
        out.stats4[ip] = phase_statistics(th4);
        PointRecord& rec = out.table.points[ip];
        rec.coords = {opt.photon_numbers[ip]};
        rec.values = {out.stats3[ip].std_dev,
                      out.stats4[ip].std_dev,
                      lw3[ip].width_hz,
                      lw4[ip].width_hz,
                      static_cast<double>(lw3[ip].status),
                      static_cast<double>(lw4[ip].status)};
    }
    return out;
}

LinewidthResult free_running_linewidth(const ExperimentContext& ctx, int mode_index,
                                       double duration, int segment_length,
                                       std::uint64_t seed) {
    return locked_linewidth(ctx, mode_index, 0.0, duration, segment_length, seed);
}

LinewidthResult locked_linewidth(const ExperimentContext& ctx, int mode_index,
                                 double n_photons, double duration,
                                 int segment_length, std::uint64_t seed) {
    const LockPointSetup s = lock_setup(ctx, n_photons);
    const double fs = 1e6;
    IntegratorConfig cfg = make_recorder(ctx.system, s.pump, duration, fs);
    NoiseConfig noise = ctx.noise;
    noise.rng_seed = seed;
    const Trajectory traj = integrate(ctx.system, s.pump, s.tones, noise, cfg);
    const double detuning = (mode_index == 3) ? s.d0 : -s.d0;
    return linewidth(
        photon_spectral_density(demodulate(traj, mode_index, detuning), segment_length));
}

// ---------------------------------------------------------------------------
// Synchronization
// ---------------------------------------------------------------------------

namespace {

struct SyncPointOutcome {
    SyncPointDetail detail;
    std::string error;
};

SyncPointOutcome sync_point(const ExperimentContext& ctx, const SyncScanOptions& opt,
                            double n_photons, double delta_s, std::uint64_t seed) {
    SyncPointOutcome out;
    out.detail.n_photons = n_photons;
    out.detail.signal_detuning = delta_s;
    try {
        const PumpDrive pump = ctx.resolved_operating_point();
        const double d0 = oscillation_frequency_shift(ctx.system, pump);
        InjectionTone tone;
        tone.mode_index = 3;
        tone.amplitude = tone_amplitude_for_photon_number(ctx.system, 3, n_photons);
        tone.detuning = delta_s;
        const std::vector<DriveTone> tones{drive_tone_for(ctx.system, pump, tone)};

        const double fs = 4e6;
        IntegratorConfig cfg = make_recorder(ctx.system, pump, opt.duration, fs);
        NoiseConfig noise = ctx.noise;
        noise.rng_seed = seed;
        const Trajectory traj = integrate(ctx.system, pump, tones, noise, cfg);

        const SpectralDensity psd3 =
            photon_spectral_density(demodulate(traj, 3, d0), opt.segment);
        const SpectralDensity psd4 =
            photon_spectral_density(demodulate(traj, 4, -d0), opt.segment);

        // Synchronized when the near-carrier band outside the signal window
        // holds little power: the free-running line has merged with the signal.
        const double f_sig = to_hz(delta_s);
        const double win = 3.0 * psd3.rbw_hz;
        const double band = std::max(opt.near_band_hz, std::abs(f_sig) + 2.0 * win);
        double in_band = 0.0, in_window = 0.0;
        for (std::size_t i = 0; i < psd3.freq_hz.size(); ++i) {
            const double f = psd3.freq_hz[i];
            const bool window = std::abs(f - f_sig) <= win;
            if (window) in_window += psd3.value[i];
            else if (std::abs(f) <= band) in_band += psd3.value[i];
        }
        const double total = in_band + in_window;
        out.detail.residual = (total > 0.0) ? in_band / total : 1.0;
        out.detail.synchronized = out.detail.residual < opt.sync_residual_threshold;
        out.detail.peaks3 = detect_peaks(psd3, 6.0);
        out.detail.peaks4 = detect_peaks(psd4, 6.0);
        out.detail.mode4_peak_hz = linewidth(psd4).peak_freq_hz;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

SyncScanResult synchronization_scan(const ExperimentContext& ctx,
                                    const SyncScanOptions& opt) {
    SyncScanResult out;
    out.table.name = "synchronization";
    out.table.context = ctx;
    out.table.sweep.master_seed = 1;
    out.table.coord_names = {"n_photons", "delta_s_rad_s"};
    out.table.columns = {"synchronized", "residual", "mode4_peak_hz"};

    struct Task {
        double n;
        double ds;
        int k;  // grid index within the row, [-P, P]
    };
    std::vector<Task> tasks;
    std::vector<double> steps;
    for (double n : opt.photon_numbers) {
        const double step = two_pi * 1e6 * opt.span_scale * std::sqrt(n) /
                            opt.points_per_side;
        steps.push_back(step);
        for (int k = -opt.points_per_side; k <= opt.points_per_side; ++k)
            tasks.push_back({n, step * k, k});
    }
    out.table.points.resize(tasks.size());
    out.details.resize(tasks.size());

    parallel_for(tasks.size(), ctx.resolved_workers(), [&](std::size_t i) {
        const Task& t = tasks[i];
        SyncPointOutcome o =
            sync_point(ctx, opt, t.n, t.ds, out.table.sweep.master_seed ^ i);
        out.details[i] = std::move(o.detail);
        PointRecord& rec = out.table.points[i];
        rec.coords = {t.n, t.ds};
        rec.error = o.error;
        if (o.error.empty()) {
            rec.values = {out.details[i].synchronized ? 1.0 : 0.0,
                          out.details[i].residual, out.details[i].mode4_peak_hz};
        } else {
            rec.values.assign(out.table.columns.size(),
                              std::numeric_limits<double>::quiet_NaN());
        }
    });

    // Gap per photon number: contiguous synchronized interval through zero.
    const int row = 2 * opt.points_per_side + 1;
    for (std::size_t in = 0; in < opt.photon_numbers.size(); ++in) {
        const std::size_t base = in * static_cast<std::size_t>(row);
        const int P = opt.points_per_side;
        const auto flag = [&](int k) {
            return out.details[base + static_cast<std::size_t>(k + P)].synchronized;
        };
        if (!flag(0)) continue;  // no measurable gap
        int kp = 0, kn = 0;
        while (kp < P && flag(kp + 1)) ++kp;
        while (kn < P && flag(-(kn + 1))) ++kn;
        out.gap_n.push_back(opt.photon_numbers[in]);
        out.gap_width.push_back((kp + kn + 1) * steps[in]);
        out.gap_step.push_back(steps[in]);
    }
    if (out.gap_n.size() >= 3)
        out.sqrt_fit = fit_sqrt_law(out.gap_n, out.gap_width);
    return out;
}

// ---------------------------------------------------------------------------
// Idler census
// ---------------------------------------------------------------------------

IdlerCensus idler_census(const ExperimentContext& ctx, const IdlerCensusOptions& opt) {
    IdlerCensus census;
    census.signal_detuning = opt.signal_detuning;

    const PumpDrive pump = ctx.resolved_operating_point();
    const double d0 = oscillation_frequency_shift(ctx.system, pump);
    InjectionTone tone;
    tone.mode_index = 3;
    tone.amplitude = tone_amplitude_for_photon_number(ctx.system, 3, opt.n_photons);
    tone.detuning = opt.signal_detuning;
    const std::vector<DriveTone> tones{drive_tone_for(ctx.system, pump, tone)};

    const double fs = 4e6;
    IntegratorConfig cfg = make_recorder(ctx.system, pump, opt.duration, fs);
    NoiseConfig noise = ctx.noise;
    noise.rng_seed = 7;
    noise.vacuum_scale *= opt.vacuum_scale;
    const Trajectory traj = integrate(ctx.system, pump, tones, noise, cfg);
    const SpectralDensity psd3 =
        photon_spectral_density(demodulate(traj, 3, d0), opt.segment);
    const SpectralDensity psd4 =
        photon_spectral_density(demodulate(traj, 4, -d0), opt.segment);

    census.peaks3 = detect_peaks(psd3, opt.floor_offset_db, opt.prominence_db);
    census.peaks4 = detect_peaks(psd4, opt.floor_offset_db, opt.prominence_db);
    if (census.peaks3.empty() || census.peaks4.empty())
        throw std::runtime_error("idler census: no peaks detected");

    const double f_sig = to_hz(opt.signal_detuning);
    const double tol_sig = 3.0 * psd3.rbw_hz;

    // The injected line.
    const Peak* sig = nullptr;
    for (const Peak& p : census.peaks3)
        if (std::abs(p.freq_hz - f_sig) < tol_sig && (!sig || p.height > sig->height))
            sig = &p;
    if (!sig) throw std::runtime_error("idler census: injected signal line not found");
    census.signal3 = *sig;
    census.narrow_width_limit_hz = 3.0 * sig->width_hz;

    // Oscillation center: the most powerful non-signal structure well inside
    // the band; integrated power (height x width) beats height alone for
    // ragged pulled lines.
    const Peak* osc = nullptr;
    for (const Peak& p : census.peaks3) {
        if (std::abs(p.freq_hz - f_sig) < std::max(tol_sig, 3.0 * sig->width_hz))
            continue;
        if (std::abs(p.freq_hz) > 0.75 * std::abs(f_sig)) continue;
        if (!osc || p.height * p.width_hz > osc->height * osc->width_hz) osc = &p;
    }
    if (!osc) throw std::runtime_error("idler census: oscillation line not found");
    census.osc3_hz = osc->freq_hz;
    census.effective_detuning_hz = f_sig - osc->freq_hz;

    const double dse = census.effective_detuning_hz;
    const double tol = std::max(3.0 * psd3.rbw_hz, 0.06 * std::abs(dse));
    const auto match = [&](const std::vector<Peak>& peaks, double f) {
        std::optional<Peak> best;
        for (const Peak& p : peaks)
            if (std::abs(p.freq_hz - f) < tol && (!best || p.height > best->height))
                best = p;
        return best;
    };
    census.secondary3 = match(census.peaks3, census.osc3_hz - dse);
    census.primary4 = match(census.peaks4, -f_sig);
    census.secondary4 = match(census.peaks4, -census.osc3_hz + dse);

    // Count detections not accounted for by the six expected lines.
    const auto accounted = [&](const Peak& p, int mode) {
        const double f = p.freq_hz;
        if (mode == 3) {
            return std::abs(f - f_sig) < tol_sig || std::abs(f - census.osc3_hz) < tol ||
                   std::abs(f - (census.osc3_hz - dse)) < tol;
        }
        return std::abs(f + f_sig) < tol_sig || std::abs(f + census.osc3_hz) < tol ||
               std::abs(f - (-census.osc3_hz + dse)) < tol;
    };
    for (const Peak& p : census.peaks3)
        if (!accounted(p, 3)) ++census.extra_peak_count;
    for (const Peak& p : census.peaks4)
        if (!accounted(p, 4)) ++census.extra_peak_count;
    return census;
}

// ---------------------------------------------------------------------------
// Kerr round trip
// ---------------------------------------------------------------------------

KerrSlopes kerr_slopes_closed_form(const TwoModeSystem& sys, double epsilon) {
    const double g3 = sys.mode3.gamma_total, g4 = sys.mode4.gamma_total;
    const double a3 = sys.mode3.kerr, a4 = sys.mode4.kerr, ax = sys.cross_kerr;
    const double K = a3 * g4 + a4 * g3 + 2.0 * ax * (g3 + g4);
    KerrSlopes s;
    s.intensity_slope = -4.0 * sys.mode3.gamma_ext * g4 / K;
    s.frequency_slope =
        ((g3 - g4) - 2.0 * (a4 * g3 * g3 - a3 * g4 * g4) / K) / (g3 + g4);
    (void)epsilon;  // the slopes are detuning-independent above threshold
    return s;
}

KerrFitResult kerr_extraction_from_slopes(const TwoModeSystem& sys_truth,
                                          double epsilon, const KerrSlopes& slopes) {
    const double g3 = sys_truth.mode3.gamma_total, g4 = sys_truth.mode4.gamma_total;
    const double g30 = sys_truth.mode3.gamma_ext;
    if (!(slopes.intensity_slope < 0.0))
        throw std::runtime_error("kerr inversion: intensity slope must be negative");
    const double K = -4.0 * g30 * g4 / slopes.intensity_slope;
    const double M = ((g3 - g4) - slopes.frequency_slope * (g3 + g4)) * K / 2.0;

    // Solve x*g4 + y*g3 + 2 sqrt(x y) (g3+g4) = K with y = (M + x g4^2)/g3^2;
    // the left side is monotone in x, bisection is safe.
    const auto y_of = [&](double x) { return (M + x * g4 * g4) / (g3 * g3); };
    const auto f = [&](double x) {
        const double y = y_of(x);
        return x * g4 + y * g3 + 2.0 * std::sqrt(x * y) * (g3 + g4) - K;
    };
    double lo = std::max(0.0, -M / (g4 * g4)) + 1e-18 * K / g4;
    if (!(y_of(lo) >= 0.0) || f(lo) > 0.0)
        throw std::runtime_error(
            "kerr inversion: no positive solution (ill-conditioned slopes)");
    double hi = std::max(lo * 2.0, K / g4);
    int guard = 0;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 200)
            throw std::runtime_error("kerr inversion: bracket expansion failed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    KerrFitResult r;
    r.alpha3 = 0.5 * (lo + hi);
    r.alpha4 = y_of(r.alpha3);
    r.slopes = slopes;
    r.relative_error3 = r.alpha3 / sys_truth.mode3.kerr - 1.0;
    r.relative_error4 = r.alpha4 / sys_truth.mode4.kerr - 1.0;
    (void)epsilon;
    return r;
}

KerrFitResult kerr_extraction_roundtrip(const ExperimentContext& ctx,
                                        const KerrRoundTripOptions& opt) {
    const double g = ctx.system.gamma_eff;
    const double eps = opt.epsilon_over_gamma * g;
    if (!opt.simulate) {
        return kerr_extraction_from_slopes(ctx.system, eps,
                                           kerr_slopes_closed_form(ctx.system, eps));
    }

    const std::size_t n = opt.delta_over_gamma.size();
    std::vector<double> deltas(n), c3(n), d0(n);
    for (std::size_t i = 0; i < n; ++i) deltas[i] = opt.delta_over_gamma[i] * g;

    parallel_for(n, ctx.resolved_workers(), [&](std::size_t i) {
        const PumpDrive pump{eps, deltas[i]};
        const double fs = 4e6;
        IntegratorConfig cfg = make_recorder(ctx.system, pump, opt.duration, fs);
        NoiseConfig noise = ctx.noise;
        noise.rng_seed = 101 ^ i;
        const Trajectory traj = integrate(ctx.system, pump, {}, noise, cfg);
        c3[i] = 2.0 * ctx.system.mode3.gamma_ext * tail_mean_photons(traj, 3, 60.0 / g);
        const SpectralDensity psd =
            photon_spectral_density(demodulate(traj, 3, 0.0), opt.segment);
        d0[i] = two_pi * dominant_peak_centroid(psd, 150e3);
    });

    KerrSlopes slopes;
    slopes.intensity_slope = linear_fit(deltas, c3).slope;
    slopes.frequency_slope = linear_fit(deltas, d0).slope;
    KerrFitResult r = kerr_extraction_from_slopes(ctx.system, eps, slopes);
    r.from_simulation = true;
    return r;
}

}  // namespace njpo
