// Command-line driver: closed-form tables, single simulations and the scan
// experiments, all writing CSV artifacts plus a reproducibility manifest.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "njpo/io.hpp"

namespace fs = std::filesystem;
using namespace njpo;

namespace {

enum ExitCode : int {
    kOk = 0,
    kOther = 1,
    kConfigError = 2,
    kIoError = 3,
    kIntegratorError = 4,
};

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = -1;
    bool no_noise = false;
};

RunConfig load_config(const CliOptions& cli) {
    std::string text;
    if (cli.config_path.empty()) {
        text = default_config_text();
    } else {
        std::ifstream in(cli.config_path, std::ios::binary);
        if (!in) throw std::ios_base::failure("cannot read config file " + cli.config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    RunConfig cfg = parse_config(text);
    if (cli.seed_given) cfg.seed = cli.seed;
    if (!cli.out_dir.empty()) cfg.output_dir = cli.out_dir;
    if (cli.workers >= 0) cfg.workers = cli.workers;
    if (cli.no_noise) cfg.vacuum_on = false;
    return cfg;
}

SweepSpec sweep_from_config(const RunConfig& cfg, const TwoModeSystem& sys) {
    if (cfg.sweep && cfg.sweep->axis == "epsilon" && cfg.sweep->axis2 == "delta") {
        SweepSpec s;
        s.axes = {SweepAxis{"epsilon", from_hz(cfg.sweep->min), from_hz(cfg.sweep->max),
                            cfg.sweep->points, cfg.sweep->log_scale},
                  SweepAxis{"delta", from_hz(cfg.sweep->min2), from_hz(cfg.sweep->max2),
                            cfg.sweep->points2, cfg.sweep->log_scale2}};
        s.master_seed = cfg.seed;
        s.trajectories_per_point = cfg.sweep->trajectories;
        return s;
    }
    SweepSpec s = default_stability_sweep(sys);
    s.master_seed = cfg.seed;
    return s;
}

int cmd_steady_state(const RunConfig& cfg) {
    const TwoModeSystem sys = cfg.system();
    const SweepSpec sweep = sweep_from_config(cfg, sys);
    ExperimentResult res;
    res.name = "steady-state";
    res.sweep = sweep;
    res.coord_names = {"epsilon_rad_s", "delta_rad_s"};
    res.columns = {"region", "delta_th_rad_s", "n3_photons", "n4_photons",
                   "c3_flux",  "c4_flux",       "delta0_rad_s", "theta_rad"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < sweep.point_count(); ++i) {
        PointRecord rec;
        rec.coords = sweep.coords(i);
        const PumpDrive pump{rec.coords[0], rec.coords[1]};
        const StabilityRegion region = classify_region(sys, pump);
        double dth = nan, n3 = 0.0, n4 = 0.0, c3 = 0.0, c4 = 0.0, d0 = nan, th = nan;
        if (pump.epsilon >= sys.gamma_eff) {
            dth = threshold_detuning(sys, pump.epsilon);
            if (pump.epsilon > sys.gamma_eff) th = phase_sum(sys, pump.epsilon);
        }
        if (region != StabilityRegion::GroundOnly) {
            const SteadyStatePhotons ss = steady_state_photons(sys, pump);
            const OutputFlux f = output_flux(sys, ss);
            n3 = ss.n3; n4 = ss.n4; c3 = f.c3; c4 = f.c4;
            d0 = oscillation_frequency_shift(sys, pump);
        }
        rec.values = {static_cast<double>(region), dth, n3, n4, c3, c4, d0, th};
        res.points.push_back(std::move(rec));
    }
    const fs::path dir(cfg.output_dir);
    write_experiment_csv(res, dir / "steady_state.csv");
    write_manifest(cfg, "steady-state", {"steady_state.csv"}, dir / "manifest.json");
    std::cout << "steady-state: " << res.points.size() << " points -> "
              << (dir / "steady_state.csv").string() << "\n";
    return kOk;
}

int cmd_simulate(const RunConfig& cfg) {
    const TwoModeSystem sys = cfg.system();
    const PumpDrive pump = cfg.pump();
    std::vector<DriveTone> tones;
    if (const auto tone = cfg.injection_tone())
        tones.push_back(drive_tone_for(sys, pump, *tone));
    const Trajectory traj =
        integrate(sys, pump, tones, cfg.noise_config(), cfg.integrator_config());

    const fs::path dir(cfg.output_dir);
    write_trajectory_csv(traj, dir / "trajectory.csv");
    std::vector<std::string> artifacts{"trajectory.csv"};

    const std::uint64_t hash = fnv1a64(provenance_string(traj.provenance));
    double d0 = 0.0;
    try {
        d0 = oscillation_frequency_shift(sys, pump);
    } catch (const ground_state_error&) {
    }
    const int nseg = 4096;
    for (int mode : {3, 4}) {
        const double det = (mode == 3) ? d0 : -d0;
        const Quadratures q = demodulate(traj, mode, det);
        if (q.size() >= 2 * nseg) {
            const SpectralDensity psd = photon_spectral_density(q, nseg);
            const std::string name = "psd_mode" + std::to_string(mode) + ".csv";
            write_psd_csv(psd, "mode " + std::to_string(mode), hash, dir / name);
            artifacts.push_back(name);
        }
        std::vector<double> iq_i(q.size()), iq_q(q.size());
        double radius = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) {
            iq_i[k] = q.iq[k].real();
            iq_q[k] = q.iq[k].imag();
            radius = std::max(radius, std::abs(q.iq[k]));
        }
        const double r = radius > 0.0 ? 1.1 * radius : 1.0;
        const Histogram2D h = histogram2d(iq_i, iq_q, 64, 64, -r, r, -r, r);
        const std::string name = "hist_mode" + std::to_string(mode) + ".csv";
        write_histogram_csv(h, "I/Q phase space, mode " + std::to_string(mode), hash,
                            dir / name);
        artifacts.push_back(name);
    }
    write_manifest(cfg, "simulate", artifacts, dir / "manifest.json");
    std::cout << "simulate: " << traj.size() << " samples -> " << dir.string() << "\n";
    return kOk;
}

int cmd_map(const RunConfig& cfg) {
    ExperimentContext ctx = cfg.experiment_context();
    const SweepSpec sweep = sweep_from_config(cfg, ctx.system);
    const ExperimentResult res = stability_map(ctx, sweep);
    const fs::path dir(cfg.output_dir);
    write_experiment_csv(res, dir / "stability_map.csv");
    write_manifest(cfg, "map", {"stability_map.csv"}, dir / "manifest.json");
    std::size_t failed = 0;
    for (const PointRecord& p : res.points)
        if (!p.ok()) ++failed;
    std::cout << "map: " << res.points.size() << " points (" << failed
              << " failed) -> " << (dir / "stability_map.csv").string() << "\n";
    return kOk;
}

int cmd_ramp(const RunConfig& cfg) {
    ExperimentContext ctx = cfg.experiment_context();
    const double g = ctx.system.gamma_eff;
    const double delta = cfg.delta_hz != 0.0 ? from_hz(cfg.delta_hz) : 0.26 * g;
    RampResult res = pump_ramp_spectrogram(
        ctx, SweepAxis{"epsilon", 1.05 * g, 4.0 * g, 13, false}, delta);
    const fs::path dir(cfg.output_dir);
    write_experiment_csv(res.table, dir / "pump_ramp.csv");
    std::vector<std::string> artifacts{"pump_ramp.csv"};
    for (std::size_t i = 0; i < res.psd3.size(); ++i) {
        for (int mode : {3, 4}) {
            const SpectralDensity& psd = (mode == 3) ? res.psd3[i] : res.psd4[i];
            if (psd.freq_hz.empty()) continue;
            std::ostringstream name;
            name << "ramp_psd_mode" << mode << "_" << i << ".csv";
            write_psd_csv(psd, "pump ramp point " + std::to_string(i), cfg.seed,
                          dir / name.str());
            artifacts.push_back(name.str());
        }
    }
    write_manifest(cfg, "ramp", artifacts, dir / "manifest.json");
    std::cout << "ramp: " << res.table.points.size() << " pump points -> "
              << dir.string() << "\n";
    return kOk;
}

int cmd_lock(const RunConfig& cfg) {
    ExperimentContext ctx = cfg.experiment_context();
    LockScanOptions opt;
    if (cfg.sweep && cfg.sweep->axis == "n_photons") {
        const SweepAxis axis{"n_photons", cfg.sweep->min, cfg.sweep->max,
                             cfg.sweep->points, cfg.sweep->log_scale};
        opt.photon_numbers = axis.values();
    }
    const LockScanResult res = injection_locking_scan(ctx, opt);
    const fs::path dir(cfg.output_dir);
    write_experiment_csv(res.table, dir / "lock_scan.csv");

    // point-wise phase histograms of both modes
    std::vector<std::string> artifacts{"lock_scan.csv"};
    {
        std::ofstream out(dir / "lock_phase_hist.csv", std::ios::binary);
        out << "# njpo locking phase histograms, 36 bins over (-pi, pi]\n";
        out << "n_photons,mode,bin,count\n";
        for (std::size_t i = 0; i < res.stats3.size(); ++i) {
            for (int mode : {3, 4}) {
                const PhaseStats& st = (mode == 3 ? res.stats3[i] : res.stats4[i]);
                for (std::size_t b = 0; b < st.histogram.size(); ++b)
                    out << opt.photon_numbers[i] << "," << mode << "," << b << ","
                        << st.histogram[b] << "\n";
            }
        }
        artifacts.push_back("lock_phase_hist.csv");
    }
    write_manifest(cfg, "lock", artifacts, dir / "manifest.json");
    std::cout << "lock: " << res.table.points.size() << " photon-number points -> "
              << (dir / "lock_scan.csv").string() << "\n";
    return kOk;
}

int cmd_sync(const RunConfig& cfg) {
    ExperimentContext ctx = cfg.experiment_context();
    SyncScanOptions opt;
    if (cfg.sweep && cfg.sweep->axis == "n_photons") {
        const SweepAxis axis{"n_photons", cfg.sweep->min, cfg.sweep->max,
                             cfg.sweep->points, cfg.sweep->log_scale};
        opt.photon_numbers = axis.values();
    }
    const SyncScanResult res = synchronization_scan(ctx, opt);
    const fs::path dir(cfg.output_dir);
    write_experiment_csv(res.table, dir / "sync_scan.csv");

    ExperimentResult gaps;
    gaps.name = "synchronization-gaps";
    gaps.sweep = res.table.sweep;
    gaps.coord_names = {"n_photons"};
    gaps.columns = {"gap_rad_s", "gap_error_rad_s"};
    for (std::size_t i = 0; i < res.gap_n.size(); ++i) {
        PointRecord rec;
        rec.coords = {res.gap_n[i]};
        rec.values = {res.gap_width[i], res.gap_step[i]};
        gaps.points.push_back(std::move(rec));
    }
    write_experiment_csv(gaps, dir / "sync_gaps.csv");

    // point-wise peak tables (both modes, long format)
    {
        std::ofstream out(dir / "sync_peaks.csv", std::ios::binary);
        out << "# njpo synchronization peak tables\n";
        out << "n_photons,delta_s_rad_s,mode,freq_hz,height,width_hz\n";
        char buf[64];
        const auto g17 = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        for (const SyncPointDetail& d : res.details) {
            for (int mode : {3, 4}) {
                for (const Peak& p : (mode == 3 ? d.peaks3 : d.peaks4))
                    out << g17(d.n_photons) << "," << g17(d.signal_detuning) << ","
                        << mode << "," << g17(p.freq_hz) << "," << g17(p.height)
                        << "," << g17(p.width_hz) << "\n";
            }
        }
    }
    write_manifest(cfg, "sync", {"sync_scan.csv", "sync_gaps.csv", "sync_peaks.csv"},
                   dir / "manifest.json");
    std::cout << "sync: " << res.table.points.size() << " points, gap fit c="
              << res.sqrt_fit.coefficient << " rad/s, R^2=" << res.sqrt_fit.r_squared
              << " -> " << dir.string() << "\n";
    return kOk;
}

int cmd_kerr_fit(const RunConfig& cfg) {
    ExperimentContext ctx = cfg.experiment_context();
    KerrRoundTripOptions closed;
    closed.simulate = false;
    const KerrFitResult exact = kerr_extraction_roundtrip(ctx, closed);
    const KerrFitResult sim = kerr_extraction_roundtrip(ctx);

    ExperimentResult res;
    res.name = "kerr-fit";
    res.coord_names = {"from_simulation"};
    res.columns = {"alpha3_rad_s", "alpha4_rad_s", "rel_err3", "rel_err4",
                   "intensity_slope", "frequency_slope"};
    for (const KerrFitResult* r : {&exact, &sim}) {
        PointRecord rec;
        rec.coords = {r->from_simulation ? 1.0 : 0.0};
        rec.values = {r->alpha3, r->alpha4, r->relative_error3, r->relative_error4,
                      r->slopes.intensity_slope, r->slopes.frequency_slope};
        res.points.push_back(std::move(rec));
    }
    const fs::path dir(cfg.output_dir);
    write_experiment_csv(res, dir / "kerr_fit.csv");
    write_manifest(cfg, "kerr-fit", {"kerr_fit.csv"}, dir / "manifest.json");
    std::cout << "kerr-fit: closed-form rel err (" << exact.relative_error3 << ", "
              << exact.relative_error4 << "), simulated rel err ("
              << sim.relative_error3 << ", " << sim.relative_error4 << ")\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-mode parametric-oscillator simulator and analysis toolkit"};
    app.require_subcommand(1);

    CliOptions cli;
    app.add_option("--config", cli.config_path, "configuration file path");
    app.add_option("--out", cli.out_dir, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", cli.seed, "master seed (overrides config)");
    app.add_option("--workers", cli.workers, "worker threads (0 = auto)");
    app.add_flag("--no-noise", cli.no_noise, "disable vacuum noise");

    const char* names[] = {"steady-state", "simulate", "map", "ramp",
                           "lock",         "sync",     "kerr-fit"};
    const char* descs[] = {
        "closed-form operating-point tables",
        "one trajectory plus spectra and histograms",
        "stability map over (epsilon, delta)",
        "pump-ramp emission spectrogram",
        "injection-locking scan over input photon number",
        "synchronization scan over signal detuning",
        "Kerr-coefficient extraction round trip"};
    for (std::size_t i = 0; i < std::size(names); ++i)
        app.add_subcommand(names[i], descs[i])->fallthrough();

    CLI11_PARSE(app, argc, argv);
    cli.seed_given = seed_opt->count() > 0;

    try {
        const RunConfig cfg = load_config(cli);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "steady-state") return cmd_steady_state(cfg);
        if (sub == "simulate") return cmd_simulate(cfg);
        if (sub == "map") return cmd_map(cfg);
        if (sub == "ramp") return cmd_ramp(cfg);
        if (sub == "lock") return cmd_lock(cfg);
        if (sub == "sync") return cmd_sync(cfg);
        if (sub == "kerr-fit") return cmd_kerr_fit(cfg);
        std::cerr << "unknown subcommand\n";
        return kOther;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const integrator_error& e) {
        std::cerr << "integrator error: " << e.what() << "\n";
        return kIntegratorError;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}
