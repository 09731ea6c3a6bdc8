#include "njpo/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace njpo {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);  // binary: stable newlines
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string provenance_string(const Provenance& prov) {
    std::ostringstream s;
    const TwoModeSystem& sys = prov.system;
    s << "system:" << g17(sys.mode3.omega) << "," << g17(sys.mode3.gamma_total) << ","
      << g17(sys.mode3.gamma_ext) << "," << g17(sys.mode3.kerr) << ","
      << g17(sys.mode4.omega) << "," << g17(sys.mode4.gamma_total) << ","
      << g17(sys.mode4.gamma_ext) << "," << g17(sys.mode4.kerr)
      << ";pump:" << g17(prov.pump.epsilon) << "," << g17(prov.pump.delta);
    for (const DriveTone& t : prov.tones)
        s << ";tone:" << t.mode_index << "," << g17(t.amplitude) << ","
          << g17(t.frame_rate) << "," << g17(t.phase);
    s << ";noise:" << (prov.noise.vacuum_noise_on ? 1 : 0) << ","
      << g17(prov.noise.vacuum_scale) << "," << g17(prov.noise.flicker_amplitude)
      << ",seed=" << prov.noise.rng_seed;
    s << ";integrator:" << g17(prov.integrator.dt) << ","
      << g17(prov.integrator.duration) << "," << prov.integrator.record_stride << ","
      << g17(prov.integrator.seed_amplitude);
    if (prov.integrator.initial_state) {
        const FieldState& f = *prov.integrator.initial_state;
        s << ",init=" << g17(f.a3.real()) << "," << g17(f.a3.imag()) << ","
          << g17(f.a4.real()) << "," << g17(f.a4.imag());
    }
    return s.str();
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    const std::string prov = provenance_string(traj.provenance);
    out << "# njpo trajectory\n";
    out << "# provenance: " << prov << "\n";
    out << "# provenance_hash: " << fnv1a64(prov) << "\n";
    out << "# units: t in s, amplitudes in sqrt(photons)\n";
    out << "t,re_a3,im_a3,re_a4,im_a4\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << g17(traj.time_at(k)) << "," << g17(traj.a3[k].real()) << ","
            << g17(traj.a3[k].imag()) << "," << g17(traj.a4[k].real()) << ","
            << g17(traj.a4[k].imag()) << "\n";
    }
}

void write_psd_csv(const SpectralDensity& psd, const std::string& description,
                   std::uint64_t provenance_hash, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "# njpo photon spectral density: " << description << "\n";
    out << "# axis: emission detuning relative to the demodulation frame\n";
    out << "# rbw_hz: " << g17(psd.rbw_hz)
        << ", segments: " << psd.segments_averaged << "\n";
    out << "# provenance_hash: " << provenance_hash << "\n";
    out << "frequency_hz,psd_photons_per_s_per_hz\n";
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i)
        out << g17(psd.freq_hz[i]) << "," << g17(psd.value[i]) << "\n";
}

void write_histogram_csv(const Histogram2D& hist, const std::string& description,
                         std::uint64_t provenance_hash,
                         const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "# njpo 2d histogram: " << description << "\n";
    out << "# x: [" << g17(hist.xmin) << ", " << g17(hist.xmax) << "] in " << hist.nx
        << " bins; y: [" << g17(hist.ymin) << ", " << g17(hist.ymax) << "] in "
        << hist.ny << " bins\n";
    out << "# overflow: " << hist.overflow << "\n";
    out << "# provenance_hash: " << provenance_hash << "\n";
    out << "ix,iy,count\n";
    for (int iy = 0; iy < hist.ny; ++iy)
        for (int ix = 0; ix < hist.nx; ++ix)
            out << ix << "," << iy << "," << hist.at(ix, iy) << "\n";
}

void write_experiment_csv(const ExperimentResult& result,
                          const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "# njpo experiment: " << result.name << "\n";
    out << "# seed: " << result.sweep.master_seed << "\n";
    for (std::size_t i = 0; i < result.coord_names.size(); ++i)
        out << (i ? "," : "") << result.coord_names[i];
    for (const std::string& c : result.columns) out << "," << c;
    out << ",error\n";
    for (const PointRecord& p : result.points) {
        for (std::size_t i = 0; i < p.coords.size(); ++i)
            out << (i ? "," : "") << g17(p.coords[i]);
        for (double v : p.values) out << "," << g17(v);
        out << "," << (p.error.empty() ? "" : p.error) << "\n";
    }
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand,
                    const std::vector<std::string>& artifacts,
                    const std::filesystem::path& path) {
    nlohmann::json j;
    j["schema"] = "njpo-manifest-v1";
    j["subcommand"] = subcommand;
    j["seed"] = cfg.seed;
    // The output location is where the manifest already sits; keeping it out
    // of the stored config makes reruns byte-comparable across directories.
    RunConfig stored = cfg;
    stored.output_dir = "njpo-out";
    j["config"] = render_config(stored);
    j["artifacts"] = artifacts;
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace njpo
