#include "njpo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace njpo {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

enum class Kind { Frequency, Time, Plain, Integer, Boolean, Text };

struct FieldSpec {
    const char* section;
    const char* key;
    Kind kind;
    bool required;
};

// Field table: canonical order doubles as the render order.
const FieldSpec kFields[] = {
    {"system", "mode3_frequency", Kind::Frequency, true},
    {"system", "mode3_gamma_total", Kind::Frequency, true},
    {"system", "mode3_gamma_ext", Kind::Frequency, true},
    {"system", "mode3_kerr", Kind::Frequency, true},
    {"system", "mode4_frequency", Kind::Frequency, true},
    {"system", "mode4_gamma_total", Kind::Frequency, true},
    {"system", "mode4_gamma_ext", Kind::Frequency, true},
    {"system", "mode4_kerr", Kind::Frequency, true},
    {"pump", "epsilon", Kind::Frequency, true},
    {"pump", "delta", Kind::Frequency, true},
    {"tone", "mode", Kind::Integer, false},
    {"tone", "amplitude", Kind::Plain, false},
    {"tone", "photon_number", Kind::Plain, false},
    {"tone", "detuning", Kind::Frequency, false},
    {"tone", "phase", Kind::Plain, false},
    {"noise", "vacuum", Kind::Boolean, false},
    {"noise", "vacuum_scale", Kind::Plain, false},
    {"noise", "flicker_amplitude", Kind::Plain, false},
    {"integrator", "dt", Kind::Time, false},
    {"integrator", "duration", Kind::Time, false},
    {"integrator", "record_stride", Kind::Integer, false},
    {"integrator", "seed_amplitude", Kind::Plain, false},
    {"run", "seed", Kind::Integer, false},
    {"run", "workers", Kind::Integer, false},
    {"run", "output", Kind::Text, false},
    {"sweep", "axis", Kind::Text, false},
    {"sweep", "min", Kind::Plain, false},
    {"sweep", "max", Kind::Plain, false},
    {"sweep", "points", Kind::Integer, false},
    {"sweep", "scale", Kind::Text, false},
    {"sweep", "axis2", Kind::Text, false},
    {"sweep", "min2", Kind::Plain, false},
    {"sweep", "max2", Kind::Plain, false},
    {"sweep", "points2", Kind::Integer, false},
    {"sweep", "scale2", Kind::Text, false},
    {"sweep", "trajectories", Kind::Integer, false},
};

const FieldSpec* find_field(const std::string& section, const std::string& key) {
    for (const FieldSpec& f : kFields)
        if (section == f.section && key == f.key) return &f;
    return nullptr;
}

double parse_number_with_unit(const std::string& value, Kind kind, int line) {
    std::istringstream iss(value);
    double num = 0.0;
    if (!(iss >> num)) throw config_error("not a number: '" + value + "'", line);
    std::string unit;
    iss >> unit;
    std::string rest;
    if (iss >> rest) throw config_error("trailing text after value: '" + value + "'", line);

    if (kind == Kind::Plain) {
        if (!unit.empty()) throw config_error("unexpected unit '" + unit + "'", line);
        return num;
    }
    if (kind == Kind::Frequency) {
        if (unit.empty() || unit == "Hz") return num;
        if (unit == "kHz") return num * 1e3;
        if (unit == "MHz") return num * 1e6;
        if (unit == "GHz") return num * 1e9;
        throw config_error("bad frequency unit '" + unit + "' (Hz/kHz/MHz/GHz)", line);
    }
    // Kind::Time
    if (unit.empty() || unit == "s") return num;
    if (unit == "ms") return num * 1e-3;
    if (unit == "us") return num * 1e-6;
    if (unit == "ns") return num * 1e-9;
    throw config_error("bad time unit '" + unit + "' (s/ms/us/ns)", line);
}

bool parse_bool(const std::string& v, int line) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw config_error("not a boolean: '" + v + "'", line);
}

std::int64_t parse_int(const std::string& v, int line) {
    std::int64_t out = 0;
    const auto* begin = v.data();
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw config_error("not an integer: '" + v + "'", line);
    return out;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, std::pair<std::string, int>> seen;  // "sec.key" -> value,line

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error("unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "pump" && section != "tone" &&
                section != "noise" && section != "integrator" && section != "run" &&
                section != "sweep")
                throw config_error("unknown section [" + section + "]", line_no);
            if (section == "tone" && !cfg.tone) cfg.tone = ToneConfig{};
            if (section == "sweep" && !cfg.sweep) cfg.sweep = SweepConfig{};
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw config_error("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw config_error("key before any [section]", line_no);
        const FieldSpec* spec = find_field(section, key);
        if (!spec) throw config_error("unknown key '" + key + "' in [" + section + "]", line_no);
        const std::string id = section + "." + key;
        if (seen.count(id)) throw config_error("duplicate key '" + key + "'", line_no);
        seen[id] = {value, line_no};
    }

    for (const FieldSpec& f : kFields) {
        if (!f.required) continue;
        if (!seen.count(std::string(f.section) + "." + f.key))
            throw config_error(std::string("missing field: [") + f.section + "] " + f.key);
    }

    const auto get = [&](const char* sec, const char* key) -> const std::pair<std::string, int>* {
        const auto it = seen.find(std::string(sec) + "." + key);
        return it == seen.end() ? nullptr : &it->second;
    };
    const auto freq = [&](const char* sec, const char* key, double& target) {
        if (const auto* v = get(sec, key))
            target = parse_number_with_unit(v->first, Kind::Frequency, v->second);
    };
    const auto plain = [&](const char* sec, const char* key, double& target) {
        if (const auto* v = get(sec, key))
            target = parse_number_with_unit(v->first, Kind::Plain, v->second);
    };

    freq("system", "mode3_frequency", cfg.mode3_frequency_hz);
    freq("system", "mode3_gamma_total", cfg.mode3_gamma_total_hz);
    freq("system", "mode3_gamma_ext", cfg.mode3_gamma_ext_hz);
    freq("system", "mode3_kerr", cfg.mode3_kerr_hz);
    freq("system", "mode4_frequency", cfg.mode4_frequency_hz);
    freq("system", "mode4_gamma_total", cfg.mode4_gamma_total_hz);
    freq("system", "mode4_gamma_ext", cfg.mode4_gamma_ext_hz);
    freq("system", "mode4_kerr", cfg.mode4_kerr_hz);
    freq("pump", "epsilon", cfg.epsilon_hz);
    freq("pump", "delta", cfg.delta_hz);

    if (cfg.tone) {
        if (const auto* v = get("tone", "mode"))
            cfg.tone->mode = static_cast<int>(parse_int(v->first, v->second));
        if (const auto* v = get("tone", "amplitude"))
            cfg.tone->amplitude_sqrt_flux =
                parse_number_with_unit(v->first, Kind::Plain, v->second);
        if (const auto* v = get("tone", "photon_number"))
            cfg.tone->photon_number =
                parse_number_with_unit(v->first, Kind::Plain, v->second);
        if (cfg.tone->amplitude_sqrt_flux >= 0.0 && cfg.tone->photon_number >= 0.0)
            throw config_error("[tone] amplitude and photon_number are exclusive");
        if (cfg.tone->amplitude_sqrt_flux < 0.0 && cfg.tone->photon_number < 0.0)
            throw config_error("missing field: [tone] amplitude or photon_number");
        freq("tone", "detuning", cfg.tone->detuning_hz);
        plain("tone", "phase", cfg.tone->phase_rad);
    }
    if (const auto* v = get("noise", "vacuum")) cfg.vacuum_on = parse_bool(v->first, v->second);
    plain("noise", "vacuum_scale", cfg.vacuum_scale);
    plain("noise", "flicker_amplitude", cfg.flicker_amplitude);
    if (const auto* v = get("integrator", "dt"))
        cfg.dt_s = parse_number_with_unit(v->first, Kind::Time, v->second);
    if (const auto* v = get("integrator", "duration"))
        cfg.duration_s = parse_number_with_unit(v->first, Kind::Time, v->second);
    if (const auto* v = get("integrator", "record_stride"))
        cfg.record_stride = static_cast<int>(parse_int(v->first, v->second));
    plain("integrator", "seed_amplitude", cfg.seed_amplitude);
    if (const auto* v = get("run", "seed"))
        cfg.seed = static_cast<std::uint64_t>(parse_int(v->first, v->second));
    if (const auto* v = get("run", "workers"))
        cfg.workers = static_cast<int>(parse_int(v->first, v->second));
    if (const auto* v = get("run", "output")) cfg.output_dir = v->first;

    if (cfg.sweep) {
        if (const auto* v = get("sweep", "axis")) cfg.sweep->axis = v->first;
        plain("sweep", "min", cfg.sweep->min);
        plain("sweep", "max", cfg.sweep->max);
        if (const auto* v = get("sweep", "points"))
            cfg.sweep->points = static_cast<int>(parse_int(v->first, v->second));
        if (const auto* v = get("sweep", "scale"))
            cfg.sweep->log_scale = (v->first == "log");
        if (const auto* v = get("sweep", "axis2")) cfg.sweep->axis2 = v->first;
        plain("sweep", "min2", cfg.sweep->min2);
        plain("sweep", "max2", cfg.sweep->max2);
        if (const auto* v = get("sweep", "points2"))
            cfg.sweep->points2 = static_cast<int>(parse_int(v->first, v->second));
        if (const auto* v = get("sweep", "scale2"))
            cfg.sweep->log_scale2 = (v->first == "log");
        if (const auto* v = get("sweep", "trajectories"))
            cfg.sweep->trajectories = static_cast<int>(parse_int(v->first, v->second));
    }

    // Validate the physical content now so errors surface as config errors.
    try {
        cfg.system();
        cfg.pump();
        cfg.injection_tone();
        cfg.noise_config().validate();
        cfg.integrator_config().validate();
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(e.what());
    }
    return cfg;
}

TwoModeSystem RunConfig::system() const {
    ModeParams m3{from_hz(mode3_frequency_hz), from_hz(mode3_gamma_total_hz),
                  from_hz(mode3_gamma_ext_hz), from_hz(mode3_kerr_hz)};
    ModeParams m4{from_hz(mode4_frequency_hz), from_hz(mode4_gamma_total_hz),
                  from_hz(mode4_gamma_ext_hz), from_hz(mode4_kerr_hz)};
    return TwoModeSystem::make(m3, m4);
}

PumpDrive RunConfig::pump() const {
    PumpDrive p{from_hz(epsilon_hz), from_hz(delta_hz)};
    p.validate();
    return p;
}

std::optional<InjectionTone> RunConfig::injection_tone() const {
    if (!tone) return std::nullopt;
    InjectionTone t;
    t.mode_index = tone->mode;
    t.amplitude = tone->amplitude_sqrt_flux >= 0.0
                      ? tone->amplitude_sqrt_flux
                      : tone_amplitude_for_photon_number(system(), tone->mode,
                                                         tone->photon_number);
    t.detuning = from_hz(tone->detuning_hz);
    t.phase = tone->phase_rad;
    t.validate();
    return t;
}

NoiseConfig RunConfig::noise_config() const {
    NoiseConfig n;
    n.vacuum_noise_on = vacuum_on;
    n.vacuum_scale = vacuum_scale;
    n.flicker_amplitude = flicker_amplitude;
    n.rng_seed = seed;
    return n;
}

IntegratorConfig RunConfig::integrator_config() const {
    IntegratorConfig c;
    c.dt = dt_s;
    c.duration = duration_s;
    c.record_stride = record_stride;
    c.seed_amplitude = seed_amplitude;
    return c;
}

ExperimentContext RunConfig::experiment_context() const {
    ExperimentContext ctx;
    ctx.system = system();
    ctx.operating_point = pump();
    ctx.noise = noise_config();
    ctx.workers = workers;
    return ctx;
}

std::string render_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[system]\n";
    out << "mode3_frequency = " << format_g17(cfg.mode3_frequency_hz) << " Hz\n";
    out << "mode3_gamma_total = " << format_g17(cfg.mode3_gamma_total_hz) << " Hz\n";
    out << "mode3_gamma_ext = " << format_g17(cfg.mode3_gamma_ext_hz) << " Hz\n";
    out << "mode3_kerr = " << format_g17(cfg.mode3_kerr_hz) << " Hz\n";
    out << "mode4_frequency = " << format_g17(cfg.mode4_frequency_hz) << " Hz\n";
    out << "mode4_gamma_total = " << format_g17(cfg.mode4_gamma_total_hz) << " Hz\n";
    out << "mode4_gamma_ext = " << format_g17(cfg.mode4_gamma_ext_hz) << " Hz\n";
    out << "mode4_kerr = " << format_g17(cfg.mode4_kerr_hz) << " Hz\n";
    out << "\n[pump]\n";
    out << "epsilon = " << format_g17(cfg.epsilon_hz) << " Hz\n";
    out << "delta = " << format_g17(cfg.delta_hz) << " Hz\n";
    if (cfg.tone) {
        out << "\n[tone]\n";
        out << "mode = " << cfg.tone->mode << "\n";
        if (cfg.tone->amplitude_sqrt_flux >= 0.0)
            out << "amplitude = " << format_g17(cfg.tone->amplitude_sqrt_flux) << "\n";
        else
            out << "photon_number = " << format_g17(cfg.tone->photon_number) << "\n";
        out << "detuning = " << format_g17(cfg.tone->detuning_hz) << " Hz\n";
        out << "phase = " << format_g17(cfg.tone->phase_rad) << "\n";
    }
    out << "\n[noise]\n";
    out << "vacuum = " << (cfg.vacuum_on ? "on" : "off") << "\n";
    out << "vacuum_scale = " << format_g17(cfg.vacuum_scale) << "\n";
    out << "flicker_amplitude = " << format_g17(cfg.flicker_amplitude) << "\n";
    out << "\n[integrator]\n";
    out << "dt = " << format_g17(cfg.dt_s) << " s\n";
    out << "duration = " << format_g17(cfg.duration_s) << " s\n";
    out << "record_stride = " << cfg.record_stride << "\n";
    out << "seed_amplitude = " << format_g17(cfg.seed_amplitude) << "\n";
    out << "\n[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "output = " << cfg.output_dir << "\n";
    if (cfg.sweep) {
        out << "\n[sweep]\n";
        out << "axis = " << cfg.sweep->axis << "\n";
        out << "min = " << format_g17(cfg.sweep->min) << "\n";
        out << "max = " << format_g17(cfg.sweep->max) << "\n";
        out << "points = " << cfg.sweep->points << "\n";
        out << "scale = " << (cfg.sweep->log_scale ? "log" : "linear") << "\n";
        if (!cfg.sweep->axis2.empty()) {
            out << "axis2 = " << cfg.sweep->axis2 << "\n";
            out << "min2 = " << format_g17(cfg.sweep->min2) << "\n";
            out << "max2 = " << format_g17(cfg.sweep->max2) << "\n";
            out << "points2 = " << cfg.sweep->points2 << "\n";
            out << "scale2 = " << (cfg.sweep->log_scale2 ? "log" : "linear") << "\n";
        }
        out << "trajectories = " << cfg.sweep->trajectories << "\n";
    }
    return out.str();
}

const std::string& default_config_text() {
    static const std::string text =
        "# Measured two-mode device and default run settings.\n"
        "[system]\n"
        "mode3_frequency = 4.345 GHz\n"
        "mode3_gamma_total = 0.56 MHz\n"
        "mode3_gamma_ext = 0.52 MHz\n"
        "mode3_kerr = 71 kHz\n"
        "mode4_frequency = 6.150 GHz\n"
        "mode4_gamma_total = 0.78 MHz\n"
        "mode4_gamma_ext = 0.70 MHz\n"
        "mode4_kerr = 178 kHz\n"
        "\n"
        "[pump]\n"
        "# 3x the threshold amplitude Gamma = sqrt(Gamma3*Gamma4)\n"
        "epsilon = 1.9827254 MHz\n"
        "delta = 0 Hz\n"
        "\n"
        "[noise]\n"
        "vacuum = on\n"
        "vacuum_scale = 1\n"
        "flicker_amplitude = 0\n"
        "\n"
        "[integrator]\n"
        "dt = 0 s\n"
        "duration = 20 ms\n"
        "record_stride = 50\n"
        "seed_amplitude = 1e-3\n"
        "\n"
        "[run]\n"
        "seed = 1\n"
        "workers = 0\n"
        "output = njpo-out\n";
    return text;
}

}  // namespace njpo
