#include "condmem/config.hpp"

#include <charconv>
#include <fstream>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

namespace condmem {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw InvalidConfig(std::string(key), "expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
    // Accept 3.36e9-style integers as well as plain digits.
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc{} && ptr == text.data() + text.size() && !text.empty()) return value;
    const double d = parse_double(key, text);
    if (!(d >= 0.0) || d > 1.8e19 || d != std::floor(d)) {
        throw InvalidConfig(std::string(key), "expected a non-negative integer, got '" +
                                                  std::string(text) + "'");
    }
    return static_cast<std::uint64_t>(d);
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

template <typename Getter>
Field real_field(std::string key, Getter ref) {
    return Field{key,
                 [ref](const RunConfig& c) { return format_double(ref(c)); },
                 [ref, key](RunConfig& c, std::string_view v) { ref(c) = parse_double(key, v); }};
}

template <typename Getter>
Field uint_field(std::string key, Getter ref) {
    return Field{key,
                 [ref](const RunConfig& c) { return std::to_string(ref(c)); },
                 [ref, key](RunConfig& c, std::string_view v) {
                     using T = std::remove_reference_t<decltype(ref(c))>;
                     const auto value = parse_uint(key, v);
                     if (value > std::numeric_limits<T>::max()) {
                         throw InvalidConfig(key, "value out of range");
                     }
                     ref(c) = static_cast<T>(value);
                 }};
}

void add_ensemble_fields(std::vector<Field>& fields, const std::string& prefix,
                         std::size_t slot) {
    auto e = [slot](auto& c) -> auto& { return c.ensembles[slot]; };
    fields.push_back(real_field(prefix + "p1", [e](auto& c) -> auto& { return e(c).p1; }));
    fields.push_back(real_field(prefix + "pc", [e](auto& c) -> auto& { return e(c).pc; }));
    fields.push_back(real_field(prefix + "qc", [e](auto& c) -> auto& { return e(c).qc; }));
    fields.push_back(real_field(prefix + "q1", [e](auto& c) -> auto& { return e(c).q1; }));
    fields.push_back(real_field(prefix + "w", [e](auto& c) -> auto& { return e(c).w; }));
    fields.push_back(real_field(prefix + "g12", [e](auto& c) -> auto& { return e(c).g12; }));
    fields.push_back(real_field(prefix + "nc", [e](auto& c) -> auto& { return e(c).nc; }));
    fields.push_back(real_field(prefix + "background_rate",
                                [e](auto& c) -> auto& { return e(c).background_rate; }));
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(Field{"mode", [](const RunConfig& c) { return std::string(to_string(c.mode)); },
                          [](RunConfig& c, std::string_view v) {
                              if (v == "conditional") c.mode = RunMode::conditional;
                              else if (v == "baseline") c.mode = RunMode::baseline;
                              else if (v == "wavepacket") c.mode = RunMode::wavepacket;
                              else throw InvalidConfig("mode", "expected conditional|baseline|wavepacket");
                          }});
        f.push_back(uint_field("n_trials", [](auto& c) -> auto& { return c.n_trials; }));
        f.push_back(uint_field("seed", [](auto& c) -> auto& { return c.seed; }));
        f.push_back(uint_field("shards", [](auto& c) -> auto& { return c.shards; }));
        f.push_back(uint_field("threads", [](auto& c) -> auto& { return c.threads; }));
        f.push_back(Field{"wavepacket_source",
                          [](const RunConfig& c) { return std::string(to_string(c.wavepacket_source)); },
                          [](RunConfig& c, std::string_view v) {
                              if (v == "left") c.wavepacket_source = Ensemble::left;
                              else if (v == "right") c.wavepacket_source = Ensemble::right;
                              else throw InvalidConfig("wavepacket_source", "expected left|right");
                          }});
        add_ensemble_fields(f, "ensemble_l.", 0);
        add_ensemble_fields(f, "ensemble_r.", 1);
        f.push_back(uint_field("control.n_max",
                               [](auto& c) -> auto& { return c.control.n_max; }));
        f.push_back(real_field("control.trial_duration_ns",
                               [](auto& c) -> auto& { return c.control.trial_duration_ns; }));
        f.push_back(real_field("interference.xi",
                               [](auto& c) -> auto& { return c.interference.xi; }));
        f.push_back(real_field("interference.envelope_width_ns", [](auto& c) -> auto& {
            return c.interference.envelope_width_ns;
        }));
        f.push_back(real_field("interference.delta_omega_rad_per_ns", [](auto& c) -> auto& {
            return c.interference.delta_omega_rad_per_ns;
        }));
        f.push_back(real_field("interference.splitter_ratio", [](auto& c) -> auto& {
            return c.interference.splitter_ratio;
        }));
        f.push_back(Field{"interference.polarization",
                          [](const RunConfig& c) {
                              return std::string(to_string(c.interference.polarization));
                          },
                          [](RunConfig& c, std::string_view v) {
                              if (v == "parallel") c.interference.polarization = Polarization::parallel;
                              else if (v == "orthogonal")
                                  c.interference.polarization = Polarization::orthogonal;
                              else throw InvalidConfig("interference.polarization",
                                                       "expected parallel|orthogonal");
                          }});
        f.push_back(real_field("interference.pol_misalignment_offset", [](auto& c) -> auto& {
            return c.interference.pol_misalignment_offset;
        }));
        f.push_back(real_field("windows.field1_ns",
                               [](auto& c) -> auto& { return c.windows.field1_window_ns; }));
        f.push_back(real_field("windows.field2_ns",
                               [](auto& c) -> auto& { return c.windows.field2_window_ns; }));
        f.push_back(real_field("windows.conditional_field2_ns", [](auto& c) -> auto& {
            return c.windows.conditional_field2_window_ns;
        }));
        f.push_back(real_field("windows.tau_integration_halfwidth_ns", [](auto& c) -> auto& {
            return c.windows.tau_integration_halfwidth_ns;
        }));
        return f;
    }();
    return table;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
    value = trim(value);
    if (key.starts_with("ensemble.")) {
        const auto field = key.substr(std::string_view("ensemble.").size());
        try {
            apply_setting(config, "ensemble_l." + std::string(field), value);
            apply_setting(config, "ensemble_r." + std::string(field), value);
        } catch (const InvalidConfig& e) {
            // Report the shared key as written.
            const std::string what = e.what();
            throw InvalidConfig(std::string(key), what.substr(std::min(what.size(), e.key().size() + 2)));
        }
        return;
    }
    if (key == "interference.delta_f_mhz") {
        const double f_mhz = parse_double(key, value);
        config.interference.delta_omega_rad_per_ns = 2.0 * std::numbers::pi * f_mhz * 1e-3;
        return;
    }
    for (const auto& f : fields()) {
        if (f.key == key) {
            f.set(config, value);
            return;
        }
    }
    throw InvalidConfig(std::string(key), "unknown key");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidConfig(std::string(line),
                                "line " + std::to_string(line_no) + ": expected key = value");
        }
        apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    try {
        validate(base);
    } catch (const InvalidParameter& e) {
        throw InvalidConfig(e.field(), e.what());
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

bool is_execution_setting(std::string_view key) { return key == "shards" || key == "threads"; }

Settings to_settings(const RunConfig& config, bool include_execution) {
    Settings out;
    out.reserve(fields().size());
    for (const auto& f : fields()) {
        if (!include_execution && is_execution_setting(f.key)) continue;
        out.emplace_back(f.key, f.get(config));
    }
    return out;
}

std::string format_config(const RunConfig& config) {
    std::string out;
    for (const auto& [k, v] : to_settings(config)) out += k + " = " + v + "\n";
    return out;
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::string canonical;
    for (const auto& [k, v] : to_settings(config, false)) canonical += k + " = " + v + "\n";
    for (const unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string output_header(const RunConfig& config) {
    return std::string("# condmem ") + kToolVersion + " config_hash=" + config_hash(config);
}

}  // namespace condmem
