#include "condmem/event_log.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "condmem/config.hpp"

namespace condmem {
namespace {

constexpr std::string_view kFormatLine = "# condmem-eventlog version=1";
constexpr std::string_view kConfigPrefix = "#@ ";
constexpr std::string_view kColumns = "# trial hL hR kind ageL ageR detections";

EventKind parse_kind(std::string_view s) {
    for (auto k : {EventKind::none, EventKind::ready, EventKind::flush_left, EventKind::flush_right,
                   EventKind::readout}) {
        if (s == to_string(k)) return k;
    }
    throw ParseError("unknown event kind '" + std::string(s) + "'");
}

template <class T>
T parse_int(std::string_view s, const char* what) {
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'");
    }
    return value;
}

bool parse_flag(std::string_view s, const char* what) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        parts.push_back(s.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return parts;
}

Detection parse_detection(std::string_view s) {
    const auto f = split(s, ':');
    if (f.size() < 2 || f.size() > 3) throw ParseError("bad detection '" + std::string(s) + "'");
    Detection d;
    if (f[0] == "a") {
        d.detector = Detector::a;
    } else if (f[0] == "b") {
        d.detector = Detector::b;
    } else {
        throw ParseError("bad detector '" + std::string(f[0]) + "'");
    }
    d.time_ns = parse_int<std::int32_t>(f[1], "detection time");
    if (d.time_ns % kTimeQuantumNs != 0) throw ParseError("detection time off the 2 ns grid");
    if (f.size() == 3) {
        if (f[2] != "bg") throw ParseError("bad detection flag '" + std::string(f[2]) + "'");
        d.background = true;
    }
    return d;
}

}  // namespace

std::string format_record(const TrialRecord& r) {
    std::string s = std::to_string(r.trial_index);
    s += r.herald_left ? " 1" : " 0";
    s += r.herald_right ? " 1 " : " 0 ";
    s += to_string(r.kind);
    s += ' ' + std::to_string(r.age_left) + ' ' + std::to_string(r.age_right) + ' ';
    if (r.detections.empty()) return s + '-';
    for (std::size_t i = 0; i < r.detections.size(); ++i) {
        const Detection& d = r.detections[i];
        if (i > 0) s += ',';
        s += d.detector == Detector::a ? "a:" : "b:";
        s += std::to_string(d.time_ns);
        if (d.background) s += ":bg";
    }
    return s;
}

TrialRecord parse_record(std::string_view line) {
    std::vector<std::string_view> f;
    for (auto part : split(line, ' ')) {
        if (!part.empty()) f.push_back(part);
    }
    if (f.size() != 7) throw ParseError("expected 7 fields, got " + std::to_string(f.size()));
    TrialRecord r;
    r.trial_index = parse_int<std::uint64_t>(f[0], "trial index");
    r.herald_left = parse_flag(f[1], "herald flag");
    r.herald_right = parse_flag(f[2], "herald flag");
    r.kind = parse_kind(f[3]);
    r.age_left = parse_int<std::uint32_t>(f[4], "age");
    r.age_right = parse_int<std::uint32_t>(f[5], "age");
    if (f[6] != "-") {
        for (auto d : split(f[6], ',')) r.detections.push_back(parse_detection(d));
    }
    if (r.detections.size() > 2) throw ParseError("more than one click per detector");
    if (r.detections.size() == 2 && r.detections[0].detector == r.detections[1].detector) {
        throw ParseError("more than one click per detector");
    }
    return r;
}

void write_event_log(std::ostream& out, const EventLog& log) {
    out << output_header(log.config) << '\n' << kFormatLine << '\n';
    for (const auto& [key, value] : to_settings(log.config, false)) {
        out << kConfigPrefix << key << " = " << value << '\n';
    }
    out << kColumns << '\n';
    for (const auto& r : log.records) out << format_record(r) << '\n';
}

void save_event_log(const std::filesystem::path& path, const EventLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_event_log(out, log);
    if (!out) throw IoError("write failed: " + path.string());
}

EventLog read_event_log(std::istream& in) {
    EventLog log;
    std::string config_text;
    std::string hash;
    bool format_seen = false;
    bool config_done = false;
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t last_trial = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line.starts_with(kConfigPrefix)) {
                if (config_done) throw ParseError("configuration after records");
                config_text += line.substr(kConfigPrefix.size()) + '\n';
                continue;
            }
            if (line.front() == '#') {
                if (line == kFormatLine) format_seen = true;
                const auto at = line.find("config_hash=");
                if (at != std::string::npos && hash.empty()) hash = line.substr(at + 12, 16);
                continue;
            }
            if (!config_done) {
                if (!format_seen) throw ParseError("missing event-log format line");
                log.config = parse_config(config_text);
                if (!hash.empty() && hash != config_hash(log.config)) {
                    throw ParseError("config_hash does not match the embedded configuration");
                }
                config_done = true;
            }
            TrialRecord r = parse_record(line);
            if (!log.records.empty() && r.trial_index <= last_trial) {
                throw ParseError("trial indices not increasing");
            }
            if (r.trial_index >= log.config.n_trials) throw ParseError("trial index beyond n_trials");
            last_trial = r.trial_index;
            log.records.push_back(std::move(r));
        }
    } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidConfig& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!format_seen) throw ParseError("missing event-log format line");
    if (!config_done) {
        log.config = parse_config(config_text);
        if (!hash.empty() && hash != config_hash(log.config)) {
            throw ParseError("config_hash does not match the embedded configuration");
        }
    }
    return log;
}

EventLog load_event_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_event_log(in);
}

}  // namespace condmem
