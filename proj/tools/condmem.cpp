// condmem command-line entry point.
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 I/O or log-format error,
// 4 acceptance failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "condmem/analytics.hpp"
#include "condmem/config.hpp"
#include "condmem/control.hpp"
#include "condmem/engine.hpp"
#include "condmem/event_log.hpp"
#include "condmem/fit.hpp"
#include "condmem/hom.hpp"
#include "condmem/reproduce.hpp"

namespace fs = std::filesystem;
using namespace condmem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitAcceptance = 4;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 0;
    std::string format = "csv";
};

RunConfig resolve_config(const Common& o) {
    RunConfig c = o.config_path.empty() ? measured_config() : load_config(o.config_path, measured_config());
    if (o.seed) c.seed = *o.seed;
    if (o.threads > 0) c.threads = o.threads;
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

//---------------------------------------------------------------------------//
// simulate
//---------------------------------------------------------------------------//

int cmd_simulate(const Common& o) {
    RunConfig c = resolve_config(o);
    if (o.threads > 0 && c.shards < o.threads) c.shards = o.threads;
    const RunResult r = run(c);
    const fs::path out = o.out.empty() ? fs::path("events.log") : fs::path(o.out);
    if (out.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(out.parent_path(), ec);
    }
    save_event_log(out, r.log);
    const std::string summary = summary_json(r);
    write_text(fs::path(out.string() + ".summary.json"),
               output_header(r.log.config) + "\n" + summary + "\n");
    std::cout << summary << "\n";
    return kExitOk;
}

//---------------------------------------------------------------------------//
// analyze
//---------------------------------------------------------------------------//

int cmd_analyze(const Common& o, const std::string& log_path, const std::string& paired_path) {
    const EventLog log = load_event_log(log_path);
    const RunConfig& c = log.config;
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    std::ostringstream report;
    report << output_header(c) << "\n";
    report << "trials " << c.n_trials << ", records " << log.records.size() << ", armed trials "
           << armed_trials(log) << "\n";

    std::vector<Table> tables;
    if (c.mode != RunMode::wavepacket) {
        const double p1sq = c.ensemble(Ensemble::left).p1 * c.ensemble(Ensemble::right).p1;
        Table p11{"p11", {"N", "p11", "p11_err", "F11", "p1122_counted", "p1122_counted_err",
                          "p1122_expected", "p1122_expected_err"}, {}};
        for (std::uint32_t n = 1; n <= c.effective_n_max(); ++n) {
            const Estimate a = estimate_p11(log, n);
            const Estimate b = estimate_p1122(log, n);
            const Estimate e = estimate_p1122_expected(log, n);
            p11.rows.push_back({double(n), a.value, a.error, p1sq > 0 ? a.value / p1sq : 0.0,
                                b.value, b.error, e.value, e.error});
        }
        tables.push_back(p11);
        Table dec{"decay", {"N", "ready_events", "p22c", "p22c_err", "p2c_a", "p2c_a_err", "p2c_b",
                            "p2c_b_err"}, {}};
        for (std::uint32_t n = 0; n < c.effective_n_max(); ++n) {
            const auto ready = ready_count(log, n);
            if (ready == 0) continue;
            const Estimate j = estimate_p22c(log, n);
            const Estimate a = estimate_p2c(log, n, Detector::a);
            const Estimate b = estimate_p2c(log, n, Detector::b);
            dec.rows.push_back({double(n), double(ready), j.value, j.error, a.value, a.error,
                                b.value, b.error});
        }
        tables.push_back(dec);
        const auto h = coincidence_histogram(log, PeakSelector::same_trial());
        Table co{"coincidence", {"tau_ns", "p", "p_err"}, {}};
        const double pairs = static_cast<double>(std::max<std::uint64_t>(h.pairs, 1));
        for (std::size_t i = 0; i < h.histogram.size(); ++i) {
            co.rows.push_back({h.histogram.center(i), h.histogram.count(i) / pairs,
                               std::sqrt(h.histogram.count(i)) / pairs});
        }
        tables.push_back(co);
        const Estimate top = estimate_p11(log, c.effective_n_max());
        report << "ready events " << top.count << ", p11(N=" << c.effective_n_max()
               << ") = " << top.value << " +- " << top.error << "\n";
        if (h.pairs > 0 && log.records.size() > 1) {
            const PeakRatio r = cross_trial_ratio(log, 5, c.windows.tau_integration_halfwidth_ns);
            report << "center/side peak ratio " << r.value << " +- " << r.error << "\n";
        }
        const Estimate asym = detector_asymmetry(log);
        report << "D2b/D2a single-click ratio " << asym.value << " +- " << asym.error << "\n";
    } else {
        const Histogram hc = wavepacket_profile(log, true);
        const Histogram hu = wavepacket_profile(log, false);
        const auto dc = hc.normalized(Normalization::density);
        const auto du = hu.normalized(Normalization::density);
        Table wp{"wavepacket", {"t_ns", "conditional_density", "unconditional_density"}, {}};
        for (std::size_t i = 0; i < hc.size(); ++i) wp.rows.push_back({hc.center(i), dc[i], du[i]});
        tables.push_back(wp);
    }

    if (!paired_path.empty()) {
        const EventLog other = load_event_log(paired_path);
        const bool this_parallel = c.interference.polarization == Polarization::parallel;
        const EventLog& par = this_parallel ? log : other;
        const EventLog& orth = this_parallel ? other : log;
        const Visibility v = visibility(par, orth, c.windows.tau_integration_halfwidth_ns);
        const Visibility v6 = visibility(par, orth, 6.0);
        report << "visibility (|tau| <= " << c.windows.tau_integration_halfwidth_ns << " ns) "
               << v.value << " +- " << v.error << "\n";
        report << "visibility (|tau| <= 6 ns) " << v6.value << " +- " << v6.error << "\n";
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string());
    for (const auto& t : tables) write_csv(dir / ("analyze_" + t.name + ".csv"), t, c);
    write_text(dir / "analyze_report.txt", report.str());
    std::cout << report.str();
    return kExitOk;
}

//---------------------------------------------------------------------------//
// oracle
//---------------------------------------------------------------------------//

std::vector<double> parse_values(const std::string& key, const std::string& text) {
    std::vector<double> out;
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw InvalidConfig(key, "expected a number, got '" + s + "'");
        }
    };
    if (const auto colon = text.find(':'); colon != std::string::npos) {
        // lo:hi[:step]
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() < 2 || parts.size() > 3) throw InvalidConfig(key, "range is lo:hi[:step]");
        const double lo = number(parts[0]);
        const double hi = number(parts[1]);
        const double step = parts.size() == 3 ? number(parts[2]) : 1.0;
        if (!(step > 0.0)) throw InvalidConfig(key, "range step must be positive");
        for (double v = lo; v <= hi + 1e-9 * step; v += step) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    return out;
}

using Params = std::map<std::string, double>;

double need(const Params& p, const std::string& key) {
    const auto it = p.find(key);
    if (it == p.end()) throw InvalidConfig(key, "missing parameter");
    return it->second;
}

std::uint32_t need_n(const Params& p, const std::string& key) {
    const double v = need(p, key);
    if (v < 0 || v != std::floor(v)) throw InvalidConfig(key, "expected a non-negative integer");
    return static_cast<std::uint32_t>(v);
}

double evaluate_formula(const std::string& f, const Params& p) {
    try {
        if (f == "p11") return p11_exact(need(p, "p1"), need_n(p, "N"));
        if (f == "p1122_ideal") return p1122_ideal(need(p, "p1"), need(p, "pc"), need_n(p, "N"));
        if (f == "p1122_decohered") {
            return p1122_decohered(need(p, "p1"), need(p, "pc"), need(p, "Nc"), need_n(p, "N"));
        }
        if (f == "p22c") return p22c_model(need(p, "pc"), need(p, "Nc"), need(p, "N"));
        if (f == "p2c") return p2c_model(need(p, "pc"), need(p, "Nc"), need(p, "N"));
        if (f == "v_max") return visibility_from_w(need(p, "w"));
        if (f == "v_eff") return effective_visibility(need(p, "xi"), need(p, "w"));
        if (f == "ratio_r") return cross_trial_ratio(need(p, "P1"), need(p, "w"));
        if (f == "density") {
            const double dw = p.count("delta_f_mhz") ? mhz_to_rad_per_ns(p.at("delta_f_mhz")) : 0.0;
            return coincidence_density(need(p, "tau"), {need(p, "p0"), need(p, "T"),
                                                        p.count("V") ? p.at("V") : 0.0, dw});
        }
    } catch (const InvalidParameter& e) {
        throw InvalidConfig(e.field(), e.what());
    }
    throw InvalidConfig("formula", "unknown formula '" + f + "'");
}

int cmd_oracle(const Common& o, const std::string& formula, const std::vector<std::string>& args) {
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    for (const auto& a : args) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw InvalidConfig(a, "parameters are key=value");
        const std::string key = a.substr(0, eq);
        grid.emplace_back(key, parse_values(key, a.substr(eq + 1)));
    }
    std::ostringstream out;
    RunConfig header_config;
    out << output_header(header_config) << "\n";
    for (const auto& [k, v] : grid) out << k << ",";
    out << formula << "\n";
    std::vector<std::size_t> idx(grid.size(), 0);
    while (true) {
        Params p;
        for (std::size_t i = 0; i < grid.size(); ++i) p[grid[i].first] = grid[i].second[idx[i]];
        const double value = evaluate_formula(formula, p);
        for (std::size_t i = 0; i < grid.size(); ++i) out << format_double(grid[i].second[idx[i]]) << ",";
        out << format_double(value) << "\n";
        std::size_t k = 0;
        while (k < grid.size() && ++idx[k] == grid[k].second.size()) idx[k++] = 0;
        if (k == grid.size()) break;
    }
    if (!o.out.empty()) write_text(o.out, out.str());
    std::cout << out.str();
    return kExitOk;
}

//---------------------------------------------------------------------------//
// fit
//---------------------------------------------------------------------------//

std::vector<DataPoint> load_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<DataPoint> pts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> v;
        std::stringstream ss(line);
        bool numeric = true;
        for (std::string cell; std::getline(ss, cell, ',');) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (pts.empty()) continue;  // column header
            throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric row");
        }
        if (v.size() < 2) throw ParseError(path + ":" + std::to_string(line_no) + ": need x,y");
        DataPoint d{v[0], v[1], v.size() > 2 ? v[2] : 0.0, v.size() > 3 ? static_cast<int>(v[3]) : 0};
        pts.push_back(d);
    }
    return pts;
}

int cmd_fit(const Common& o, const std::string& model_name, const std::string& data_path) {
    FitModel model;
    try {
        model = fit_model_from_string(model_name);
    } catch (const InvalidParameter& e) {
        throw InvalidConfig("model", e.what());
    }
    const auto pts = load_points(data_path);
    const FitResult r = fit(model, pts);
    const std::string json = to_json(r);
    if (!o.out.empty()) write_text(o.out, output_header(RunConfig{}) + "\n" + json + "\n");
    std::cout << json << "\n";
    return kExitOk;
}

//---------------------------------------------------------------------------//
// reproduce / selfcheck
//---------------------------------------------------------------------------//

int cmd_reproduce(const Common& o, const std::string& figure, double scale) {
    const RunConfig base = resolve_config(o);
    std::vector<std::string> figures;
    if (figure == "all") {
        figures = figure_ids();
    } else {
        figures.push_back(figure);
    }
    bool ok = true;
    for (const auto& f : figures) {
        FigureReport rep;
        try {
            rep = reproduce(f, scale, base, o.threads);
        } catch (const InvalidParameter& e) {
            throw InvalidConfig(e.field(), e.what());
        }
        if (!o.out.empty()) write_report(o.out, rep);
        std::cout << format_report(rep);
        ok = ok && rep.passed();
    }
    return ok ? kExitOk : kExitAcceptance;
}

int cmd_selfcheck(const Common& o) {
    const SelfcheckReport rep = selfcheck(o.seed.value_or(1), o.threads);
    std::ostringstream s;
    for (const auto& c : rep.checks) s << format_check(c) << "\n";
    s << (rep.passed() ? "RESULT PASS" : "RESULT FAIL") << " (" << rep.elapsed_seconds << " s)\n";
    if (!o.out.empty()) write_text(o.out, output_header(measured_config()) + "\n" + s.str());
    std::cout << s.str();
    return rep.passed() ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional-memory two-ensemble photon source simulator"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Common o;
    auto add_common = [&](CLI::App* sub, bool with_config) {
        if (with_config) sub->add_option("--config", o.config_path, "Config file (key = value)");
        sub->add_option("--seed", o.seed, "Override the configured seed");
        sub->add_option("--out", o.out, "Output file or directory");
        sub->add_option("--threads", o.threads, "Worker threads (0: all cores)");
        sub->add_option("--format", o.format, "Table format")->check(CLI::IsMember({"csv"}));
    };

    auto* sim = app.add_subcommand("simulate", "Run a simulation and write its event log");
    add_common(sim, true);
    sim->needs(sim->get_option("--config"));

    std::string log_path, paired_path;
    auto* ana = app.add_subcommand("analyze", "Estimators and tables from an event log");
    add_common(ana, false);
    ana->add_option("log", log_path, "Event log")->required();
    ana->add_option("--paired", paired_path, "Log with the other polarization, for visibility");

    std::string formula;
    std::vector<std::string> oracle_args;
    auto* orc = app.add_subcommand("oracle", "Evaluate a closed-form expression over a grid");
    add_common(orc, false);
    orc->add_option("formula", formula,
                    "p11 | p1122_ideal | p1122_decohered | p22c | p2c | v_max | v_eff | ratio_r | density")
        ->required();
    orc->add_option("params", oracle_args, "key=value, key=a,b,c or key=lo:hi[:step]");

    std::string model_name, data_path;
    auto* fitc = app.add_subcommand("fit", "Least-squares fit of x,y[,sigma[,series]] data");
    add_common(fitc, false);
    fitc->add_option("model", model_name, "gaussian | exp_decay | modulated_gaussian | p2c_p22c_pair")
        ->required();
    fitc->add_option("data", data_path, "CSV data file")->required();

    std::string figure;
    double scale = 1.0;
    auto* rep = app.add_subcommand("reproduce", "Regenerate one figure's data and check it");
    add_common(rep, true);
    rep->add_option("--figure", figure, "fig2 | fig3 | fig4 | figA1 | figA2 | all")->required();
    rep->add_option("--scale", scale, "Fraction of the full-scale trial count, in (0, 1]");

    auto* self = app.add_subcommand("selfcheck", "Estimator-versus-oracle grid");
    add_common(self, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*ana) return cmd_analyze(o, log_path, paired_path);
        if (*orc) return cmd_oracle(o, formula, oracle_args);
        if (*fitc) return cmd_fit(o, model_name, data_path);
        if (*rep) return cmd_reproduce(o, figure, scale);
        if (*self) return cmd_selfcheck(o);
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
