#include "condmem/reproduce.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "condmem/analytics.hpp"
#include "condmem/config.hpp"
#include "condmem/control.hpp"
#include "condmem/engine.hpp"
#include "condmem/fit.hpp"
#include "condmem/hom.hpp"
#include "condmem/photon_stats.hpp"

namespace condmem {

RunConfig measured_config() {
    RunConfig c;
    for (auto& e : c.ensembles) {
        e.p1 = 0.0012;
        e.pc = 0.091;
        e.qc = 0.34;
        e.q1 = 0.005;
        e.w = 0.17;
        e.g12 = 23.0;
        e.nc = 18.0;
        e.background_rate = 0.0;
    }
    c.control = {23, 525.0};
    c.interference.xi = 0.90;
    c.interference.envelope_width_ns = 13.0;
    c.interference.delta_omega_rad_per_ns = mhz_to_rad_per_ns(4.0);
    c.interference.splitter_ratio = 0.5;
    c.interference.polarization = Polarization::orthogonal;
    c.interference.pol_misalignment_offset = 0.08;
    c.n_trials = static_cast<std::uint64_t>(kMeasuredTrials);
    c.seed = 20070601;
    return c;
}

//---------------------------------------------------------------------------//
// Checks
//---------------------------------------------------------------------------//

Check Check::near(std::string name, double value, double target, double tolerance,
                  std::string note) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.target = target;
    c.tolerance = tolerance;
    c.pass = std::isfinite(value) && std::abs(value - target) <= tolerance;
    c.note = std::move(note);
    return c;
}

Check Check::within(std::string name, double value, double lo, double hi, std::string note) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.range = true;
    c.lo = lo;
    c.hi = hi;
    c.pass = std::isfinite(value) && value >= lo && value <= hi;
    c.note = std::move(note);
    return c;
}

Check Check::truth(std::string name, bool ok, std::string note) {
    Check c;
    c.name = std::move(name);
    c.value = ok ? 1.0 : 0.0;
    c.target = 1.0;
    c.pass = ok;
    c.note = std::move(note);
    return c;
}

namespace {

std::string num(double v, int precision = 6) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

}  // namespace

std::string format_check(const Check& c) {
    std::string s = c.pass ? "[PASS] " : "[FAIL] ";
    s += c.name + ": ";
    if (c.range) {
        s += num(c.value) + " in [" + num(c.lo) + ", " + num(c.hi) + "]";
    } else if (c.tolerance > 0.0) {
        s += num(c.value) + " vs " + num(c.target) + " +- " + num(c.tolerance, 3);
    } else {
        s += c.pass ? "ok" : "violated";
    }
    if (!c.note.empty()) s += " (" + c.note + ")";
    return s;
}

bool FigureReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

bool SelfcheckReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig2", "fig3", "fig4", "figA1", "figA2"};
    return ids;
}

double widen(double tolerance, double ref_scale, double scale) {
    return tolerance * std::max(1.0, std::sqrt(ref_scale / scale));
}

//---------------------------------------------------------------------------//
// Figure configurations
//---------------------------------------------------------------------------//

namespace {

// Full-scale trial counts of the figures not tied to the 3.36e9-trial run.
constexpr double kFig3Trials = 2e7;   // every trial ready: ~8e4 orthogonal coincidences
constexpr double kFig4Trials = 5e7;   // per source
constexpr double kFigA1Trials = 1e8;

std::uint64_t scaled(double full, double scale) {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(full * scale)));
}

RunConfig fig2_config(const RunConfig& base, double scale) {
    RunConfig c = base;
    c.mode = RunMode::conditional;
    c.interference.polarization = Polarization::orthogonal;
    c.n_trials = scaled(kMeasuredTrials, scale);
    return c;
}

RunConfig figA2_config(const RunConfig& base, double scale) {
    // Single-photon sources: the theory curve neglects the two-photon component.
    RunConfig c = fig2_config(base, scale);
    for (auto& e : c.ensembles) e.w = 0.0;
    return c;
}

RunConfig fig3_config(const RunConfig& base, double scale, Polarization pol) {
    RunConfig c = base;
    c.mode = RunMode::conditional;
    for (auto& e : c.ensembles) {
        e.p1 = 1.0;  // both ensembles herald every trial: each trial is ready(0, 0)
        e.pc = 0.085;
    }
    // xi carries the whole mode mismatch of the integrated visibility.
    c.interference.delta_omega_rad_per_ns = 0.0;
    c.interference.polarization = pol;
    c.n_trials = scaled(kFig3Trials, scale);
    return c;
}

RunConfig fig4_config(const RunConfig& base, double scale, Ensemble source) {
    RunConfig c = base;
    c.mode = RunMode::wavepacket;
    c.wavepacket_source = source;
    for (auto& e : c.ensembles) {
        e.pc = 0.085;
        e.background_rate = 0.002;
    }
    c.n_trials = scaled(kFig4Trials, scale);
    return c;
}

RunConfig figA1_config(const RunConfig& base, double scale) {
    RunConfig c = base;
    c.mode = RunMode::conditional;
    for (auto& e : c.ensembles) {
        e.p1 = 0.05;
        e.w = 0.0;
    }
    c.interference.polarization = Polarization::orthogonal;
    c.interference.pol_misalignment_offset = 0.0;
    c.n_trials = scaled(kFigA1Trials, scale);
    return c;
}

void check_scale(double scale) {
    if (!(scale > 0.0 && scale <= 1.0)) throw InvalidParameter("scale", "violates 0 < scale <= 1");
}

}  // namespace

std::vector<RunConfig> figure_configs(const std::string& figure, double scale, const RunConfig& base) {
    check_scale(scale);
    if (figure == "fig2") return {fig2_config(base, scale)};
    if (figure == "figA2") return {figA2_config(base, scale)};
    if (figure == "fig3") {
        return {fig3_config(base, scale, Polarization::parallel),
                fig3_config(base, scale, Polarization::orthogonal)};
    }
    if (figure == "fig4") {
        return {fig4_config(base, scale, Ensemble::left), fig4_config(base, scale, Ensemble::right)};
    }
    if (figure == "figA1") return {figA1_config(base, scale)};
    throw InvalidParameter("figure", "unknown figure '" + figure + "'");
}

//---------------------------------------------------------------------------//
// Figures
//---------------------------------------------------------------------------//

namespace {

RunResult run_with_threads(RunConfig c, unsigned threads) {
    const unsigned workers = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    c.threads = workers;
    c.shards = std::max(c.shards, workers);
    return run(c);
}

/// Largest |z| of a list of (value - oracle) / error.
double max_abs(const std::vector<double>& z) {
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    return m;
}

double z_score(double value, double oracle, double error) {
    if (error > 0.0) return (value - oracle) / error;
    return value == oracle ? 0.0 : std::numeric_limits<double>::infinity();
}

void fig2_tables(FigureReport& rep, const EventLog& log, bool full_checks) {
    const RunConfig& c = log.config;
    const auto& e = c.ensemble(Ensemble::left);
    const double p1sq = e.p1 * c.ensemble(Ensemble::right).p1;
    const std::uint32_t n_max = c.control.n_max;

    Table p11{"fig2_p11", {"N", "p11", "p11_err", "p11_exact", "F11", "F11_err", "F11_exact"}, {}};
    std::vector<double> z11;
    for (std::uint32_t n = 1; n <= n_max; ++n) {
        const Estimate est = estimate_p11(log, n);
        const double exact = p11_exact(e.p1, n);
        z11.push_back(z_score(est.value, exact, std::sqrt(exact * est.denominator) / est.denominator));
        p11.rows.push_back({double(n), est.value, est.error, exact, est.value / p1sq,
                            est.error / p1sq, exact / p1sq});
    }

    Table p1122{"fig2_p1122",
                {"N", "p1122_counted", "p1122_counted_err", "p1122_expected", "p1122_expected_err",
                 "p1122_decohered", "p1122_ideal"},
                {}};
    const Estimate e1 = estimate_p1122_expected(log, 1);
    // Window acceptance, splitter and orientation losses scale every p1122 term alike.
    const auto& er = c.ensemble(Ensemble::right);
    const double acceptance =
        click_probabilities(conditional_distribution(e.pc, e.w), conditional_distribution(er.pc, er.w),
                            c.interference)
            .both /
        (e.pc * er.pc / 2.0);
    std::vector<double> z1122;
    for (std::uint32_t n = 1; n <= n_max; ++n) {
        const Estimate counted = estimate_p1122(log, n);
        const Estimate expected = estimate_p1122_expected(log, n);
        const double oracle = p1122_decohered(e.p1, e.pc, e.nc, n);
        z1122.push_back(z_score(expected.value, acceptance * oracle, expected.error));
        p1122.rows.push_back({double(n), counted.value, counted.error, expected.value,
                              expected.error, oracle, p1122_ideal_exact(e.p1, e.pc, n)});
    }
    rep.tables.push_back(p11);
    rep.tables.push_back(p1122);

    const Estimate top = estimate_p11(log, n_max);
    const double f11 = top.value / p1sq;
    const double f11_exact = enhancement_f11(e.p1, n_max);
    const double f11_sigma = std::sqrt(p11_exact(e.p1, n_max) * top.denominator) / top.denominator / p1sq;
    if (full_checks) {
        rep.checks.push_back(Check::near("F11(N=" + std::to_string(n_max) + ") vs closed form", f11,
                                         f11_exact, 3.0 * f11_sigma,
                                         "3 sigma binomial; ready events " + num(top.count)));
        rep.checks.push_back(Check::truth("p11(N) within 3 sigma of closed form for N=1.." +
                                              std::to_string(n_max),
                                          max_abs(z11) <= 3.0, "max |z| " + num(max_abs(z11), 3)));
        const Enhancement f = enhancement_ratio(estimate_p1122_expected(log, n_max), e1);
        const double f_oracle = enhancement_f1122(e.p1, e.pc, e.nc, n_max);
        rep.checks.push_back(Check::near("F1122(N=" + std::to_string(n_max) +
                                             ") conditional expectation vs decoherence model",
                                         f.value, f_oracle, 3.0 * f.error,
                                         "sigma " + num(f.error, 3)));
        const double band = widen(4.0, 1.0, rep.scale);
        rep.checks.push_back(Check::within("F1122(N=" + std::to_string(n_max) + ") in band",
                                           f.value, 26.0 - band, 26.0 + band,
                                           "measured value 28"));
        const Estimate c_n = estimate_p1122(log, n_max);
        const Estimate c_1 = estimate_p1122(log, 1);
        std::string counted = "counted joint detections " + num(c_n.count) + " (N<=" +
                              std::to_string(n_max) + "), " + num(c_1.count) + " (N=1)";
        if (c_1.count > 0) {
            const Enhancement fc = enhancement_ratio(c_n, c_1);
            counted += "; counted F1122 " + num(fc.value, 4) + " +- " + num(fc.error, 3);
        }
        rep.checks.push_back(Check::truth("counted coincidences reported", true, counted));
    } else {
        rep.checks.push_back(Check::truth(
            "p1122(N) conditional expectation within 3 sigma of decoherence model for N=1.." +
                std::to_string(n_max),
            max_abs(z1122) <= 3.0,
            "max |z| " + num(max_abs(z1122), 3) + "; oracle times acceptance " + num(acceptance, 4)));
        const double ratio = p1122_ideal(e.p1, e.pc, n_max) / p1122_decohered(e.p1, e.pc, e.nc, n_max);
        rep.checks.push_back(Check::near("ideal / decohered p1122 at N=" + std::to_string(n_max),
                                         ratio, 1.6, 0.1,
                                         "closed forms give 45/25.4; 1.6 is the measured 45/28"));
    }
}

std::vector<DataPoint> histogram_points(const Histogram& h, double halfwidth, double scale = 1.0) {
    std::vector<DataPoint> pts;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(h.center(i)) > halfwidth) continue;
        pts.push_back({h.center(i), h.count(i) * scale, std::sqrt(std::max(h.count(i), 1.0)) * scale});
    }
    return pts;
}

void fig3(FigureReport& rep, unsigned threads) {
    const RunResult par = run_with_threads(rep.configs[0], threads);
    const RunResult orth = run_with_threads(rep.configs[1], threads);
    const RunConfig& c = orth.log.config;
    const double hw = c.windows.tau_integration_halfwidth_ns;

    const auto hp = coincidence_histogram(par.log, PeakSelector::same_trial());
    const auto ho = coincidence_histogram(orth.log, PeakSelector::same_trial());
    Table t{"fig3_coincidence", {"tau_ns", "p_parallel", "p_parallel_err", "p_orthogonal", "p_orthogonal_err"}, {}};
    const double np = static_cast<double>(hp.pairs);
    const double no = static_cast<double>(ho.pairs);
    for (std::size_t i = 0; i < ho.histogram.size(); ++i) {
        const double cp = hp.histogram.count(i);
        const double co = ho.histogram.count(i);
        t.rows.push_back({ho.histogram.center(i), cp / np, std::sqrt(cp) / np, co / no, std::sqrt(co) / no});
    }
    rep.tables.push_back(t);

    // Gaussian on the orthogonal counts, then V and delta_omega on the parallel counts.
    const FitResult g = fit(FitModel::gaussian, histogram_points(ho.histogram, hw));
    FitOptions mo;
    mo.fixed = {true, true, false, false};
    const double p0 = g.param("p0") * np / no;
    std::vector<DataPoint> pp = histogram_points(hp.histogram, hw);
    std::vector<double> start{p0, g.param("T"), 0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    for (const double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (int mhz = 0; mhz <= 10; ++mhz) {
            const std::vector<double> p{p0, g.param("T"), v, mhz_to_rad_per_ns(mhz)};
            const double chi2 = chi_square(FitModel::modulated_gaussian, p, pp);
            if (chi2 < best) {
                best = chi2;
                start = p;
            }
        }
    }
    mo.initial = start;
    const FitResult m = fit(FitModel::modulated_gaussian, pp, mo);
    rep.fits.push_back(to_json(g));
    rep.fits.push_back(to_json(m));

    const double t_expected = c.interference.coincidence_width_ns();
    rep.checks.push_back(Check::near("fitted T vs sqrt(2) Tc", g.param("T"), t_expected,
                                     widen(1.0, 0.05, rep.scale),
                                     "fit error " + num(g.error("T"), 3) + " ns"));

    const auto& e = c.ensemble(Ensemble::left);
    const auto dist = conditional_distribution(e.pc, e.w);
    RunConfig cp = par.log.config;
    const double both_par = click_probabilities(dist, dist, cp.interference).both;
    const double both_orth = click_probabilities(dist, dist, c.interference).both;
    const double v_model = 1.0 - both_par / both_orth;

    const Visibility v_int = visibility(par.log, orth.log, hw);
    const Visibility v_6 = visibility(par.log, orth.log, 6.0);
    rep.checks.push_back(Check::near("integrated V vs click model", v_int.value, v_model,
                                     3.0 * v_int.error,
                                     "coincidences " + num(v_int.parallel.count) + " parallel, " +
                                         num(v_int.orthogonal.count) + " orthogonal"));
    rep.checks.push_back(Check::near("integrated V vs measured 0.77", v_int.value, 0.77, 0.06));
    rep.checks.push_back(Check::near("V within +-6 ns vs measured 0.80", v_6.value, 0.80, 0.10,
                                     "error " + num(v_6.error, 3)));
    rep.checks.push_back(Check::truth("modulated fit reported", true,
                                      "V_fit " + num(m.param("V"), 4) + " +- " + num(m.error("V"), 3) +
                                          ", delta_omega/2pi " +
                                          num(rad_per_ns_to_mhz(m.param("delta_omega")), 3) + " MHz"));

    const PeakRatio r = cross_trial_ratio(orth.log, 5, hw);
    const double r_first = cross_trial_ratio(e.pc, e.w);
    const double r_exact = cross_trial_ratio_exact(dist, dist, c.interference);
    rep.checks.push_back(Check::near("center/side peak ratio vs first-order r", r.value, r_first,
                                     3.0 * r.error, "click-model ratio " + num(r_exact, 4)));

    // Side peaks: no interference; only the field-2L loss of the orthogonal setting remains.
    const auto cpar = click_probabilities(dist, dist, cp.interference);
    const auto corth = click_probabilities(dist, dist, c.interference);
    const double v_side_model = 1.0 - (cpar.a() * cpar.b()) / (corth.a() * corth.b());
    double worst = 0.0;
    for (int k = 1; k <= 5; ++k) {
        for (const int s : {k, -k}) {
            const Visibility vs = visibility(par.log, orth.log, hw, PeakSelector{s});
            worst = std::max(worst, std::abs(vs.value - v_side_model));
        }
    }
    rep.checks.push_back(Check::near("side-peak visibility minus loss offset", worst, 0.0, 0.05,
                                     "offset-only value " + num(v_side_model, 3)));
}

void fig4(FigureReport& rep, unsigned threads) {
    for (std::size_t i = 0; i < rep.configs.size(); ++i) {
        const RunResult res = run_with_threads(rep.configs[i], threads);
        const std::string side = to_string(res.log.config.wavepacket_source);
        const Histogram hc = wavepacket_profile(res.log, true);
        const Histogram hu = wavepacket_profile(res.log, false);
        const auto dc = hc.normalized(Normalization::density);
        const auto du = hu.normalized(Normalization::density);
        const double nc = hc.total_weight() - hc.overflow();
        const double nu = hu.total_weight() - hu.overflow();
        Table t{"fig4_wavepackets_" + side,
                {"t_ns", "conditional_density", "conditional_err", "unconditional_density",
                 "unconditional_err"},
                {}};
        for (std::size_t b = 0; b < hc.size(); ++b) {
            t.rows.push_back({hc.center(b), dc[b], std::sqrt(hc.count(b)) / (nc * 2.0), du[b],
                              std::sqrt(hu.count(b)) / (nu * 2.0)});
        }
        rep.tables.push_back(t);

        const FitResult g = fit(FitModel::gaussian, histogram_points(hc, 1e9));
        rep.fits.push_back(to_json(g));
        const double tc = res.log.config.interference.envelope_width_ns;
        rep.checks.push_back(Check::near("conditional wavepacket width (" + side + ")", g.param("T"),
                                         tc, widen(0.5, 1.0, rep.scale),
                                         "detections " + num(nc)));
        // Tails beyond |t| >= 36 ns hold essentially no correlated light.
        double tail_c = 0.0, tail_u = 0.0;
        for (std::size_t b = 0; b < hc.size(); ++b) {
            if (std::abs(hc.center(b)) < 36.0) continue;
            tail_c += hc.count(b);
            tail_u += hu.count(b);
        }
        const double fc = tail_c / nc;
        const double fu = tail_u / nu;
        const double sigma = std::sqrt(std::max(tail_c, 1.0)) / nc + std::sqrt(std::max(tail_u, 1.0)) / nu;
        const double rate = res.log.config.ensemble(res.log.config.wavepacket_source).background_rate;
        if (rate > 0.0) {
            rep.checks.push_back(Check::truth("unconditional tail above conditional (" + side + ")",
                                              fu - fc > 3.0 * sigma,
                                              "tail fractions " + num(fc, 3) + " vs " + num(fu, 3)));
        } else {
            rep.checks.push_back(Check::near("profiles agree without background (" + side + ")",
                                             fu - fc, 0.0, 3.0 * sigma));
        }
    }
}

void figA1(FigureReport& rep, unsigned threads) {
    const RunResult res = run_with_threads(rep.configs[0], threads);
    const EventLog& log = res.log;
    const RunConfig& c = log.config;
    const auto& e = c.ensemble(Ensemble::left);
    Table t{"figA1_decay",
            {"N", "ready_events", "p22c", "p22c_err", "p2c_a", "p2c_a_err", "p2c_b", "p2c_b_err",
             "p22c_model", "p2c_model", "p22c_window_oracle", "p2c_a_window_oracle"},
            {}};
    std::vector<DataPoint> pair_data;
    std::vector<DataPoint> p22_data;
    // Fits see window-corrected data: p22c / g^2 and p2c / g.
    const double split = c.interference.splitter_ratio;
    const double g2 = p22c_window_oracle(1.0, 1.0, c) / (2.0 * split * (1.0 - split));
    const double g = std::sqrt(g2);
    double chi2 = 0.0;
    int dof = 0;
    for (std::uint32_t n = 0; n + 1 < c.control.n_max; ++n) {
        const double ready = static_cast<double>(ready_count(log, n));
        if (ready == 0.0) continue;
        const Estimate p22 = estimate_p22c(log, n);
        const Estimate pa = estimate_p2c(log, n, Detector::a);
        const Estimate pb = estimate_p2c(log, n, Detector::b);
        const double fresh = e.pc;
        const double aged = retrieval_decay(e.pc, n, e.nc);
        const double o22 = p22c_window_oracle(fresh, aged, c);
        const double oa = p2c_window_oracle(fresh, aged, Detector::a, c);
        const double ob = p2c_window_oracle(fresh, aged, Detector::b, c);
        for (const auto& [v, o] : {std::pair{p22.value, o22}, {pa.value, oa}, {pb.value, ob}}) {
            const double sd = std::sqrt(o * (1.0 - o) / ready);
            chi2 += (v - o) * (v - o) / (sd * sd);
            ++dof;
        }
        t.rows.push_back({double(n), ready, p22.value, p22.error, pa.value, pa.error, pb.value,
                          pb.error, p22c_model(e.pc, e.nc, n), p2c_model(e.pc, e.nc, n), o22, oa});
        const double s22 = std::max(p22.error, 1.0 / ready) / g2;
        pair_data.push_back({double(n), p22.value / g2, s22, 0});
        pair_data.push_back({double(n), pa.value / g, std::max(pa.error, 1.0 / ready) / g, 1});
        p22_data.push_back({double(n), p22.value / g2, s22, 0});
    }
    rep.tables.push_back(t);

    const boost::math::chi_squared_distribution<double> dist(dof);
    const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    rep.checks.push_back(Check::truth("p22c, p2c_a, p2c_b match window-aware oracle", p_value > 1e-3,
                                      "chi2 " + num(chi2, 4) + " / " + std::to_string(dof) +
                                          " dof, p = " + num(p_value, 3)));

    const FitResult ex = fit(FitModel::exp_decay, p22_data);
    const FitResult pair = fit(FitModel::p2c_p22c_pair, pair_data);
    rep.fits.push_back(to_json(ex));
    rep.fits.push_back(to_json(pair));
    const double pc_exp = std::sqrt(2.0 * ex.param("A"));
    const double scale = rep.scale;
    // 5% or three standard errors of the fit, whichever is larger.
    const auto tol = [scale](double v, double err) {
        return std::max(widen(0.05 * v, 1.0, scale), 3.0 * err);
    };
    rep.checks.push_back(Check::near("pc from p22c decay fit", pc_exp, e.pc,
                                     tol(e.pc, ex.error("A") / (2.0 * pc_exp)),
                                     "window acceptance " + num(g, 4)));
    rep.checks.push_back(Check::near("Nc from p22c decay fit", ex.param("Nc"), e.nc, tol(e.nc, ex.error("Nc")),
                                     "fit error " + num(ex.error("Nc"), 3)));
    rep.checks.push_back(Check::near("pc from p2c/p22c pair fit", pair.param("pc"), e.pc, tol(e.pc, pair.error("pc")),
                                     "fit error " + num(pair.error("pc"), 3)));
    rep.checks.push_back(Check::near("Nc from p2c/p22c pair fit", pair.param("Nc"), e.nc, tol(e.nc, pair.error("Nc")),
                                     "fit error " + num(pair.error("Nc"), 3)));
    const Estimate asym = detector_asymmetry(log);
    rep.checks.push_back(Check::truth("detector asymmetry reported", true,
                                      "D2b/D2a " + num(asym.value, 4) + " +- " + num(asym.error, 2) +
                                          "; measured 0.95 reflects detector efficiency, not modeled"));
}

}  // namespace

FigureReport reproduce(const std::string& figure, double scale, const RunConfig& base,
                       unsigned threads) {
    const auto start = std::chrono::steady_clock::now();
    FigureReport rep;
    rep.figure = figure;
    rep.scale = scale;
    rep.configs = figure_configs(figure, scale, base);
    if (figure == "fig2" || figure == "figA2") {
        const RunResult res = run_with_threads(rep.configs[0], threads);
        fig2_tables(rep, res.log, figure == "fig2");
        if (figure == "figA2") {
            rep.tables.front().name = "figA2_p11";
            rep.tables.back().name = "figA2_theory";
        }
    } else if (figure == "fig3") {
        fig3(rep, threads);
    } else if (figure == "fig4") {
        fig4(rep, threads);
    } else {
        figA1(rep, threads);
    }
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

//---------------------------------------------------------------------------//
// Output
//---------------------------------------------------------------------------//

void write_csv(const std::filesystem::path& path, const Table& table, const RunConfig& config) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << output_header(config) << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::string format_report(const FigureReport& rep) {
    std::string s = "figure " + rep.figure + " scale " + num(rep.scale) + " elapsed " +
                    num(rep.elapsed_seconds, 4) + " s\n";
    for (const auto& c : rep.configs) {
        s += "  run " + config_hash(c) + ": mode " + to_string(c.mode) + ", " + to_string(c.interference.polarization) +
             ", " + std::to_string(c.n_trials) + " trials\n";
    }
    for (const auto& c : rep.checks) s += format_check(c) + "\n";
    s += rep.passed() ? "RESULT PASS\n" : "RESULT FAIL\n";
    return s;
}

void write_report(const std::filesystem::path& dir, const FigureReport& rep) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const RunConfig& header_config = rep.configs.empty() ? RunConfig{} : rep.configs.front();
    for (const auto& t : rep.tables) write_csv(dir / (t.name + ".csv"), t, header_config);
    {
        std::ofstream out(dir / (rep.figure + "_report.txt"));
        if (!out) throw IoError("cannot write report in " + dir.string());
        out << output_header(header_config) << '\n' << format_report(rep);
    }
    std::ofstream out(dir / (rep.figure + "_fits.json"));
    if (!out) throw IoError("cannot write fits in " + dir.string());
    out << output_header(header_config) << '\n' << "[";
    for (std::size_t i = 0; i < rep.fits.size(); ++i) out << (i ? ",\n" : "\n") << rep.fits[i];
    out << "\n]\n";
}

//---------------------------------------------------------------------------//
// Selfcheck
//---------------------------------------------------------------------------//

SelfcheckReport selfcheck(std::uint64_t seed, unsigned threads) {
    const auto start = std::chrono::steady_clock::now();
    SelfcheckReport rep;
    const std::array<double, 3> p1s{0.002, 0.01, 0.05};
    const std::array<double, 3> pcs{0.05, 0.1, 0.3};
    const std::array<double, 3> ncs{5.0, 18.0, 60.0};
    constexpr double kReadyTarget = 2e4;

    struct Family {
        std::string name;
        double chi2 = 0.0;
        int dof = 0;
        double worst = 0.0;
    };
    std::array<Family, 6> fam{{{"p11(N=n_max)"}, {"p11(N=1)"}, {"p1122 conditional expectation"},
                               {"p22c joint clicks"}, {"p2c D2a"}, {"p2c D2b"}}};
    bool accounting_ok = true;
    std::uint64_t run_index = 0;

    for (const double p1 : p1s) {
        for (const double pc : pcs) {
            for (const double nc : ncs) {
                RunConfig c = measured_config();
                for (auto& e : c.ensembles) {
                    e.p1 = p1;
                    e.pc = pc;
                    e.nc = nc;
                    e.w = 0.0;
                }
                c.interference.pol_misalignment_offset = 0.0;
                c.interference.polarization = Polarization::orthogonal;
                const double ready_rate = p11_exact(p1, c.control.n_max) / (1.0 + 2.0 * p1 * c.control.n_max);
                c.n_trials = static_cast<std::uint64_t>(std::clamp(kReadyTarget / ready_rate, 1e5, 2e7));
                c.seed = seed + run_index++;
                const RunResult res = run_with_threads(c, threads);
                const EventLog& log = res.log;
                accounting_ok = accounting_ok && armed_trials(log) == res.counters.armed_trials;

                auto add = [](Family& f, double value, double oracle, double sd) {
                    const double z = z_score(value, oracle, sd);
                    f.chi2 += z * z;
                    ++f.dof;
                    f.worst = std::max(f.worst, std::abs(z));
                };
                const double armed = static_cast<double>(armed_trials(log));
                for (const auto& [n, slot] : {std::pair{c.control.n_max, 0}, {1u, 1}}) {
                    const Estimate est = estimate_p11(log, n);
                    const double exact = p11_exact(p1, n);
                    add(fam[static_cast<std::size_t>(slot)], est.value, exact, std::sqrt(exact / armed));
                }
                const Estimate rb = estimate_p1122_expected(log, c.control.n_max);
                add(fam[2], rb.value, p1122_decohered(p1, pc, nc, c.control.n_max), rb.error);

                double joint = 0.0, a_only = 0.0, b_only = 0.0;
                double o22 = 0.0, oa = 0.0, ob = 0.0, v22 = 0.0, va = 0.0, vb = 0.0;
                const double hw = c.windows.conditional_field2_window_ns / 2.0;
                for (const auto& r : log.records) {
                    if (!r.is_ready()) continue;
                    const double pl = retrieval_decay(pc, r.age_left, nc);
                    const double pr = retrieval_decay(pc, r.age_right, nc);
                    const double q22 = p22c_window_oracle(pl, pr, c);
                    const double qa = p2c_window_oracle(pl, pr, Detector::a, c);
                    const double qb = p2c_window_oracle(pl, pr, Detector::b, c);
                    o22 += q22, oa += qa, ob += qb;
                    v22 += q22 * (1 - q22), va += qa * (1 - qa), vb += qb * (1 - qb);
                    bool a = false, b = false;
                    for (const auto& d : r.detections) {
                        if (std::abs(d.time_ns) > hw) continue;
                        (d.detector == Detector::a ? a : b) = true;
                    }
                    joint += a && b;
                    a_only += a && !b;
                    b_only += b && !a;
                }
                add(fam[3], joint, o22, std::sqrt(v22));
                add(fam[4], a_only, oa, std::sqrt(va));
                add(fam[5], b_only, ob, std::sqrt(vb));
            }
        }
    }
    for (const auto& f : fam) {
        const boost::math::chi_squared_distribution<double> dist(f.dof);
        const double p_value = boost::math::cdf(boost::math::complement(dist, f.chi2));
        rep.checks.push_back(Check::truth(f.name + " within 3 sigma at every grid point",
                                          f.worst <= 3.0, "max |z| " + num(f.worst, 3)));
        rep.checks.push_back(Check::truth(f.name + " chi-square over the grid", p_value > 1e-3,
                                          "chi2 " + num(f.chi2, 4) + " / " + std::to_string(f.dof) +
                                              " dof, p = " + num(p_value, 3)));
    }
    rep.checks.push_back(Check::truth("armed trials rebuilt from logs match engine counters",
                                      accounting_ok));
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.checks.push_back(Check::within("selfcheck runtime (s)", rep.elapsed_seconds, 0.0, 300.0));
    return rep;
}

}  // namespace condmem
