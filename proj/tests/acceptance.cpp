// One PASS/FAIL line per acceptance criterion; exit 4 when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "condmem/analytics.hpp"
#include "condmem/config.hpp"
#include "condmem/control.hpp"
#include "condmem/engine.hpp"
#include "condmem/event_log.hpp"
#include "condmem/fit.hpp"
#include "condmem/hom.hpp"
#include "condmem/reproduce.hpp"
#include "reference_control.hpp"
#include "synthetic.hpp"

using namespace condmem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string serialized(const EventLog& log) {
    std::ostringstream out;
    write_event_log(out, log);
    return out.str();
}

constexpr double kP1 = 0.0012;
constexpr std::uint32_t kNmax = 23;

Outcome preparation_enhancement() {
    RunConfig c = measured_config();
    c.n_trials = 30'000'000;
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run(c);
    const Estimate p = estimate_p11(r.log, kNmax);
    const double elapsed = seconds_since(t0);
    const double f11 = p.value / (kP1 * kP1);
    const double exact = enhancement_f11(kP1, kNmax);
    // Binomial sigma at the exact rate.
    const double sigma = std::sqrt(p11_exact(kP1, kNmax) / p.denominator) / (kP1 * kP1);
    const bool ok = std::abs(f11 - exact) <= 3.0 * sigma && std::abs(exact - 44.4) < 0.05 &&
                    elapsed <= 10.0;
    return {ok, fmt("F11 = %.3f, oracle %.3f +- %.3f (3 sigma), %.0f ready events, %.2f s (limit 10 s)",
                    f11, exact, 3.0 * sigma, p.count, elapsed)};
}

Outcome joint_detection_enhancement() {
    RunConfig c = measured_config();
    c.n_trials = 100'000'000;
    auto t0 = std::chrono::steady_clock::now();
    {
        const RunResult r = run(c);
        enhancement_ratio(estimate_p1122_expected(r.log, kNmax), estimate_p1122_expected(r.log, 1));
    }
    const double elapsed_1e8 = seconds_since(t0);

    // Joint clicks at N = 1 are rare (~1e-8 per trial); 10^9 trials give a ~3% ratio error
    // with the conditional-expectation estimator.
    c.n_trials = 1'000'000'000;
    const RunResult r = run(c);
    const Enhancement f =
        enhancement_ratio(estimate_p1122_expected(r.log, kNmax), estimate_p1122_expected(r.log, 1));
    const double oracle = enhancement_f1122(kP1, 0.091, 18, kNmax);
    const Estimate cn = estimate_p1122(r.log, kNmax);
    const Estimate c1 = estimate_p1122(r.log, 1);
    std::string counted = fmt("counted %.0f / %.0f joint clicks", cn.count, c1.count);
    if (c1.count > 0) {
        const Enhancement fc = enhancement_ratio(cn, c1);
        counted += fmt(" -> %.1f +- %.1f", fc.value, fc.error);
    }
    const bool ok = std::abs(f.value - oracle) <= 3.0 * f.error && f.value >= 22.0 && f.value <= 30.0 &&
                    elapsed_1e8 <= 60.0;
    return {ok, fmt("F1122 = %.2f +- %.2f vs oracle %.2f (3 sigma), band [22, 30]; %s; 1e8 trials in "
                    "%.2f s (limit 60 s)",
                    f.value, f.error, oracle, counted.c_str(), elapsed_1e8)};
}

Outcome ideal_memory_ratio() {
    const double ratio = p1122_ideal(kP1, 0.091, kNmax) / p1122_decohered(kP1, 0.091, 18, kNmax);
    const double exact_form = p1122_ideal_exact(kP1, 0.091, kNmax) / p1122_decohered(kP1, 0.091, 18, kNmax);
    return {std::abs(ratio - 1.6) <= 0.1,
            fmt("p1122_ideal / p1122_decohered = %.4f (exact-p1 form %.4f), target 1.6 +- 0.1; "
                "1.6 is the measured 45/28, the closed forms give 45/25.4",
                ratio, exact_form)};
}

RunConfig hom_config(Polarization pol) {
    RunConfig c = measured_config();
    for (auto& e : c.ensembles) {
        e.p1 = 1.0;  // every trial is a ready event
        e.pc = 0.085;
        e.w = 0.17;
    }
    c.interference.xi = 0.90;
    c.interference.delta_omega_rad_per_ns = 0.0;
    c.interference.splitter_ratio = 0.5;
    c.interference.pol_misalignment_offset = 0.0;
    c.interference.polarization = pol;
    c.n_trials = 1'000'000;
    return c;
}

struct HomRuns {
    EventLog parallel;
    EventLog orthogonal;
};

const HomRuns& hom_runs() {
    static const HomRuns runs{run(hom_config(Polarization::parallel)).log,
                              run(hom_config(Polarization::orthogonal)).log};
    return runs;
}

Outcome hom_visibility() {
    const auto& h = hom_runs();
    const double hw = h.parallel.config.windows.tau_integration_halfwidth_ns;
    const Visibility v = visibility(h.parallel, h.orthogonal, hw);
    const Visibility v6 = visibility(h.parallel, h.orthogonal, 6.0);
    const bool counts = v.parallel.count >= 600 && v.orthogonal.count >= 600;
    const bool ok = counts && std::abs(v.value - 0.77) <= 0.06 && std::abs(v6.value - 0.80) <= 0.10;
    return {ok, fmt("V = %.3f +- %.3f (target 0.77 +- 0.06), V(+-6 ns) = %.3f +- %.3f (target 0.80 +- "
                    "0.10), coincidences %.0f parallel / %.0f orthogonal",
                    v.value, v.error, v6.value, v6.error, v.parallel.count, v.orthogonal.count)};
}

Outcome closed_forms() {
    const double vmax = visibility_from_w(0.17);
    const double r = cross_trial_ratio(0.085, 0.17);
    const double p22 = p22c_model(0.091, 18, 0);
    InterferenceConfig ic;
    ic.envelope_width_ns = 13.0;
    const double T = ic.coincidence_width_ns();
    const bool ok = std::abs(vmax - 1.0 / 1.17) <= 1e-9 && std::abs(vmax - 0.8547) < 1e-4 &&
                    std::abs(r - 0.5 * 1.17 / (1.0 + 2.0 * 0.17 * 0.085)) <= 1e-9 &&
                    std::abs(r - 0.5686) < 1e-4 && std::abs(p22 - 0.091 * 0.091 / 2.0) <= 1e-9 &&
                    std::abs(T - 18.38) <= 0.05;
    return {ok, fmt("V_max = %.10f, r = %.10f, p22c(0) = %.10g, T = %.4f ns", vmax, r, p22, T)};
}

Outcome fit_recovery() {
    const double dw = mhz_to_rad_per_ns(4.0);
    // ~4200 orthogonal counts: the statistics at which the Gaussian fit gives T to +-0.2 ns.
    constexpr double kCounts = 4200;
    auto within = [](const FitResult& r) {
        return std::abs(r.param("V") - 0.80) <= 0.02 &&
               std::abs(rad_per_ns_to_mhz(r.param("delta_omega")) - 4.0) <= 4.0;
    };
    const FitResult canonical = testing::fit_eq2(testing::eq2_data(kCounts, 18.4, 0.80, dw, 20070601));
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        good += within(testing::fit_eq2(testing::eq2_data(kCounts, 18.4, 0.80, dw, seed)));
    }

    // Noiseless data, every model, 1e-9.
    double worst = 0.0;
    auto noiseless = [&](FitModel m, const std::vector<double>& truth, double lo, double hi, double step,
                         int series) {
        std::vector<DataPoint> d;
        for (int s = 0; s < series; ++s) {
            for (double x = lo; x <= hi + 1e-9; x += step) {
                const double y = evaluate_model(m, truth, x, s);
                d.push_back({x, y, std::max(std::abs(y), 1e-6) * 0.01, s});
            }
        }
        const FitResult r = fit(m, d);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            worst = std::max(worst, std::abs(r.params[i] - truth[i]) / std::max(1.0, std::abs(truth[i])));
        }
    };
    noiseless(FitModel::gaussian, {250.0, 18.4}, -44, 44, 2, 1);
    noiseless(FitModel::exp_decay, {0.0041405, 18.0}, 0, 22, 1, 1);
    noiseless(FitModel::p2c_p22c_pair, {0.091, 18.0}, 0, 22, 1, 2);
    noiseless(FitModel::modulated_gaussian, {250.0, 18.4, 0.8, dw}, -44, 44, 2, 1);

    const bool ok = within(canonical) && good >= 90 && worst <= 1e-9;
    return {ok, fmt("canonical seed V = %.4f, delta_omega/2pi = %.2f MHz; %d/100 seeds within +-0.02 and "
                    "+-4 MHz (need 90); noiseless worst relative error %.1e",
                    canonical.param("V"), rad_per_ns_to_mhz(canonical.param("delta_omega")), good, worst)};
}

Outcome side_peak_ratio() {
    const auto& h = hom_runs();
    const double hw = h.parallel.config.windows.tau_integration_halfwidth_ns;
    const PeakRatio r = cross_trial_ratio(h.orthogonal, 5, hw);
    const double oracle = cross_trial_ratio(0.085, 0.17);
    const auto dist = conditional_distribution(0.085, 0.17);
    const double click_model = cross_trial_ratio_exact(dist, dist, h.orthogonal.config.interference);
    double worst = 0.0;
    for (int k = 1; k <= 5; ++k) {
        for (const int s : {k, -k}) {
            worst = std::max(worst, std::abs(visibility(h.parallel, h.orthogonal, hw, PeakSelector{s}).value));
        }
    }
    const bool ok = std::abs(r.value - oracle) <= 3.0 * r.error && worst < 0.05;
    return {ok, fmt("center/side = %.4f +- %.4f vs r = %.4f (3 sigma; click model %.4f); max side-peak "
                    "|V| = %.4f (limit 0.05)",
                    r.value, r.error, oracle, click_model, worst)};
}

Outcome state_machine() {
    std::uint64_t mismatches = 0;
    std::uint64_t violations = 0;
    std::uint64_t transitions = 0;
    for (std::uint32_t n_max = 1; n_max <= 4; ++n_max) {
        testing::ModelCheck mc{n_max, 12};
        mc.explore(ControlState{}, testing::Reference{n_max, {}, 0}, 0);
        mismatches += mc.mismatches;
        violations += mc.violations;
        transitions += mc.transitions;
    }
    double worst = 0.0;
    for (double p1 : {0.001, 0.01, 0.1}) {
        for (std::uint32_t n = 1; n <= 8; ++n) {
            worst = std::max(worst, std::abs(p11_exact(p1, n) - testing::p11_enumerated(p1, n)));
        }
    }
    const bool ok = mismatches == 0 && violations == 0 && worst <= 1e-12;
    return {ok, fmt("%llu transitions, %llu mismatches, %llu safety violations; p11 enumeration max "
                    "error %.1e",
                    static_cast<unsigned long long>(transitions), static_cast<unsigned long long>(mismatches),
                    static_cast<unsigned long long>(violations), worst)};
}

Outcome determinism_throughput() {
    RunConfig c = measured_config();
    c.n_trials = 20'000'000;
    std::string reference;
    bool identical = true;
    for (std::uint32_t shards : {1u, 2u, 8u}) {
        c.shards = shards;
        c.threads = shards;
        const std::string s = serialized(run(c).log);
        if (reference.empty()) reference = s;
        identical = identical && s == reference;
    }
    c.shards = 1;
    c.threads = 1;
    c.n_trials = 100'000'000;
    const auto t0 = std::chrono::steady_clock::now();
    run(c);
    const double rate = static_cast<double>(c.n_trials) / seconds_since(t0);
    const bool ok = identical && rate >= 1e7;
    return {ok, fmt("logs %s across 1/2/8 shards (%zu bytes); %.3g trials/s on one core (need 1e7)",
                    identical ? "identical" : "DIFFER", reference.size(), rate)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"preparation enhancement F11", preparation_enhancement},
        {"joint-detection enhancement F1122", joint_detection_enhancement},
        {"ideal-memory ratio", ideal_memory_ratio},
        {"HOM visibility", hom_visibility},
        {"closed-form checks", closed_forms},
        {"fit recovery", fit_recovery},
        {"cross-trial peak ratio", side_peak_ratio},
        {"state-machine correctness", state_machine},
        {"determinism and throughput", determinism_throughput},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s -- %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria pass\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 4;
}
