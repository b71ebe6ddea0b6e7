#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "condmem/analytics.hpp"
#include "condmem/config.hpp"
#include "condmem/control.hpp"
#include "condmem/engine.hpp"
#include "condmem/event_log.hpp"
#include "condmem/fit.hpp"
#include "condmem/hom.hpp"
#include "condmem/photon_stats.hpp"
#include "condmem/reproduce.hpp"

namespace py = pybind11;
using namespace condmem;

namespace {

py::dict counters_dict(const RunCounters& c) {
    py::dict d;
    d["trials"] = c.trials;
    d["armed_trials"] = c.armed_trials;
    d["heralds_left"] = c.heralds_left;
    d["heralds_right"] = c.heralds_right;
    d["ready_events"] = c.ready_events;
    d["flush_events"] = c.flush_events;
    d["readout_events"] = c.readout_events;
    d["detections"] = c.detections;
    d["background_detections"] = c.background_detections;
    return d;
}

py::dict check_dict(const Check& c) {
    py::dict d;
    d["name"] = c.name;
    d["pass"] = c.pass;
    d["value"] = c.value;
    d["line"] = format_check(c);
    return d;
}

FitResult fit_arrays(const std::string& model, const std::vector<double>& x, const std::vector<double>& y,
                     std::optional<std::vector<double>> sigma, std::optional<std::vector<int>> series,
                     std::optional<std::vector<double>> initial) {
    if (x.size() != y.size() || (sigma && sigma->size() != x.size()) ||
        (series && series->size() != x.size())) {
        throw InvalidParameter("data", "x, y, sigma and series need equal lengths");
    }
    std::vector<DataPoint> data;
    for (std::size_t i = 0; i < x.size(); ++i) {
        data.push_back({x[i], y[i], sigma ? (*sigma)[i] : 0.0, series ? (*series)[i] : 0});
    }
    FitOptions options;
    options.initial = std::move(initial);
    return fit(fit_model_from_string(model), data, options);
}

}  // namespace

PYBIND11_MODULE(_condmem, m) {
    m.doc() = "Two-ensemble conditional-memory photon source simulator";
    m.attr("__version__") = kToolVersion;

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidConfig>(m, "InvalidConfig", PyExc_ValueError);
    py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("n_trials", &RunConfig::n_trials)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("shards", &RunConfig::shards)
        .def_readwrite("threads", &RunConfig::threads)
        .def("set", [](RunConfig& c, const std::string& key, py::object value) {
            apply_setting(c, key, py::str(value).cast<std::string>());
        }, py::arg("key"), py::arg("value"))
        .def("settings", [](const RunConfig& c) {
            py::dict d;
            for (const auto& [k, v] : to_settings(c)) d[py::str(k)] = v;
            return d;
        })
        .def("hash", &config_hash)
        .def("__str__", &format_config)
        .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; });

    m.def("measured_config", &measured_config, "Built-in experiment parameters");
    m.def("parse_config", [](const std::string& text) { return parse_config(text); }, py::arg("text"));
    m.def("load_config", [](const std::string& path) { return load_config(path, measured_config()); }, py::arg("path"),
          "Settings in the file override the built-in parameters");

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("value", &Estimate::value)
        .def_readonly("error", &Estimate::error)
        .def_readonly("count", &Estimate::count)
        .def_readonly("denominator", &Estimate::denominator)
        .def("__repr__", [](const Estimate& e) {
            return "Estimate(" + format_double(e.value) + " +- " + format_double(e.error) + ")";
        });

    py::class_<EventLog>(m, "EventLog")
        .def_readonly("config", &EventLog::config)
        .def("__len__", [](const EventLog& l) { return l.records.size(); })
        .def("records", [](const EventLog& l) {
            std::vector<std::string> out;
            out.reserve(l.records.size());
            for (const auto& r : l.records) out.push_back(format_record(r));
            return out;
        }, "Records in the text form of the log")
        .def("save", [](const EventLog& l, const std::string& path) { save_event_log(path, l); })
        .def("__eq__", [](const EventLog& a, const EventLog& b) { return a == b; });
    m.def("load_event_log", [](const std::string& path) { return load_event_log(path); }, py::arg("path"));

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("log", &RunResult::log)
        .def_readonly("elapsed_seconds", &RunResult::elapsed_seconds)
        .def_property_readonly("counters", [](const RunResult& r) { return counters_dict(r.counters); })
        .def("summary_json", &summary_json);

    m.def("run", &run, py::arg("config"), py::call_guard<py::gil_scoped_release>(),
          "Simulate config.n_trials trials");

    m.def("armed_trials", &armed_trials);
    m.def("estimate_p11", &estimate_p11, py::arg("log"), py::arg("n"));
    m.def("estimate_p1122", &estimate_p1122, py::arg("log"), py::arg("n"));
    m.def("estimate_p1122_expected", &estimate_p1122_expected, py::arg("log"), py::arg("n"));
    m.def("estimate_p22c", &estimate_p22c, py::arg("log"), py::arg("n"));
    m.def("estimate_p2c", [](const EventLog& log, std::uint32_t n, const std::string& det) {
        return estimate_p2c(log, n, det == "b" ? Detector::b : Detector::a);
    }, py::arg("log"), py::arg("n"), py::arg("detector") = "a");
    m.def("enhancement", [](const Estimate& at_n, const Estimate& at_1) {
        const Enhancement e = enhancement_ratio(at_n, at_1);
        return py::make_tuple(e.value, e.error);
    });
    m.def("visibility", [](const EventLog& par, const EventLog& orth, double halfwidth) {
        const Visibility v = visibility(par, orth, halfwidth);
        return py::make_tuple(v.value, v.error);
    }, py::arg("parallel"), py::arg("orthogonal"), py::arg("tau_halfwidth"));
    m.def("coincidence_histogram", [](const EventLog& log, int offset) {
        const auto h = coincidence_histogram(log, PeakSelector{offset});
        std::vector<double> centers;
        for (std::size_t i = 0; i < h.histogram.size(); ++i) centers.push_back(h.histogram.center(i));
        return py::make_tuple(centers, h.histogram.counts(), h.pairs);
    }, py::arg("log"), py::arg("offset") = 0);

    m.def("p11_exact", &p11_exact, py::arg("p1"), py::arg("n"));
    m.def("p1122_ideal", &p1122_ideal, py::arg("p1"), py::arg("pc"), py::arg("n"));
    m.def("p1122_decohered", &p1122_decohered, py::arg("p1"), py::arg("pc"), py::arg("nc"), py::arg("n"));
    m.def("enhancement_f11", &enhancement_f11, py::arg("p1"), py::arg("n"));
    m.def("enhancement_f1122", &enhancement_f1122, py::arg("p1"), py::arg("pc"), py::arg("nc"),
          py::arg("n"));
    m.def("p22c_model", &p22c_model, py::arg("pc"), py::arg("nc"), py::arg("n"));
    m.def("p2c_model", &p2c_model, py::arg("pc"), py::arg("nc"), py::arg("n"));
    m.def("visibility_from_w", &visibility_from_w, py::arg("w"));
    m.def("effective_visibility", &effective_visibility, py::arg("xi"), py::arg("w"));
    m.def("cross_trial_ratio", py::overload_cast<double, double>(&cross_trial_ratio), py::arg("p1"),
          py::arg("w"));
    m.def("coincidence_density", [](double tau, double p0, double T, double V, double dw) {
        return coincidence_density(tau, {p0, T, V, dw});
    }, py::arg("tau"), py::arg("p0"), py::arg("T"), py::arg("V") = 0.0, py::arg("delta_omega") = 0.0);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("names", &FitResult::names)
        .def_readonly("params", &FitResult::params)
        .def_readonly("errors", &FitResult::errors)
        .def_readonly("chi2", &FitResult::chi2)
        .def_readonly("dof", &FitResult::dof)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("iterations", &FitResult::iterations)
        .def("param", &FitResult::param)
        .def("error", &FitResult::error)
        .def("to_json", [](const FitResult& r) { return to_json(r); });
    m.def("fit", &fit_arrays, py::arg("model"), py::arg("x"), py::arg("y"), py::arg("sigma") = py::none(),
          py::arg("series") = py::none(), py::arg("initial") = py::none());
    m.def("mhz_to_rad_per_ns", &mhz_to_rad_per_ns);
    m.def("rad_per_ns_to_mhz", &rad_per_ns_to_mhz);

    m.def("figure_ids", &figure_ids);
    m.def("reproduce", [](const std::string& figure, double scale, unsigned threads) {
        FigureReport rep;
        {
            py::gil_scoped_release release;
            rep = reproduce(figure, scale, measured_config(), threads);
        }
        py::dict d;
        d["figure"] = rep.figure;
        d["passed"] = rep.passed();
        py::list checks;
        for (const auto& c : rep.checks) checks.append(check_dict(c));
        d["checks"] = checks;
        d["report"] = format_report(rep);
        return d;
    }, py::arg("figure"), py::arg("scale") = 0.01, py::arg("threads") = 0);
    m.def("selfcheck", [](std::uint64_t seed, unsigned threads) {
        SelfcheckReport rep;
        {
            py::gil_scoped_release release;
            rep = selfcheck(seed, threads);
        }
        py::dict d;
        d["passed"] = rep.passed();
        py::list checks;
        for (const auto& c : rep.checks) checks.append(check_dict(c));
        d["checks"] = checks;
        return d;
    }, py::arg("seed") = 1, py::arg("threads") = 0);
}
