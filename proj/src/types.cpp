#include "condmem/types.hpp"

#include <sstream>

namespace condmem {
namespace {

void require(bool ok, const char* field, const std::string& bound) {
    if (!ok) throw InvalidParameter(field, "violates " + bound);
}

void require_probability(double value, const char* field) {
    require(std::isfinite(value) && value >= 0.0 && value <= 1.0, field, "0 <= x <= 1");
}

}  // namespace

const EnsembleParams& validate(const EnsembleParams& p) {
    require_probability(p.p1, "p1");
    require_probability(p.pc, "pc");
    require_probability(p.qc, "qc");
    require_probability(p.q1, "q1");
    require(std::isfinite(p.w) && p.w >= 0.0, "w", "w >= 0");
    require(std::isfinite(p.g12) && p.g12 >= 0.0, "g12", "g12 >= 0");
    require(p.nc > 0.0 && !std::isnan(p.nc), "nc", "nc > 0");
    require(std::isfinite(p.background_rate) && p.background_rate >= 0.0 &&
                p.background_rate < 1.0,
            "background_rate", "0 <= x < 1");
    if (p.two_photon_probability() + p.pc > 1.0) {
        std::ostringstream msg;
        msg << "violates P2 + pc <= 1 (P2 = w pc^2/2 = " << p.two_photon_probability() << ")";
        throw InvalidParameter("w", msg.str());
    }
    return p;
}

void validate(const ControlConfig& c) {
    require(c.n_max >= 1, "n_max", "n_max >= 1");
    require(std::isfinite(c.trial_duration_ns) && c.trial_duration_ns > 0.0,
            "trial_duration_ns", "trial_duration_ns > 0");
}

void validate(const InterferenceConfig& c) {
    require_probability(c.xi, "xi");
    require(std::isfinite(c.envelope_width_ns) && c.envelope_width_ns > 0.0,
            "envelope_width_ns", "envelope_width_ns > 0");
    require(std::isfinite(c.delta_omega_rad_per_ns), "delta_omega_rad_per_ns", "finite");
    require(c.splitter_ratio > 0.0 && c.splitter_ratio < 1.0, "splitter_ratio",
            "0 < x < 1");
    require(c.pol_misalignment_offset >= 0.0 && c.pol_misalignment_offset < 1.0,
            "pol_misalignment_offset", "0 <= x < 1");
}

void validate(const AnalysisWindows& w) {
    require(w.field1_window_ns > 0.0, "field1_window_ns", "> 0");
    require(w.field2_window_ns > 0.0, "field2_window_ns", "> 0");
    require(w.conditional_field2_window_ns > 0.0, "conditional_field2_window_ns", "> 0");
    require(w.conditional_field2_window_ns <= w.field2_window_ns,
            "conditional_field2_window_ns", "conditional window inside field-2 window");
    require(w.tau_integration_halfwidth_ns > 0.0, "tau_integration_halfwidth_ns", "> 0");
}

void validate(const RunConfig& c) {
    for (const auto& e : c.ensembles) validate(e);
    validate(c.control);
    validate(c.interference);
    validate(c.windows);
    require(c.shards >= 1, "shards", "shards >= 1");
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::none: return "none";
        case EventKind::ready: return "ready";
        case EventKind::flush_left: return "flush_l";
        case EventKind::flush_right: return "flush_r";
        case EventKind::readout: return "readout";
    }
    return "?";
}

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::conditional: return "conditional";
        case RunMode::baseline: return "baseline";
        case RunMode::wavepacket: return "wavepacket";
    }
    return "?";
}

const char* to_string(Polarization pol) {
    return pol == Polarization::parallel ? "parallel" : "orthogonal";
}

const char* to_string(Ensemble e) { return e == Ensemble::left ? "left" : "right"; }

}  // namespace condmem
