#include "condmem/photon_stats.hpp"

#include <cmath>

namespace condmem {

double two_photon_w(double p1, double p2) {
    if (p1 == 0.0) throw DivisionByZero("two_photon_w: P1 = 0");
    return 2.0 * p2 / (p1 * p1);
}

Field2Distribution conditional_distribution(double pc_eff, double w) {
    if (!(pc_eff >= 0.0 && pc_eff <= 1.0)) {
        throw InvalidParameter("pc_eff", "violates 0 <= pc_eff <= 1");
    }
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidParameter("w", "violates w >= 0");
    const double p2 = w * pc_eff * pc_eff / 2.0;
    const double p0 = 1.0 - pc_eff - p2;
    if (p0 < 0.0) throw InvalidParameter("w", "violates P1 + P2 <= 1");
    return {p0, pc_eff, p2};
}

double retrieval_decay(double pc, double age, double nc) {
    return pc * std::exp(-age / nc);
}

double coherence_time_us(double nc, double trial_duration_ns) {
    return nc * trial_duration_ns * 1e-3;
}

int sample_photon_number(const Field2Distribution& dist, double uniform) {
    if (uniform < dist.p0) return 0;
    if (uniform < dist.p0 + dist.p1) return 1;
    // Guards the p2 == 0 case against rounding in p0 + p1.
    return dist.p2 > 0.0 ? 2 : 1;
}

}  // namespace condmem
