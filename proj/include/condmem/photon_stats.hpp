#pragma once

#include "condmem/types.hpp"

namespace condmem {

/// Photon-number distribution of field 2 at the detection plane, given a herald.
/// Truncated at two photons.
struct Field2Distribution {
    double p0 = 1.0;
    double p1 = 0.0;
    double p2 = 0.0;

    /// Mean photon number P1 + 2 P2.
    double mean() const { return p1 + 2.0 * p2; }

    bool operator==(const Field2Distribution&) const = default;
};

/// w = 2 P2 / P1^2. Throws DivisionByZero when P1 == 0.
double two_photon_w(double p1, double p2);

/// P1 = pc_eff, P2 = w pc_eff^2 / 2, P0 = 1 - P1 - P2.
/// Throws InvalidParameter if any of them leaves [0, 1].
Field2Distribution conditional_distribution(double pc_eff, double w);

/// pc exp(-age / nc); amplitude decay of the stored excitation.
double retrieval_decay(double pc, double age, double nc);

/// Coherence time in microseconds for nc trials of the given duration.
double coherence_time_us(double nc, double trial_duration_ns);

/// CDF inversion of a uniform draw in [0, 1).
int sample_photon_number(const Field2Distribution& dist, double uniform);

}  // namespace condmem
