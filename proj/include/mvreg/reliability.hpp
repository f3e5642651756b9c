#pragma once

#include <cstddef>

#include "mvreg/geometry.hpp"

namespace mvreg {

struct ReliabilityState {
    /// Running mean of the TMSEs of reliable registrations; 0 before the first.
    double m_tmse = 0.0;
    std::size_t reliable_count = 0;
    /// Current model resolution.
    double d_o = 0.0;
};

/// max(2 d_o, 1.5 m_tmse).
double reliability_threshold(const ReliabilityState& state);

/// tmse <= max(2 d_o, 1.5 m_tmse), boundary inclusive.
bool is_reliable(double tmse, const ReliabilityState& state);

/// Folds one reliable TMSE into the running mean.
ReliabilityState record_reliable(ReliabilityState state, double tmse);

/// Replaces d_o by the resolution of `model`. Throws TooFewPoints below two points.
ReliabilityState update_resolution(ReliabilityState state, const PointCloud& model);

}  // namespace mvreg
