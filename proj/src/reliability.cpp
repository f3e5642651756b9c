#include "mvreg/reliability.hpp"

#include <algorithm>

#include "mvreg/spatial_index.hpp"

namespace mvreg {

double reliability_threshold(const ReliabilityState& state) {
    return std::max(2.0 * state.d_o, 1.5 * state.m_tmse);
}

bool is_reliable(double tmse, const ReliabilityState& state) {
    return tmse <= reliability_threshold(state);
}

ReliabilityState record_reliable(ReliabilityState state, double tmse) {
    const auto k = static_cast<double>(state.reliable_count);
    state.m_tmse = (state.m_tmse * k + tmse) / (k + 1.0);
    ++state.reliable_count;
    return state;
}

ReliabilityState update_resolution(ReliabilityState state, const PointCloud& model) {
    if (model.cols() < 2) throw TooFewPoints("update_resolution: model needs at least two points");
    state.d_o = estimate_resolution(model);
    return state;
}

}  // namespace mvreg
