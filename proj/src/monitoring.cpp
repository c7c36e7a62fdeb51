#include "cepshed/monitoring.hpp"

#include <cmath>

namespace cepshed {

bool should_emit(double new_value, std::optional<double> last_reported, double threshold) {
    if (threshold <= 0) throw std::invalid_argument("update threshold must be positive");
    if (!last_reported) return true;
    double base = std::max(std::fabs(*last_reported), 1e-9);
    return std::fabs(new_value - *last_reported) / base >= threshold;
}

} // namespace cepshed
