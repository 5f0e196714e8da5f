#pragma once

namespace pepf {

/// Interval at nominal confidence 1 - 2α, built from the (α, 1-α) level pair.
struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.1;

    double nominal() const noexcept { return 1.0 - 2.0 * alpha; }
    double width() const noexcept { return upper - lower; }
    bool contains(double y) const noexcept { return lower <= y && y <= upper; }
};

} // namespace pepf
