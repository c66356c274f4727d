#pragma once

#include <vector>

namespace oscnet {

/// Continuous phase state. `theta` is unwrapped (cumulative radians).
struct PhaseState {
    std::vector<double> theta;
    double t = 0.0;

    std::vector<double> wrapped() const;   // each phase mapped into [0, 2*pi)
    bool operator==(const PhaseState&) const = default;
};

/// Circle state of the pulse model. Phases live in [0, threshold) and each
/// node keeps its free-running period.
struct CircleState {
    std::vector<double> phi;
    std::vector<double> period;
    double t = 0.0;

    bool operator==(const CircleState&) const = default;
};

/// Maps an angle into [0, 2*pi).
double wrap_angle(double angle);

}  // namespace oscnet
