#pragma once

// Plain trapezoid integrators used as independent oracles in tests. They know
// nothing about the library's quadrature code.

#include <utility>

namespace testutil {

template <typename F>
double integrate_1d(F&& f, double lo, double hi, int intervals) {
    const double h = (hi - lo) / intervals;
    double sum = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < intervals; ++i) sum += f(lo + i * h);
    return sum * h;
}

template <typename F>
double integrate_2d(F&& f, double lo, double hi, int intervals) {
    const double h = (hi - lo) / intervals;
    double sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double wi = (i == 0 || i == intervals) ? 0.5 : 1.0;
        const double x = lo + i * h;
        double row = 0.0;
        for (int j = 0; j <= intervals; ++j) {
            const double wj = (j == 0 || j == intervals) ? 0.5 : 1.0;
            row += wj * f(x, lo + j * h);
        }
        sum += wi * row;
    }
    return sum * h * h;
}

}  // namespace testutil
