#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace spade {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

namespace detail {

// Parameter errors (bad user input) vs. domain errors (model leaves its
// region of validity, e.g. a non-positive count variance).
inline void require_param(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

inline void require_domain(bool ok, const std::string& msg) {
    if (!ok) throw std::domain_error(msg);
}

}  // namespace detail

}  // namespace spade
