#include "imcgae/array.hpp"

#include <algorithm>
#include <cmath>

namespace imcgae {

bool NumArray::all_finite() const {
  for (const double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double NumArray::abs_max() const {
  double m = 0.0;
  for (const double v : data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace imcgae
