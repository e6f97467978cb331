#include "handspan/geometry.hpp"

namespace handspan {

std::vector<double> axis_sample_params(double h, double r) {
  const int n = cylinder_axis_sample_count(h, r);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = static_cast<double>(i) / (n - 1);
  return t;
}

SegmentSamples sample_cylinder_axis(double h, double r) {
  SegmentSamples s;
  const auto params = axis_sample_params(h, r);
  s.spacing = h / (static_cast<int>(params.size()) - 1);
  for (double t : params) s.points.emplace_back(t * h, 0.0, 0.0);
  return s;
}

}  // namespace handspan
