#pragma once

#include <cstdint>
#include <vector>

#include "form.hpp"
#include "random.hpp"

namespace twistor_forge {

enum class CoordinateKind { inactive, periodic, polynomial };

/// Which coordinates carry data and whether they are periodic (Fourier) or
/// affine (polynomial layer).
class CoordinateProfile {
 public:
  explicit CoordinateProfile(int dim) : kinds_(static_cast<std::size_t>(dim), CoordinateKind::inactive) {}

  int dim() const { return static_cast<int>(kinds_.size()); }
  CoordinateKind operator[](std::size_t j) const { return kinds_[j]; }

  CoordinateProfile& add(const FourierScalar& s) {
    for (const auto& [mode, c] : s.terms())
      for (std::size_t j = 0; j < kinds_.size(); ++j) {
        if (mode.powers[j] != 0)
          kinds_[j] = CoordinateKind::polynomial;
        else if (mode.freq[j] != 0 && kinds_[j] == CoordinateKind::inactive)
          kinds_[j] = CoordinateKind::periodic;
      }
    return *this;
  }
  CoordinateProfile& add(const Form& f) {
    for (const auto& [m, c] : f.terms()) add(c);
    return *this;
  }

 private:
  std::vector<CoordinateKind> kinds_;
};

struct GridOptions {
  int points_per_axis = 5;
  int max_axes = 4;
  int random_points = 32;
  std::uint64_t seed = 0;
  /// Half-width of the sampled interval for polynomial (affine) coordinates.
  double affine_radius = 2.0;
};

/// Evaluation points: a uniform tensor grid over (up to max_axes) active
/// coordinates plus seeded pseudo-random points in all active coordinates.
/// Inactive coordinates are held at 0. Data without active coordinates is
/// sampled at the origin only.
inline std::vector<std::vector<double>> evaluation_grid(const CoordinateProfile& profile,
                                                        const GridOptions& opt = {}) {
  const auto d = static_cast<std::size_t>(profile.dim());
  std::vector<std::size_t> axes;
  bool any_active = false;
  for (std::size_t j = 0; j < d; ++j) {
    if (profile[j] == CoordinateKind::inactive) continue;
    any_active = true;
    if (static_cast<int>(axes.size()) < opt.max_axes) axes.push_back(j);
  }
  std::vector<std::vector<double>> points;
  if (!any_active) {
    points.emplace_back(d, 0.0);
    return points;
  }
  auto axis_value = [&](std::size_t j, int k) {
    if (profile[j] == CoordinateKind::polynomial) {
      const int m = std::max(1, opt.points_per_axis - 1);
      return -opt.affine_radius + 2.0 * opt.affine_radius * k / m;
    }
    return static_cast<double>(k) / opt.points_per_axis;
  };
  std::vector<int> counter(axes.size(), 0);
  while (true) {
    std::vector<double> p(d, 0.0);
    for (std::size_t a = 0; a < axes.size(); ++a) p[axes[a]] = axis_value(axes[a], counter[a]);
    points.push_back(std::move(p));
    std::size_t a = 0;
    while (a < axes.size() && ++counter[a] == opt.points_per_axis) counter[a++] = 0;
    if (a == axes.size()) break;
  }
  Rng rng(derive_seed(opt.seed, 0x67726964));
  for (int r = 0; r < opt.random_points; ++r) {
    std::vector<double> p(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      if (profile[j] == CoordinateKind::periodic)
        p[j] = rng.uniform();
      else if (profile[j] == CoordinateKind::polynomial)
        p[j] = rng.uniform(-opt.affine_radius, opt.affine_radius);
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace twistor_forge
