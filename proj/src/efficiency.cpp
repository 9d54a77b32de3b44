#include "trimode/efficiency.hpp"

#include <cmath>
#include <limits>

#include "trimode/distributions.hpp"
#include "trimode/errors.hpp"

namespace trimode {

EtaScaled scale(const GsnParams& g, double eta0, double eta12) {
  for (double e : {eta0, eta12}) {
    if (!(e > 0.0) || e > 1.0) throw std::domain_error("scale: eta must lie in (0, 1]");
  }
  EtaScaled out;
  out.source = g;
  out.eta0 = eta0;
  out.eta12 = eta12;
  out.scaled = GsnParams::make(eta0 * g.b0, eta12 * g.b12,
                               std::sqrt(eta0 * eta12) * g.d012, g.modes);
  return out;
}

Eigen::ArrayX2d fano_vs_eta(const GsnParams& g, double n0, const Eigen::ArrayXd& eta_grid) {
  Eigen::ArrayX2d out(eta_grid.size(), 2);
  for (Eigen::Index i = 0; i < eta_grid.size(); ++i) {
    out(i, 0) = eta_grid[i];
    out(i, 1) = fano_closed(scale(g, eta_grid[i], eta_grid[i]).scaled, n0);
  }
  return out;
}

std::optional<double> eta_crit(const GsnParams& g, double n0) {
  auto excess = [&](double eta) { return fano_closed(scale(g, eta, eta).scaled, n0) - 1.0; };
  double lo = 1e-9, hi = 1.0;
  double flo = excess(lo), fhi = excess(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    const double fm = excess(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double eta0_crit_min(const GsnParams& g) {
  if (!(g.k012 < 0.0)) {
    throw std::domain_error("eta0_crit_min: requires k012 < 0 (no nonclassicality to preserve otherwise)");
  }
  if (!(g.b0 > 0.0)) throw std::domain_error("eta0_crit_min: requires b0 > 0");
  return -(g.b0 * g.b12 + g.k012) / (2.0 * g.k012 * g.b0);
}

Eigen::ArrayXXd fano_contour(const GsnParams& g, const Eigen::ArrayXd& eta0_grid,
                             const Eigen::ArrayXd& eta12_grid, double ceiling) {
  Eigen::ArrayXXd out(eta0_grid.size(), eta12_grid.size());
  for (Eigen::Index i = 0; i < eta0_grid.size(); ++i) {
    for (Eigen::Index j = 0; j < eta12_grid.size(); ++j) {
      const GsnParams s = scale(g, eta0_grid[i], eta12_grid[j]).scaled;
      const double a = (s.b12 + s.k012) / (1.0 + s.b0);
      const double b = s.k012 / s.b0;
      double f;
      if (std::fabs(a - b) < 1e-9 * (std::fabs(a) + std::fabs(b) + 1e-300)) {
        f = std::numeric_limits<double>::quiet_NaN();  // not determined
      } else {
        f = fano_asymptote(s);
        if (f > ceiling) f = std::numeric_limits<double>::quiet_NaN();
      }
      out(i, j) = f;
    }
  }
  return out;
}

}  // namespace trimode
