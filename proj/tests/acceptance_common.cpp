#include "acceptance_common.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

namespace acceptance {

void Gate::check(const std::string& criterion, bool ok,
                 const std::string& detail) {
  if (!ok) ++failures_;
  std::printf("%s criterion %s: %s\n", ok ? "PASS" : "FAIL", criterion.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

SinusoidFit fit_sinusoid(const std::vector<double>& t,
                         const std::vector<double>& y, double omega) {
  const int n = static_cast<int>(t.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = std::cos(omega * t[i]);
    design(i, 1) = std::sin(omega * t[i]);
    design(i, 2) = 1.0;
    rhs(i) = y[i];
  }
  const Eigen::Vector3d x = design.colPivHouseholderQr().solve(rhs);
  const Eigen::VectorXd resid = rhs - design * x;
  SinusoidFit f;
  f.a = x[0];
  f.b = x[1];
  f.offset = x[2];
  f.amplitude = std::hypot(x[0], x[1]);
  f.residual_rms = std::sqrt(resid.squaredNorm() / n);
  const double ss_tot = (rhs.array() - rhs.mean()).matrix().squaredNorm();
  f.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
  return f;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out(n);
  const double l0 = std::log(lo);
  const double l1 = std::log(hi);
  for (int i = 0; i < n; ++i)
    out[i] = std::exp(l0 + (l1 - l0) * i / (n - 1.0));
  return out;
}

double mean_prefix(const std::vector<double>& v, std::size_t count) {
  const std::size_t n = count == 0 || count > v.size() ? v.size() : count;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i];
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace acceptance
