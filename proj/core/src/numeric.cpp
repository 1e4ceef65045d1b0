#include "sdelab/numeric.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdelab {

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGLx[8] = {
    -0.9602898564975362316835609, -0.7966664774136267395915539,
    -0.5255324099163289858177390, -0.1834346424956498049394761,
    0.1834346424956498049394761,  0.5255324099163289858177390,
    0.7966664774136267395915539,  0.9602898564975362316835609};
constexpr double kGLw[8] = {
    0.1012285362903762591525314, 0.2223810344533744705443560,
    0.3137066458778872873379622, 0.3626837833783619829651504,
    0.3626837833783619829651504, 0.3137066458778872873379622,
    0.2223810344533744705443560, 0.1012285362903762591525314};

}  // namespace

double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int n_cells) {
  if (n_cells < 1) throw std::invalid_argument("gauss_legendre: n_cells < 1");
  const double h = (b - a) / n_cells;
  double total = 0.0;
  for (int c = 0; c < n_cells; ++c) {
    const double lo = a + c * h;
    const double mid = lo + 0.5 * h;
    double cell = 0.0;
    for (int i = 0; i < 8; ++i) cell += kGLw[i] * f(mid + 0.5 * h * kGLx[i]);
    total += cell * 0.5 * h;
  }
  return total;
}

double hermite_eval(std::span<const double> xs, std::span<const double> ys,
                    std::span<const double> dys, double x) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n || dys.size() != n)
    throw std::invalid_argument("hermite_eval: bad table");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double h = xs[i + 1] - xs[i];
  const double s = (x - xs[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * ys[i] + h10 * h * dys[i] + h01 * ys[i + 1] + h11 * h * dys[i + 1];
}

std::vector<double> resample_cubic(std::span<const double> xs,
                                   std::span<const double> ys,
                                   std::span<const double> xnew) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n)
    throw std::invalid_argument("resample_cubic: bad table");
  std::vector<double> slopes(n);
  slopes[0] = (ys[1] - ys[0]) / (xs[1] - xs[0]);
  slopes[n - 1] = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    slopes[i] = (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1]);
  std::vector<double> out(xnew.size());
  for (std::size_t k = 0; k < xnew.size(); ++k)
    out[k] = hermite_eval(xs, ys, slopes, xnew[k]);
  return out;
}

double trapezoid_uniform(std::span<const double> ys, double h) {
  const std::size_t n = ys.size();
  if (n < 2) return 0.0;
  double sum = 0.5 * (ys.front() + ys.back());
  for (std::size_t i = 1; i + 1 < n; ++i) sum += ys[i];
  return sum * h;
}

std::uint64_t fnv1a(std::span<const char> bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t fnv1a(const std::string& s) {
  return fnv1a(std::span<const char>(s.data(), s.size()));
}

}  // namespace sdelab
