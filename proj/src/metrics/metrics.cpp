#include "correg/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace correg::metrics {

namespace {

void check_pair(const char* op, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument(std::string(op) + ": length mismatch " +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) {
    throw std::invalid_argument(std::string(op) + ": need at least 2 samples, got " +
                                std::to_string(x.size()));
  }
}

void set_flag(bool* flag, bool v) {
  if (flag) *flag = *flag || v;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y, bool* degenerate) {
  check_pair("pearson", x, y);
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    set_flag(degenerate, true);
    return 0.0;
  }
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    // tied block occupies 1-based positions i+1 .. j+1
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y, bool* degenerate) {
  check_pair("spearman", x, y);
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry, degenerate);
}

double kendall(std::span<const double> x, std::span<const double> y, bool* degenerate) {
  check_pair("kendall", x, y);
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0) ++ties_x;
      if (dy == 0.0) ++ties_y;
      if (dx == 0.0 || dy == 0.0) continue;
      if ((dx > 0.0) == (dy > 0.0)) ++concordant;
      else ++discordant;
    }
  }
  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  const double denom =
      std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
  if (denom == 0.0) {
    set_flag(degenerate, true);
    return 0.0;
  }
  return static_cast<double>(concordant - discordant) / denom;
}

ErrorStats abs_rel_error(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("abs_rel_error: length mismatch " +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(target.size()));
  }
  if (pred.empty()) throw std::invalid_argument("abs_rel_error: empty input");
  const std::size_t n = pred.size();
  std::vector<double> ae(n), re(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (target[i] == 0.0) {
      throw std::domain_error("abs_rel_error: zero target at index " + std::to_string(i));
    }
    ae[i] = std::fabs(pred[i] - target[i]);
    re[i] = 100.0 * ae[i] / std::fabs(target[i]);
  }
  auto mean_std = [n](const std::vector<double>& v) {
    double m = 0.0;
    for (double a : v) m += a;
    m /= static_cast<double>(n);
    double s = 0.0;
    for (double a : v) s += (a - m) * (a - m);
    return std::pair<double, double>(m, std::sqrt(s / static_cast<double>(n)));
  };
  ErrorStats out;
  std::tie(out.ae_mean, out.ae_std) = mean_std(ae);
  std::tie(out.re_mean, out.re_std) = mean_std(re);
  return out;
}

MetricsReport evaluate(std::span<const double> pred, std::span<const double> target) {
  check_pair("evaluate", pred, target);
  MetricsReport r;
  r.n = pred.size();
  r.plc = pearson(pred, target, &r.degenerate);
  r.src = spearman(pred, target, &r.degenerate);
  r.klc = kendall(pred, target, &r.degenerate);
  const ErrorStats e = abs_rel_error(pred, target);
  r.ae_mean = e.ae_mean;
  r.ae_std = e.ae_std;
  r.re_mean = e.re_mean;
  r.re_std = e.re_std;
  r.residuals.reserve(r.n);
  for (std::size_t i = 0; i < r.n; ++i) r.residuals.emplace_back(pred[i], target[i]);
  return r;
}

}  // namespace correg::metrics
