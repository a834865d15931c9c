#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "unrealdc/evalkit.hpp"

namespace unrealdc::evalkit {

double ratio(long numerator, long denominator) {
  return static_cast<double>(numerator) / (static_cast<double>(denominator) + 1.0);
}

double ratio(std::span<const int> numerator, std::span<const int> denominator) {
  long num = 0, den = 0;
  for (const int v : numerator) num += v;
  for (const int v : denominator) den += v;
  return ratio(num, den);
}

namespace {

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

// Sorted first so the result does not depend on input order.
Moments moments(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  Moments m;
  m.n = static_cast<double>(v.size());
  double sum = 0.0;
  for (const double x : v) sum += x;
  m.mean = sum / m.n;
  double ss = 0.0;
  for (const double x : v) ss += (x - m.mean) * (x - m.mean);
  m.var = ss / (m.n - 1.0);
  return m;
}

}  // namespace

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("t-test needs at least 2 values per sample (got " +
                                std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
  }
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  TTestResult r;
  if (ma.var == 0.0 && mb.var == 0.0) {
    r.t = std::numeric_limits<double>::quiet_NaN();
    r.df = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double se2 = 0.0;
  if (kind == TTestKind::Welch) {
    const double qa = ma.var / ma.n;
    const double qb = mb.var / mb.n;
    se2 = qa + qb;
    r.df = se2 * se2 / (qa * qa / (ma.n - 1.0) + qb * qb / (mb.n - 1.0));
  } else {
    r.df = ma.n + mb.n - 2.0;
    const double pooled = ((ma.n - 1.0) * ma.var + (mb.n - 1.0) * mb.var) / r.df;
    se2 = pooled * (1.0 / ma.n + 1.0 / mb.n);
  }
  r.t = (ma.mean - mb.mean) / std::sqrt(se2);
  // Two-tailed tail of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
  r.p = boost::math::ibeta(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

}  // namespace unrealdc::evalkit
