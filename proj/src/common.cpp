#include "conekit/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace conekit {

bool divergenceRule(const std::vector<std::pair<double, double>>& trace) {
  for (const auto& [r, v] : trace)
    if (!(v < kInf)) return true;
  for (size_t i = 0; i + 2 < trace.size(); ++i) {
    double a = trace[i].second, b = trace[i + 1].second, c = trace[i + 2].second;
    if (b > a && c > b && c >= 3.999 * a && a > 0) return true;
  }
  return false;
}

double tailEstimate(const std::vector<std::pair<double, double>>& trace) {
  if (trace.empty()) return kInf;
  double est = 0.0;
  size_t from = trace.size() > 3 ? trace.size() - 3 : 0;
  for (size_t i = from; i < trace.size(); ++i) est = std::max(est, trace[i].second);
  return est;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::In: return "IN";
    case Verdict::Out: return "OUT";
    default: return "INCONCLUSIVE";
  }
}

std::string fmt(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt(const Vec& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

Vec parseVec(const std::string& text) {
  std::string t = text;
  for (auto& c : t)
    if (c == ',') c = ' ';
  std::istringstream in(t);
  std::vector<double> vals;
  double x;
  while (in >> x) vals.push_back(x);
  if (!in.eof()) throw std::invalid_argument("bad vector literal: " + text);
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

double blockNorm(const Vec& v, const std::vector<int>& blocks) {
  if (blocks.empty()) return v.norm();
  double s = 0.0;
  int at = 0;
  for (int b : blocks) {
    s += v.segment(at, b).norm();
    at += b;
  }
  if (at != v.size()) throw std::invalid_argument("blockNorm: blocks do not cover vector");
  return s;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
constexpr int kBases[12] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double haltonCoord(uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  uint64_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}
}  // namespace

Vec haltonPoint(uint64_t index, int dim, uint64_t seed) {
  Vec p(dim);
  for (int d = 0; d < dim; ++d) {
    double rot = static_cast<double>(splitmix64(seed * 1315423911ULL + d + 1)) /
                 static_cast<double>(std::numeric_limits<uint64_t>::max());
    double u = haltonCoord(index + 1, kBases[d % 12]) + rot;
    p[d] = u - std::floor(u);
  }
  return p;
}

std::vector<Vec> ballSamples(const Vec& center, double radius, int count, uint64_t seed) {
  const int dim = static_cast<int>(center.size());
  std::vector<Vec> out;
  out.reserve(count);
  uint64_t idx = 0;
  while (static_cast<int>(out.size()) < count && idx < 100000) {
    Vec u = haltonPoint(idx++, dim, seed);
    Vec p(dim);
    for (int d = 0; d < dim; ++d) p[d] = 2.0 * u[d] - 1.0;
    if (p.norm() <= 1.0) out.push_back(center + radius * p);
  }
  return out;
}

double invNormalCdf(double p) {
  // Acklam's rational approximation, adequate for sampling directions.
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("invNormalCdf domain");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

std::vector<Vec> sphereDirections(int dim, int count, uint64_t seed) {
  std::vector<Vec> dirs;
  for (int d = 0; d < dim; ++d) {
    Vec e = Vec::Zero(dim);
    e[d] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (dim == 1) return dirs;
  if (dim == 2) {
    int n = std::max(count, 8);
    for (int k = 0; k < n; ++k) {
      double th = 2.0 * M_PI * k / n;
      Vec v(2);
      v << std::cos(th), std::sin(th);
      bool axis = false;
      for (auto& a : dirs)
        if ((a - v).norm() < 1e-12) axis = true;
      if (!axis) dirs.push_back(v);
      if (static_cast<int>(dirs.size()) >= count + 2 * dim) break;
    }
    return dirs;
  }
  uint64_t idx = 0;
  while (static_cast<int>(dirs.size()) < count + 2 * dim && idx < 100000) {
    Vec u = haltonPoint(idx++, dim, seed);
    Vec g(dim);
    bool ok = true;
    for (int d = 0; d < dim; ++d) {
      double p = std::min(std::max(u[d], 1e-12), 1.0 - 1e-12);
      g[d] = invNormalCdf(p);
      if (!std::isfinite(g[d])) ok = false;
    }
    if (!ok || g.norm() < 1e-9) continue;
    dirs.push_back(g / g.norm());
  }
  return dirs;
}

}  // namespace conekit
