#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace conekit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Default tolerances. Exact set kinds (polyhedra, curves, products of those)
// answer membership to kAtolExact; smooth level sets to kAtolSmooth.
inline constexpr double kAtolExact = 1e-9;
inline constexpr double kAtolSmooth = 1e-6;

// Hysteresis band for three-valued limit decisions.
inline constexpr double kEpsIn = 1e-4;
inline constexpr double kEpsOut = 1e-2;

enum class Verdict { In, Out, Inconclusive };

// Estimated modulus over a shrinking radius schedule. `value` is the tail
// estimate (max of the last trace entries); DIVERGENT when the trace grows by
// a factor >= 4 across three consecutive radii or hits an infinite sample.
struct RegularityEstimate {
  std::vector<std::pair<double, double>> trace;  // (radius, estimate)
  double value = kInf;
  bool divergent = false;
  int samplesUsed = 0;
  std::string note;
};

bool divergenceRule(const std::vector<std::pair<double, double>>& trace);
double tailEstimate(const std::vector<std::pair<double, double>>& trace);

std::string to_string(Verdict v);

inline bool conclusive(Verdict v) { return v != Verdict::Inconclusive; }

// Deterministic numeric formatting used by every report writer.
std::string fmt(double v);
std::string fmt(const Vec& v);

Vec parseVec(const std::string& text);  // comma/space separated numbers

// Norm of a vector under a block structure: sum over blocks of the Euclidean
// norm of each segment. A plain R^n is the single block {n}.
double blockNorm(const Vec& v, const std::vector<int>& blocks);

// --- deterministic low-discrepancy sampling -------------------------------

uint64_t splitmix64(uint64_t x);

// Halton point in [0,1)^dim with a seed-dependent Cranley-Patterson rotation.
Vec haltonPoint(uint64_t index, int dim, uint64_t seed);

// Points in the closed unit ball of R^dim (scaled by radius around center).
std::vector<Vec> ballSamples(const Vec& center, double radius, int count,
                             uint64_t seed);

// Unit directions: all +/- axes first, then a deterministic spread (equal
// angles in R^2, Halton-Gaussian elsewhere). Always includes the axes.
std::vector<Vec> sphereDirections(int dim, int count, uint64_t seed);

double invNormalCdf(double p);

}  // namespace conekit
