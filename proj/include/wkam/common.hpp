#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wkam {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Failure modes surfaced as exceptions. Report-producing operations
/// (tonelli_check, compatibility, verification) never throw; they carry
/// their findings in the returned report instead.
enum class Err {
  InvalidTime,
  PathNotFound,
  NewtonDivergence,
  ExactnessViolated,
  ConstrainedEndpoint,
  SupercriticalViolated,
  RootNotBracketed,
  BallTouchesBoundary,
  AmbiguousMaximizer,
  NotCutPoint,
  ConditionMViolated,
  InvariantViolation,
  HypothesisUnmet,
  ConfigError,
  SolverFailure,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

inline const char* err_name(Err e) {
  switch (e) {
    case Err::InvalidTime: return "InvalidTime";
    case Err::PathNotFound: return "PathNotFound";
    case Err::NewtonDivergence: return "NewtonDivergence";
    case Err::ExactnessViolated: return "ExactnessViolated";
    case Err::ConstrainedEndpoint: return "ConstrainedEndpoint";
    case Err::SupercriticalViolated: return "SupercriticalViolated";
    case Err::RootNotBracketed: return "RootNotBracketed";
    case Err::BallTouchesBoundary: return "BallTouchesBoundary";
    case Err::AmbiguousMaximizer: return "AmbiguousMaximizer";
    case Err::NotCutPoint: return "NotCutPoint";
    case Err::ConditionMViolated: return "ConditionMViolated";
    case Err::InvariantViolation: return "InvariantViolation";
    case Err::HypothesisUnmet: return "HypothesisUnmet";
    case Err::ConfigError: return "ConfigError";
    case Err::SolverFailure: return "SolverFailure";
  }
  return "Unknown";
}

/// Time-parameterized discretized curve. Nodes live in the closed domain;
/// velocity is piecewise-linear between consecutive nodes.
struct Path {
  std::vector<double> times;
  std::vector<Vec> nodes;

  std::size_t segment_count() const { return times.empty() ? 0 : times.size() - 1; }
  double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }

  double length() const {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) len += (nodes[i + 1] - nodes[i]).norm();
    return len;
  }
};

// ---------------------------------------------------------------------------
// Small numeric utilities shared by the variational modules.
// ---------------------------------------------------------------------------

/// Golden-section minimization of a unimodal f on [a, b].
template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b, double tol, int max_iter = 200) {
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol, int max_iter = 200) {
  auto [x, negfx] = golden_min([&](double t) { return -f(t); }, a, b, tol, max_iter);
  return {x, -negfx};
}

/// Root of a continuous increasing f on a geometrically grown bracket.
/// Throws RootNotBracketed when no sign change is found below x_max.
template <class F>
double bisect_increasing(F&& f, double target, double x_lo, double x_hi_start, double x_max,
                         double tol) {
  double lo = x_lo, hi = x_hi_start;
  while (f(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > x_max) fail(Err::RootNotBracketed, "no sign change up to bracket limit");
  }
  for (int it = 0; it < 200 && (hi - lo) > tol * (1.0 + hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace wkam
