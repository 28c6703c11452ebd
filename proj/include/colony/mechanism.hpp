// Utility mechanism of the colony-maintenance global game.
//
// Everything here is a pure function of its arguments and is templated on the
// scalar type so the same formulas can be evaluated in double, long double or
// an autodiff scalar. Non-integer forager counts are accepted throughout: the
// equilibrium condition is evaluated at the expected count.
#ifndef COLONY_MECHANISM_HPP
#define COLONY_MECHANISM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace colony {

enum class Feedback { Negative, Positive, None };

enum class Regime { DominantForage, DominantIdle, Mixed };

inline const char* to_string(Feedback f) {
  switch (f) {
    case Feedback::Negative: return "negative";
    case Feedback::Positive: return "positive";
    case Feedback::None: return "none";
  }
  return "?";
}

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::DominantForage: return "dominant_forage";
    case Regime::DominantIdle: return "dominant_idle";
    case Regime::Mixed: return "mixed";
  }
  return "?";
}

Feedback parse_feedback(const std::string& name);

template <typename Scalar>
struct UtilityParamsT {
  Scalar c_a{1};       // foraging cost
  Scalar kappa{0.25};  // constant reward
  Scalar lambda{5.5};  // feedback gain
  Feedback feedback{Feedback::Negative};

  /// Copy of these parameters with the foraging cost replaced (heterogeneous robots).
  UtilityParamsT with_cost(Scalar cost) const {
    UtilityParamsT out = *this;
    out.c_a = cost;
    return out;
  }
};

/// Task urgency, one minus the colony energy fraction. Clamped to [0, 1].
template <typename Scalar>
class ThetaT {
 public:
  constexpr ThetaT() = default;
  explicit ThetaT(Scalar value) : value_(std::clamp(value, Scalar(0), Scalar(1))) {}

  static ThetaT from_signal(Scalar s) { return ThetaT(Scalar(1) - std::clamp(s, Scalar(0), Scalar(1))); }

  Scalar value() const { return value_; }
  Scalar signal() const { return Scalar(1) - value_; }

 private:
  Scalar value_{0};
};

/// Regime and expected number of foragers, independent of the current population.
template <typename Scalar>
struct ForagerEquilibriumT {
  Regime regime{Regime::DominantIdle};
  // Infinite in DominantForage: every robot forages regardless of population.
  Scalar expected_n{0};
};

/// Regime, expected foragers and the per-robot forage probability for a population.
template <typename Scalar>
struct EquilibriumResultT {
  Regime regime{Regime::DominantIdle};
  Scalar expected_n{0};
  Scalar probability{0};
};

struct AssumptionReport {
  bool kappa_ok = true;   // c_a - kappa <= 1
  bool lambda_ok = true;  // 0 < lambda <= e (c_a - kappa)
  std::vector<std::string> warnings;

  bool ok() const { return kappa_ok && lambda_ok; }
};

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejects structurally invalid parameters. Violations of the working
/// assumptions are not errors; see check_assumptions().
template <typename Scalar>
void validate(const UtilityParamsT<Scalar>& params) {
  if (!(params.lambda >= Scalar(0))) throw InvalidParameter("lambda must be non-negative");
  if (params.lambda == Scalar(0) && params.feedback != Feedback::None)
    throw InvalidParameter("lambda = 0 requires feedback = none");
}

template <typename Scalar>
AssumptionReport check_assumptions(const UtilityParamsT<Scalar>& params) {
  using std::exp;
  AssumptionReport report;
  const Scalar margin = params.c_a - params.kappa;
  if (margin > Scalar(1)) {
    report.kappa_ok = false;
    report.warnings.push_back("c_a - kappa = " + std::to_string(double(margin)) +
                              " exceeds 1; the mixed band may leave the signal range");
  }
  if (params.feedback != Feedback::None) {
    const Scalar bound = std::numbers::e_v<Scalar> * margin;
    if (!(params.lambda > Scalar(0)) || params.lambda > bound) {
      report.lambda_ok = false;
      report.warnings.push_back("lambda = " + std::to_string(double(params.lambda)) +
                                " outside (0, e(c_a - kappa)] = (0, " + std::to_string(double(bound)) +
                                "]; the mixed band extends below theta = 0");
    }
  }
  return report;
}

namespace detail {

template <typename Scalar>
Scalar feedback_term(Scalar n, const UtilityParamsT<Scalar>& params) {
  using std::exp;
  switch (params.feedback) {
    case Feedback::Negative: return params.lambda * exp(-(n + Scalar(1)));
    case Feedback::Positive: return params.lambda * (Scalar(1) - exp(-(n + Scalar(1))));
    case Feedback::None: return Scalar(0);
  }
  return Scalar(0);
}

}  // namespace detail

/// Payoff of taking action `forage` when `n` other robots forage.
template <typename Scalar>
Scalar utility(bool forage, Scalar n, ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params, Scalar cost) {
  const Scalar a = forage ? Scalar(1) : Scalar(0);
  return -(n + a) * cost + a * (params.kappa + detail::feedback_term(n, params) + theta.value());
}

template <typename Scalar>
Scalar utility(bool forage, Scalar n, ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params) {
  return utility(forage, n, theta, params, params.c_a);
}

/// Gain from switching idle -> forage with `n` other foragers.
template <typename Scalar>
Scalar marginal_utility(Scalar n, ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params, Scalar cost) {
  return -cost + params.kappa + detail::feedback_term(n, params) + theta.value();
}

template <typename Scalar>
Scalar marginal_utility(Scalar n, ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params) {
  return marginal_utility(n, theta, params, params.c_a);
}

/// Marginal utility as a function of an unclamped urgency. Used by the
/// sweep, which plots the affine curves beyond the [0, 1] signal range.
template <typename Scalar>
Scalar marginal_utility_raw(Scalar n, Scalar theta, const UtilityParamsT<Scalar>& params) {
  return -params.c_a + params.kappa + detail::feedback_term(n, params) + theta;
}

/// Open interval of urgency values with a mixed equilibrium. At or below
/// `first` idling is strictly dominant; at or above `second` foraging is.
template <typename Scalar>
std::pair<Scalar, Scalar> dominance_bounds(const UtilityParamsT<Scalar>& params) {
  using std::exp;
  if (params.feedback == Feedback::Positive)
    throw InvalidParameter("dominance_bounds: positive feedback inverts the bounds");
  const Scalar high = params.c_a - params.kappa;
  const Scalar gain = params.feedback == Feedback::None ? Scalar(0) : params.lambda;
  return {high - gain * exp(Scalar(-1)), high};
}

/// Forage-dominance threshold for a finite population of `population` robots,
/// where the worst case is every other robot foraging.
template <typename Scalar>
Scalar finite_threshold(Scalar population, const UtilityParamsT<Scalar>& params) {
  using std::exp;
  if (params.feedback != Feedback::Negative) throw InvalidParameter("finite_threshold requires negative feedback");
  if (population < Scalar(1)) throw InvalidParameter("finite_threshold requires a population of at least one");
  return params.c_a - params.kappa - params.lambda * exp(-population);
}

/// Expected number of foragers at the mixed equilibrium, the root of the
/// marginal utility in n. Only defined while c_a - kappa - theta > 0.
template <typename Scalar>
Scalar mixed_expected_foragers(ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params, Scalar cost) {
  using std::log;
  const Scalar gap = cost - params.kappa - theta.value();
  if (!(gap > Scalar(0)))
    throw InvalidParameter("mixed_expected_foragers: c_a - kappa - theta must be positive (forage-dominant regime)");
  if (!(params.lambda > Scalar(0))) throw InvalidParameter("mixed_expected_foragers: lambda must be positive");
  return -log(gap / params.lambda) - Scalar(1);
}

template <typename Scalar>
ForagerEquilibriumT<Scalar> equilibrium_foragers(ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params,
                                                 Scalar cost) {
  using std::exp;
  if (params.feedback != Feedback::Negative) throw InvalidParameter("equilibrium_foragers requires negative feedback");
  const Scalar high = cost - params.kappa;
  const Scalar low = high - params.lambda * exp(Scalar(-1));
  if (theta.value() >= high) return {Regime::DominantForage, std::numeric_limits<Scalar>::infinity()};
  if (theta.value() <= low) return {Regime::DominantIdle, Scalar(0)};
  return {Regime::Mixed, mixed_expected_foragers(theta, params, cost)};
}

template <typename Scalar>
ForagerEquilibriumT<Scalar> equilibrium_foragers(ThetaT<Scalar> theta, const UtilityParamsT<Scalar>& params) {
  return equilibrium_foragers(theta, params, params.c_a);
}

/// Probability that an idle robot starts foraging this round, given `n_star`
/// current foragers out of `population` active robots.
///
/// Negative feedback: the mixed strategy whose binomial expectation lands on
/// the equilibrium count. Checked in order: forage dominance, indifference
/// (marginal utility <= 0), saturated population, then the closed form,
/// clamped to [0, 1].
///
/// Positive / no feedback: the threshold strategy, 1 when the marginal
/// utility at the current count is positive and 0 otherwise.
template <typename Scalar>
Scalar forage_probability(ThetaT<Scalar> theta, Scalar n_star, Scalar population, const UtilityParamsT<Scalar>& params,
                          Scalar cost) {
  const Scalar gain = marginal_utility(n_star, theta, params, cost);
  if (params.feedback != Feedback::Negative) return gain > Scalar(0) ? Scalar(1) : Scalar(0);

  if (theta.value() >= cost - params.kappa) return Scalar(1);
  if (gain <= Scalar(0)) return Scalar(0);
  if (n_star >= population) return Scalar(1);
  const Scalar expected = mixed_expected_foragers(theta, params, cost);
  return std::clamp((expected - n_star) / (population - n_star), Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar forage_probability(ThetaT<Scalar> theta, Scalar n_star, Scalar population,
                          const UtilityParamsT<Scalar>& params) {
  return forage_probability(theta, n_star, population, params, params.c_a);
}

/// Full equilibrium diagnostics for a population. Requires negative feedback.
template <typename Scalar>
EquilibriumResultT<Scalar> evaluate_equilibrium(ThetaT<Scalar> theta, Scalar n_star, Scalar population,
                                                const UtilityParamsT<Scalar>& params) {
  const auto eq = equilibrium_foragers(theta, params);
  EquilibriumResultT<Scalar> out{eq.regime, eq.expected_n, Scalar(0)};
  switch (eq.regime) {
    case Regime::DominantForage: out.probability = Scalar(1); break;
    case Regime::DominantIdle: out.probability = Scalar(0); break;
    case Regime::Mixed: out.probability = forage_probability(theta, n_star, population, params); break;
  }
  return out;
}

using UtilityParams = UtilityParamsT<double>;
using Theta = ThetaT<double>;
using ForagerEquilibrium = ForagerEquilibriumT<double>;
using EquilibriumResult = EquilibriumResultT<double>;

/// The mechanism constants used for the colony experiments.
inline UtilityParams default_params() { return {1.0, 0.25, 5.5, Feedback::Negative}; }

}  // namespace colony

#endif  // COLONY_MECHANISM_HPP
