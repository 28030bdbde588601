#ifndef DRIFTLIQ_SIM_HPP
#define DRIFTLIQ_SIM_HPP

#include <cstdint>
#include <optional>

#include "driftliq/filter.hpp"
#include "driftliq/pde.hpp"

namespace driftliq {

enum class Measure { P, Q };

enum class RuleKind { Immediate, Terminal, ZeroOrT, BoundaryRule };

/// ZeroOrT is the no-filtering benchmark: sell at 0 if E[e^{XT}] <= 1,
/// otherwise at T.
struct StoppingRule {
  RuleKind kind = RuleKind::Terminal;
  std::optional<Boundary> boundary;

  static StoppingRule immediate() { return {RuleKind::Immediate, std::nullopt}; }
  static StoppingRule terminal() { return {RuleKind::Terminal, std::nullopt}; }
  static StoppingRule zero_or_T() { return {RuleKind::ZeroOrT, std::nullopt}; }
  static StoppingRule boundary_rule(Boundary b) { return {RuleKind::BoundaryRule, std::move(b)}; }
};

struct SimConfig {
  long long n_paths = 400000;
  int n_steps = 2000;
  std::uint64_t seed = 0;
  Measure measure = Measure::P;
};

struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  long long n = 0;
};

/// E[S_tau] under the physical measure: the true drift is drawn from the
/// prior, the price path is exact GBM at grid times, and the rule sees
/// only the filtered mean f(t_k, Y_k).
Estimate simulate_value_P(const FilterModel& model, double T, const StoppingRule& rule,
                          const SimConfig& cfg);

/// E^Q[e^{int_0^tau X_hat}] with Euler paths of the conditional mean under
/// Q and a trapezoidal time integral; equals the P-value by the measure
/// change.
Estimate simulate_value_Q(const FilterModel& model, double T, const StoppingRule& rule,
                          const SimConfig& cfg);

/// V_{0,T} = max(1, E[e^{XT}]): the best sell-now-or-at-T value.
double naive_value(const FilterModel& model, double T);

/// (V_hat - V_{0,T}) / V_{0,T} with V_hat the P-measure MC value of the
/// boundary rule, or the PDE value at (0, x_hat_0) when use_pde_value.
double improvement(const FilterModel& model, double T, const Boundary& boundary,
                   const SimConfig& cfg);
double improvement_from_surface(const FilterModel& model, double T, const ValueSurface& surface);

/// Worker threads for path blocks; results are bit-identical for any
/// setting because blocks have fixed extents and are reduced in order.
void set_max_threads(int n);
int max_threads();

}  // namespace driftliq

#endif
