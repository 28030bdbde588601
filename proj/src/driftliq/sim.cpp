#include "driftliq/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <thread>
#include <vector>

#include "driftliq/errors.hpp"
#include "driftliq/rng.hpp"

namespace driftliq {

namespace {

std::atomic<int> g_max_threads{0};  // 0 = hardware concurrency

constexpr long long kBlock = 16384;

struct BlockStats {
  double sum = 0.0;
  double sumsq = 0.0;
  long long n = 0;
};

// Fixed-extent blocks reduced in index order, so the estimate does not
// depend on how blocks were assigned to threads.
template <typename PathFn>
Estimate run_paths(long long n_paths, PathFn&& payoff_of_path) {
  const long long n_blocks = (n_paths + kBlock - 1) / kBlock;
  std::vector<BlockStats> blocks(static_cast<std::size_t>(n_blocks));

  int workers = g_max_threads.load();
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<long long>(workers, n_blocks) > 0
                            ? static_cast<int>(std::min<long long>(workers, n_blocks))
                            : 1);

  std::atomic<long long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long long b = next.fetch_add(1);
      if (b >= n_blocks) return;
      const long long begin = b * kBlock;
      const long long end = std::min(n_paths, begin + kBlock);
      BlockStats st;
      for (long long p = begin; p < end; ++p) {
        const double x = payoff_of_path(p);
        st.sum += x;
        st.sumsq += x * x;
        ++st.n;
      }
      blocks[static_cast<std::size_t>(b)] = st;
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sumsq = 0.0;
  long long n = 0;
  for (const BlockStats& st : blocks) {
    sum += st.sum;
    sumsq += st.sumsq;
    n += st.n;
  }
  Estimate est;
  est.n = n;
  est.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (sumsq - n * est.mean * est.mean) / (n - 1.0));
    est.std_err = std::sqrt(var / static_cast<double>(n));
  }
  return est;
}

void check_cfg(const SimConfig& cfg, Measure expected) {
  if (cfg.n_paths < 1 || cfg.n_steps < 1)
    raise(ErrorCode::InvalidArgument, "simulation needs n_paths >= 1 and n_steps >= 1");
  if (cfg.measure != expected)
    raise(ErrorCode::InvalidArgument, "simulation called under the wrong measure");
}

// Inverse-CDF draw of the true drift from the prior.
class PriorSampler {
public:
  explicit PriorSampler(const Prior& prior) : prior_(&prior) {
    if (prior.kind == PriorKind::Discrete || prior.kind == PriorKind::Quadrature) {
      cdf_.resize(prior.weights.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < prior.weights.size(); ++i) {
        acc += prior.weights[i];
        cdf_[i] = acc;
      }
      cdf_.back() = 1.0;
    }
  }

  double draw(CounterRng& rng) const {
    switch (prior_->kind) {
      case PriorKind::TwoPoint:
        return rng.next_uniform() < prior_->pi ? prior_->h : prior_->l;
      case PriorKind::Normal:
        return prior_->m + prior_->gamma * rng.next_normal();
      default: {
        const double u = rng.next_uniform();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t i = std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
        return prior_->points[i];
      }
    }
  }

private:
  const Prior* prior_;
  std::vector<double> cdf_;
};

// Posterior-mean evaluator specialized per prior kind; called once per
// grid time along every path.
class MeanMap {
public:
  explicit MeanMap(const FilterModel& model) : model_(&model) {
    if (model.prior.kind == PriorKind::Normal) {
      s2_ = model.sigma * model.sigma;
      g2_ = model.prior.gamma * model.prior.gamma;
    }
  }

  double operator()(double t, double y) const {
    if (model_->prior.kind == PriorKind::Normal)
      return (s2_ * model_->prior.m + g2_ * y) / (s2_ + t * g2_);
    return posterior_mean(*model_, t, y);
  }

private:
  const FilterModel* model_;
  double s2_ = 0.0, g2_ = 0.0;
};

double expected_exp_XT(const FilterModel& model, double T) {
  const Prior& p = model.prior;
  switch (p.kind) {
    case PriorKind::Normal:
      return std::exp(p.m * T + 0.5 * p.gamma * p.gamma * T * T);
    case PriorKind::TwoPoint:
      return (1.0 - p.pi) * std::exp(p.l * T) + p.pi * std::exp(p.h * T);
    default: {
      double acc = 0.0;
      for (std::size_t i = 0; i < p.points.size(); ++i)
        acc += p.weights[i] * std::exp(p.points[i] * T);
      return acc;
    }
  }
}

std::vector<double> boundary_on_sim_grid(const Boundary& b, double T, int n_steps) {
  std::vector<double> h(static_cast<std::size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k)
    h[static_cast<std::size_t>(k)] = boundary_at(b, (k == n_steps) ? T : k * (T / n_steps));
  return h;
}

}  // namespace

void set_max_threads(int n) { g_max_threads.store(n); }
int max_threads() { return g_max_threads.load(); }

Estimate simulate_value_P(const FilterModel& model, double T, const StoppingRule& rule,
                          const SimConfig& cfg) {
  check_cfg(cfg, Measure::P);
  if (!(T > 0.0)) raise(ErrorCode::InvalidArgument, "simulation needs T > 0");

  if (rule.kind == RuleKind::Immediate) return {1.0, 0.0, cfg.n_paths};
  if (rule.kind == RuleKind::ZeroOrT && expected_exp_XT(model, T) <= 1.0)
    return {1.0, 0.0, cfg.n_paths};

  const PriorSampler sampler(model.prior);
  const double sigma = model.sigma;
  const double dt = T / cfg.n_steps;
  const double sq_dt = std::sqrt(dt);

  if (rule.kind == RuleKind::Terminal || rule.kind == RuleKind::ZeroOrT) {
    const double sq_T = std::sqrt(T);
    return run_paths(cfg.n_paths, [&](long long p) {
      CounterRng rng(cfg.seed, static_cast<std::uint64_t>(p));
      const double X = sampler.draw(rng);
      return std::exp((X - 0.5 * sigma * sigma) * T + sigma * sq_T * rng.next_normal());
    });
  }

  if (!rule.boundary) raise(ErrorCode::InvalidArgument, "boundary rule without a boundary");
  const std::vector<double> h = boundary_on_sim_grid(*rule.boundary, T, cfg.n_steps);
  const MeanMap mean_map(model);
  const double x_hat_0 = model.prior_mean();
  if (x_hat_0 <= h[0]) return {1.0, 0.0, cfg.n_paths};  // stopped at t = 0, S_0 = 1

  return run_paths(cfg.n_paths, [&](long long p) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(p));
    const double X = sampler.draw(rng);
    const double drift = (X - 0.5 * sigma * sigma) * dt;
    double log_s = 0.0;
    for (int k = 1; k <= cfg.n_steps; ++k) {
      log_s += drift + sigma * sq_dt * rng.next_normal();
      if (k == cfg.n_steps) break;  // forced exercise at T
      const double t_k = k * dt;
      const double y_k = log_s + 0.5 * sigma * sigma * t_k;
      if (mean_map(t_k, y_k) <= h[static_cast<std::size_t>(k)]) break;
    }
    return std::exp(log_s);
  });
}

Estimate simulate_value_Q(const FilterModel& model, double T, const StoppingRule& rule,
                          const SimConfig& cfg) {
  check_cfg(cfg, Measure::Q);
  if (!(T > 0.0)) raise(ErrorCode::InvalidArgument, "simulation needs T > 0");

  if (rule.kind == RuleKind::Immediate) return {1.0, 0.0, cfg.n_paths};
  if (rule.kind == RuleKind::ZeroOrT && expected_exp_XT(model, T) <= 1.0)
    return {1.0, 0.0, cfg.n_paths};

  const double sigma = model.sigma;
  const double dt = T / cfg.n_steps;
  const double sq_dt = std::sqrt(dt);
  const double x_hat_0 = model.prior_mean();
  const auto [lo, hi] = model.support();
  const bool compact = std::isfinite(lo) && std::isfinite(hi);

  const bool use_boundary = rule.kind == RuleKind::BoundaryRule;
  std::vector<double> h;
  if (use_boundary) {
    if (!rule.boundary) raise(ErrorCode::InvalidArgument, "boundary rule without a boundary");
    h = boundary_on_sim_grid(*rule.boundary, T, cfg.n_steps);
    if (x_hat_0 <= h[0]) return {1.0, 0.0, cfg.n_paths};
  }

  // psi along the path: closed forms stay exact, atom priors go through a
  // precomputed table.
  const PriorKind kind = model.prior.kind;
  std::vector<double> psi_det;  // Normal: deterministic in t
  std::unique_ptr<PsiGrid> psi_grid;
  if (kind == PriorKind::Normal) {
    psi_det.resize(static_cast<std::size_t>(cfg.n_steps) + 1);
    const double s2 = sigma * sigma, g2 = model.prior.gamma * model.prior.gamma;
    for (int k = 0; k <= cfg.n_steps; ++k)
      psi_det[static_cast<std::size_t>(k)] = sigma * g2 / (s2 + (k * dt) * g2);
  } else if (kind != PriorKind::TwoPoint) {
    const double delta = 1e-6 * (hi - lo);
    psi_grid = std::make_unique<PsiGrid>(model, 0.0, T, lo + delta, hi - delta, 200, 400);
  }
  auto psi_at = [&](int k, double x) {
    if (kind == PriorKind::Normal) return psi_det[static_cast<std::size_t>(k)];
    if (kind == PriorKind::TwoPoint)
      return (model.prior.h - x) * (x - model.prior.l) / sigma;
    return (*psi_grid)(k * dt, x);
  };

  return run_paths(cfg.n_paths, [&](long long p) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(p));
    double x = x_hat_0;
    double integral = 0.0;
    for (int k = 0; k < cfg.n_steps; ++k) {
      const double psi = psi_at(k, x);
      double x_new = x + sigma * psi * dt + psi * sq_dt * rng.next_normal();
      if (compact) x_new = std::clamp(x_new, lo, hi);
      integral += 0.5 * (x + x_new) * dt;
      x = x_new;
      if (use_boundary && k + 1 < cfg.n_steps && x <= h[static_cast<std::size_t>(k + 1)])
        break;
    }
    return std::exp(integral);
  });
}

double naive_value(const FilterModel& model, double T) {
  if (!(T > 0.0)) raise(ErrorCode::InvalidArgument, "naive_value needs T > 0");
  return std::max(1.0, expected_exp_XT(model, T));
}

double improvement(const FilterModel& model, double T, const Boundary& boundary,
                   const SimConfig& cfg) {
  const double v0 = naive_value(model, T);
  const Estimate est = simulate_value_P(model, T, StoppingRule::boundary_rule(boundary), cfg);
  return (est.mean - v0) / v0;
}

double improvement_from_surface(const FilterModel& model, double T, const ValueSurface& surface) {
  const double v0 = naive_value(model, T);
  const double v_hat = value_at(surface, 0.0, model.prior_mean());
  return (v_hat - v0) / v0;
}

}  // namespace driftliq
