#pragma once

/**
 * Additive trajectory energies on the finite generation tree and their
 * Gibbs / soft-value correspondence with autoregressive policies.
 *
 * An EnergyModel assigns a per-step cost c(prefix, action); the energy of a
 * length-T trajectory is the sum of its step costs. Everything here works
 * by exact enumeration, guarded so oracle runs fail loudly instead of
 * hanging when V^T grows past the limit.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "distlab/policy.hpp"
#include "distlab/vocab.hpp"

namespace distlab {

inline constexpr std::uint64_t kEnumerationGuard = 1'000'000;

class EnumerationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnergyModel {
  int vocab_size = 0;
  int horizon = 0;
  /// Per-step cost of taking `action` after `prefix` (actions so far).
  std::function<double(const TokenSeq& prefix, TokenId action)> cost;
};

inline void check_enumerable(int vocab_size, int horizon) {
  if (vocab_size < 1 || horizon < 1) {
    throw std::invalid_argument("energy: vocab size and horizon must be positive");
  }
  std::uint64_t n = 1;
  for (int i = 0; i < horizon; ++i) {
    n *= static_cast<std::uint64_t>(vocab_size);
    if (n > kEnumerationGuard) {
      throw EnumerationLimitError("energy: V^T exceeds enumeration guard");
    }
  }
}

/// Energy induced by a policy on a fixed context z: per-step cost is the
/// negative conditional log-probability.
inline EnergyModel policy_energy_model(const TabularPolicy& policy,
                                       TokenSeq context_z, int horizon) {
  EnergyModel e;
  e.vocab_size = policy.vocab().size();
  e.horizon = horizon;
  e.cost = [&policy, z = std::move(context_z)](const TokenSeq& prefix,
                                               TokenId action) {
    TokenSeq ctx = z;
    ctx.insert(ctx.end(), prefix.begin(), prefix.end());
    const std::vector<double> p = next_token_dist(policy, ctx, 1.0);
    return -std::log(p[static_cast<std::size_t>(action)]);
  };
  return e;
}

/// Negative sum of per-step log-probabilities of `traj` under the policy
/// conditioned on z. Finite for softmax policies.
inline double trajectory_energy(const TabularPolicy& policy,
                                const TokenSeq& context_z,
                                const TokenSeq& traj) {
  double energy = 0.0;
  TokenSeq ctx = context_z;
  for (const TokenId a : traj) {
    const std::vector<double> p = next_token_dist(policy, ctx, 1.0);
    energy -= std::log(p[static_cast<std::size_t>(a)]);
    ctx.push_back(a);
  }
  return energy;
}

namespace detail {

inline void for_each_trajectory(int vocab_size, int horizon,
                                const std::function<void(const TokenSeq&)>& fn) {
  TokenSeq traj(static_cast<std::size_t>(horizon), 0);
  while (true) {
    fn(traj);
    int i = horizon - 1;
    while (i >= 0 && traj[static_cast<std::size_t>(i)] == vocab_size - 1) {
      traj[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) return;
    ++traj[static_cast<std::size_t>(i)];
  }
}

inline double energy_of(const EnergyModel& e, const TokenSeq& traj) {
  double total = 0.0;
  TokenSeq prefix;
  prefix.reserve(traj.size());
  for (const TokenId a : traj) {
    total += e.cost(prefix, a);
    prefix.push_back(a);
  }
  return total;
}

}  // namespace detail

/**
 * Normalized exponential of negative trajectory energy over all length-T
 * trajectories. For a policy-induced energy this equals the policy's
 * autoregressive trajectory distribution.
 */
inline std::map<TokenSeq, double> gibbs_distribution(const EnergyModel& e) {
  check_enumerable(e.vocab_size, e.horizon);
  std::map<TokenSeq, double> out;
  // Max-subtract in energy space for the same stability reasons as softmax.
  double min_energy = 0.0;
  bool first = true;
  detail::for_each_trajectory(e.vocab_size, e.horizon, [&](const TokenSeq& t) {
    const double en = detail::energy_of(e, t);
    if (first || en < min_energy) min_energy = en;
    first = false;
    out.emplace(t, en);
  });
  double z = 0.0;
  for (auto& [traj, v] : out) {
    v = std::exp(-(v - min_energy));
    z += v;
  }
  for (auto& [traj, v] : out) v /= z;
  return out;
}

/**
 * Log-partition soft value of a state (context + partial trajectory at
 * depth i): V(s) = log sum over suffixes of exp(-suffix cost), with
 * V(terminal) = 0. Computed by backward recursion over the subtree.
 */
inline double soft_value(const EnergyModel& e, const TokenSeq& prefix) {
  if (static_cast<int>(prefix.size()) > e.horizon) {
    throw std::invalid_argument("soft_value: depth beyond horizon");
  }
  check_enumerable(e.vocab_size, e.horizon);
  if (static_cast<int>(prefix.size()) == e.horizon) return 0.0;
  std::vector<double> vals(static_cast<std::size_t>(e.vocab_size));
  TokenSeq next = prefix;
  next.push_back(0);
  for (TokenId a = 0; a < e.vocab_size; ++a) {
    next.back() = a;
    vals[static_cast<std::size_t>(a)] = -e.cost(prefix, a) + soft_value(e, next);
  }
  double vmax = vals[0];
  for (const double v : vals) vmax = std::max(vmax, v);
  double sum = 0.0;
  for (const double v : vals) sum += std::exp(v - vmax);
  return vmax + std::log(sum);
}

/**
 * Conditional next-token distributions induced by an additive energy at
 * every reachable state: p(a|s) = exp(-c(s,a) + V(s') - V(s)).
 * Returned map is keyed by the action prefix identifying the state.
 */
inline std::map<TokenSeq, std::vector<double>> energy_to_policy(
    const EnergyModel& e) {
  check_enumerable(e.vocab_size, e.horizon);
  // Memoized soft values bottom-up over all prefixes.
  std::map<TokenSeq, double> value;
  const std::function<double(const TokenSeq&)> v_of =
      [&](const TokenSeq& prefix) -> double {
    if (static_cast<int>(prefix.size()) == e.horizon) return 0.0;
    const auto it = value.find(prefix);
    if (it != value.end()) return it->second;
    std::vector<double> vals(static_cast<std::size_t>(e.vocab_size));
    TokenSeq next = prefix;
    next.push_back(0);
    for (TokenId a = 0; a < e.vocab_size; ++a) {
      next.back() = a;
      vals[static_cast<std::size_t>(a)] = -e.cost(prefix, a) + v_of(next);
    }
    double vmax = vals[0];
    for (const double v : vals) vmax = std::max(vmax, v);
    double sum = 0.0;
    for (const double v : vals) sum += std::exp(v - vmax);
    const double res = vmax + std::log(sum);
    value.emplace(prefix, res);
    return res;
  };

  std::map<TokenSeq, std::vector<double>> out;
  const std::function<void(const TokenSeq&)> walk = [&](const TokenSeq& prefix) {
    if (static_cast<int>(prefix.size()) == e.horizon) return;
    const double vs = v_of(prefix);
    std::vector<double> cond(static_cast<std::size_t>(e.vocab_size));
    TokenSeq next = prefix;
    next.push_back(0);
    for (TokenId a = 0; a < e.vocab_size; ++a) {
      next.back() = a;
      cond[static_cast<std::size_t>(a)] =
          std::exp(-e.cost(prefix, a) + v_of(next) - vs);
    }
    out.emplace(prefix, std::move(cond));
    for (TokenId a = 0; a < e.vocab_size; ++a) {
      next.back() = a;
      walk(next);
    }
  };
  walk(TokenSeq{});
  return out;
}

/// Autoregressive probability of a full trajectory under the policy.
inline double trajectory_probability(const TabularPolicy& policy,
                                     const TokenSeq& context_z,
                                     const TokenSeq& traj) {
  return std::exp(-trajectory_energy(policy, context_z, traj));
}

}  // namespace distlab
