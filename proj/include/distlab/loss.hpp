#pragma once

/**
 * Distillation losses on aligned per-position distribution pairs, plus the
 * analytic gradients for tabular softmax students.
 *
 * The main objective is forward KL with a pointwise upper clip: each
 * vocabulary term p_T(v) * [log p_T(v) - log p_S(v)] is capped at tau
 * before summing, and positions are averaged. The formula is implemented
 * literally: negative terms are NOT floored (totals may be negative); an
 * optional flag floors terms at zero for experiments and defaults off.
 * tau = +infinity recovers the exact forward KL.
 *
 * Targets are always treated as constants when differentiating; clipped
 * vocabulary terms contribute exactly zero gradient.
 */

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "distlab/policy.hpp"

namespace distlab {

enum class DivergenceKind { clipped_forward_kl, forward_kl, reverse_kl, js };

inline std::string_view divergence_name(DivergenceKind k) {
  switch (k) {
    case DivergenceKind::clipped_forward_kl: return "clipped_forward_kl";
    case DivergenceKind::forward_kl: return "forward_kl";
    case DivergenceKind::reverse_kl: return "reverse_kl";
    case DivergenceKind::js: return "js";
  }
  return "unknown";
}

inline DivergenceKind divergence_from_name(std::string_view name) {
  if (name == "clipped_forward_kl") return DivergenceKind::clipped_forward_kl;
  if (name == "forward_kl") return DivergenceKind::forward_kl;
  if (name == "reverse_kl") return DivergenceKind::reverse_kl;
  if (name == "js") return DivergenceKind::js;
  throw std::invalid_argument("unknown divergence '" + std::string(name) + "'");
}

struct LossConfig {
  double tau = 0.06;  // pointwise clip; +infinity disables clipping
  DivergenceKind divergence = DivergenceKind::clipped_forward_kl;
  bool floor_at_zero = false;

  LossConfig() = default;
  LossConfig(double tau_, DivergenceKind kind, bool floor = false)
      : tau(tau_), divergence(kind), floor_at_zero(floor) {
    if (!(tau_ > 0.0)) throw std::invalid_argument("LossConfig: tau must be positive");
  }
};

struct LossBreakdown {
  double total = 0.0;                 // mean over valid positions
  std::vector<double> per_position;   // per-position sums (pre-averaging)
  int clipped_terms = 0;              // vocabulary terms hit by the clip
  int valid_positions = 0;
};

/**
 * (1/N) sum_n sum_v min(p_T(v) [log p_T(v) - log p_S(v)], tau).
 * Lists must be aligned, nonempty, and normalized.
 */
inline LossBreakdown clipped_forward_kl(
    const std::vector<std::vector<double>>& targets,
    const std::vector<std::vector<double>>& students, double tau,
    bool floor_at_zero = false) {
  if (targets.empty() || targets.size() != students.size()) {
    throw std::invalid_argument("clipped_forward_kl: misaligned inputs");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("clipped_forward_kl: tau must be positive");
  LossBreakdown out;
  out.valid_positions = static_cast<int>(targets.size());
  out.per_position.reserve(targets.size());
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const auto& t = targets[n];
    const auto& s = students[n];
    if (t.size() != s.size() || t.empty()) {
      throw std::invalid_argument("clipped_forward_kl: misaligned vectors");
    }
    double pos = 0.0;
    for (std::size_t v = 0; v < t.size(); ++v) {
      double term = 0.0;
      if (t[v] > 0.0) term = t[v] * (std::log(t[v]) - std::log(s[v]));
      if (term >= tau) {
        term = tau;
        ++out.clipped_terms;
      }
      if (floor_at_zero && term < 0.0) term = 0.0;
      pos += term;
    }
    out.per_position.push_back(pos);
  }
  for (const double p : out.per_position) out.total += p;
  out.total /= static_cast<double>(out.valid_positions);
  return out;
}

/// Single-pair divergence for the variant study. All are >= 0 and zero iff
/// the inputs agree.
inline double divergence(const std::vector<double>& p_teacher,
                         const std::vector<double>& p_student,
                         DivergenceKind kind) {
  if (p_teacher.size() != p_student.size() || p_teacher.empty()) {
    throw std::invalid_argument("divergence: misaligned vectors");
  }
  const auto kl = [](const std::vector<double>& a, const std::vector<double>& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0.0) out += a[i] * (std::log(a[i]) - std::log(b[i]));
    }
    return out;
  };
  switch (kind) {
    case DivergenceKind::clipped_forward_kl:
    case DivergenceKind::forward_kl:
      return kl(p_teacher, p_student);
    case DivergenceKind::reverse_kl:
      return kl(p_student, p_teacher);
    case DivergenceKind::js: {
      std::vector<double> m(p_teacher.size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = 0.5 * (p_teacher[i] + p_student[i]);
      }
      return 0.5 * kl(p_teacher, m) + 0.5 * kl(p_student, m);
    }
  }
  throw std::logic_error("divergence: unreachable");
}

/**
 * Rollout loss on calibrated targets. For the clipped/forward-KL kinds
 * this is exactly clipped_forward_kl on (p~_T, p_S); the reverse and JS
 * variants average the per-position divergence without clipping.
 */
inline LossBreakdown rollout_loss(
    const std::vector<std::vector<double>>& calibrated_targets,
    const std::vector<std::vector<double>>& students, const LossConfig& config) {
  if (calibrated_targets.empty()) {
    throw std::invalid_argument("rollout_loss: empty valid position set");
  }
  switch (config.divergence) {
    case DivergenceKind::clipped_forward_kl:
      return clipped_forward_kl(calibrated_targets, students, config.tau,
                                config.floor_at_zero);
    case DivergenceKind::forward_kl:
      return clipped_forward_kl(calibrated_targets, students,
                                std::numeric_limits<double>::infinity(),
                                config.floor_at_zero);
    case DivergenceKind::reverse_kl:
    case DivergenceKind::js: {
      LossBreakdown out;
      out.valid_positions = static_cast<int>(calibrated_targets.size());
      for (std::size_t n = 0; n < calibrated_targets.size(); ++n) {
        out.per_position.push_back(
            divergence(calibrated_targets[n], students[n], config.divergence));
      }
      for (const double p : out.per_position) out.total += p;
      out.total /= static_cast<double>(out.valid_positions);
      return out;
    }
  }
  throw std::logic_error("rollout_loss: unreachable");
}

/**
 * Gradient of the clipped forward-KL rollout loss w.r.t. the student's
 * active logit rows, with targets held fixed.
 *
 * Per position, with U the unclipped vocabulary set and T_u = sum_{v in U}
 * t_v, the row gradient is (p * T_u - t restricted to U) / (temperature *
 * N). Rows shared across positions accumulate.
 */
inline LogitTable loss_gradient(const TabularPolicy& student,
                                const Rollout& rollout,
                                const std::vector<std::vector<double>>& targets,
                                const LossConfig& config, double temperature) {
  if (targets.size() != rollout.completion.size() || targets.empty()) {
    throw std::invalid_argument("loss_gradient: targets misaligned with rollout");
  }
  if (config.divergence != DivergenceKind::clipped_forward_kl &&
      config.divergence != DivergenceKind::forward_kl) {
    throw std::invalid_argument("loss_gradient: only forward-KL kinds supported");
  }
  const double tau = config.divergence == DivergenceKind::forward_kl
                         ? std::numeric_limits<double>::infinity()
                         : config.tau;
  const double n_positions = static_cast<double>(targets.size());
  LogitTable grad;
  TokenSeq ctx = rollout.prompt;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const std::vector<double> p = next_token_dist(student, ctx, temperature);
    const std::vector<double>& t = targets[n];
    if (t.size() != p.size()) {
      throw std::invalid_argument("loss_gradient: target width mismatch");
    }
    double unclipped_mass = 0.0;
    std::vector<char> unclipped(t.size(), 0);
    for (std::size_t v = 0; v < t.size(); ++v) {
      double term = 0.0;
      if (t[v] > 0.0) term = t[v] * (std::log(t[v]) - std::log(p[v]));
      const bool clip = term >= tau;
      const bool floored = config.floor_at_zero && term < 0.0;
      if (!clip && !floored) {
        unclipped[v] = 1;
        unclipped_mass += t[v];
      }
    }
    const TokenSeq key = student.context_key(ctx);
    auto it = grad.find(key);
    if (it == grad.end()) {
      it = grad.emplace(key, LogitRow(p.size(), 0.0)).first;
    }
    const double scale = 1.0 / (temperature * n_positions);
    for (std::size_t v = 0; v < p.size(); ++v) {
      double g = p[v] * unclipped_mass;
      if (unclipped[v] != 0) g -= t[v];
      it->second[v] += scale * g;
    }
    ctx.push_back(rollout.completion[n]);
  }
  return grad;
}

/**
 * Mean negative log-likelihood of the reference tokens under the student,
 * scored on reference prefixes (prompt + y*_{<i}) at temperature 1.
 */
inline double sft_loss(const TabularPolicy& student, const TokenSeq& prompt,
                       const TokenSeq& reference_tokens) {
  if (reference_tokens.empty()) {
    throw std::invalid_argument("sft_loss: empty reference");
  }
  double total = 0.0;
  TokenSeq ctx = prompt;
  for (const TokenId tok : reference_tokens) {
    const std::vector<double> p = next_token_dist(student, ctx, 1.0);
    total -= std::log(p[static_cast<std::size_t>(tok)]);
    ctx.push_back(tok);
  }
  return total / static_cast<double>(reference_tokens.size());
}

/// Gradient of sft_loss w.r.t. the active logit rows: (p - e_tok) / N.
inline LogitTable sft_gradient(const TabularPolicy& student,
                               const TokenSeq& prompt,
                               const TokenSeq& reference_tokens) {
  if (reference_tokens.empty()) {
    throw std::invalid_argument("sft_gradient: empty reference");
  }
  const double n = static_cast<double>(reference_tokens.size());
  LogitTable grad;
  TokenSeq ctx = prompt;
  for (const TokenId tok : reference_tokens) {
    const std::vector<double> p = next_token_dist(student, ctx, 1.0);
    const TokenSeq key = student.context_key(ctx);
    auto it = grad.find(key);
    if (it == grad.end()) {
      it = grad.emplace(key, LogitRow(p.size(), 0.0)).first;
    }
    for (std::size_t v = 0; v < p.size(); ++v) {
      it->second[v] += p[v] / n;
    }
    it->second[static_cast<std::size_t>(tok)] -= 1.0 / n;
    ctx.push_back(tok);
  }
  return grad;
}

}  // namespace distlab
