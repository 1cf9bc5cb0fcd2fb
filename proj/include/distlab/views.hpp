#pragma once

/**
 * Student and teacher prompt views, and the privileged teacher
 * distributions scored on the student's own prefixes.
 *
 * The teacher is always a frozen policy. Two modes:
 *
 *   energy_tilt (default): the teacher re-scores the student context by
 *     subtracting beta_tilt * b_n(v) from the frozen policy's token
 *     energies, where b_n is a 0/1 hint profile derived from the visible
 *     part of the masked reference. Small-order tabular policies cannot
 *     literally attend to a long reference, so the tilt is the enumerable
 *     stand-in for conditioning on it.
 *
 *   long_context: the frozen policy is evaluated on the teacher view
 *     (prompt, delimited masked reference, instruction) plus the rollout
 *     prefix. Only meaningful when the context order is large enough to
 *     reach back into the reference tokens; degenerate configurations are
 *     warned about once.
 *
 * Hint profile, the documented two-tier rule (a function of visible text
 * only; zero everywhere when nothing is visible):
 *
 *   tier 1 (nonempty rollout prefix): find the longest suffix of the
 *     prefix that occurs in the visible reference tokens with at least one
 *     token following it (leftmost occurrence wins); the hint is one-hot
 *     on that next token. No such suffix -> zero row.
 *   tier 2 (empty prefix): hint every token that appears in the visible
 *     anchors' token sets.
 *
 * Tier 1 marks at most one token and an alignment never disappears when
 * more text becomes visible; tier 2 sets shrink as anchors are masked
 * away. Hiding more of the reference therefore never increases the number
 * of nonzero hints at any position.
 */

#include <cstddef>
#include <mutex>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "distlab/masking.hpp"
#include "distlab/policy.hpp"
#include "distlab/vocab.hpp"

namespace distlab {

inline constexpr std::string_view kRefBeginToken = "<REF>";
inline constexpr std::string_view kRefEndToken = "</REF>";
inline constexpr std::string_view kInstructionToken = "<INST>";
inline constexpr std::string_view kGapToken = "<GAP>";

struct PromptViews {
  TokenSeq student_context;  // prompt x
  TokenSeq teacher_context;  // prompt, <REF>, visible reference, </REF>, <INST>
};

enum class TeacherMode { energy_tilt, long_context };

inline std::string_view teacher_mode_name(TeacherMode m) {
  return m == TeacherMode::energy_tilt ? "energy_tilt" : "long_context";
}

inline TeacherMode teacher_mode_from_name(std::string_view name) {
  if (name == "energy_tilt") return TeacherMode::energy_tilt;
  if (name == "long_context") return TeacherMode::long_context;
  throw std::invalid_argument("unknown teacher mode '" + std::string(name) + "'");
}

struct TeacherConfig {
  TeacherMode mode = TeacherMode::energy_tilt;
  double beta_tilt = 0.5;
  const TabularPolicy* frozen = nullptr;  // never the live student object
};

/// Token form of the visible masked reference: visible characters
/// tokenized greedily, with <GAP> standing in for the hidden block.
inline TokenSeq masked_reference_tokens(const MaskedReference& masked,
                                        const Vocab& vocab) {
  TokenSeq out = vocab.tokenize(masked.visible_prefix);
  if (masked.rho > 0.0) {
    if (const auto gap = vocab.find(kGapToken)) out.push_back(*gap);
  }
  const TokenSeq suffix = vocab.tokenize(masked.visible_suffix);
  out.insert(out.end(), suffix.begin(), suffix.end());
  return out;
}

/**
 * Build the two prompt views. The teacher context embeds the visible
 * masked reference between reserved delimiter tokens, followed by the
 * instruction token. Deterministic in its inputs.
 */
inline PromptViews build_views(const TokenSeq& prompt,
                               const MaskedReference& masked,
                               const Vocab& vocab) {
  PromptViews v;
  v.student_context = prompt;
  v.teacher_context = prompt;
  v.teacher_context.push_back(vocab.require(kRefBeginToken));
  const TokenSeq ref = masked_reference_tokens(masked, vocab);
  v.teacher_context.insert(v.teacher_context.end(), ref.begin(), ref.end());
  v.teacher_context.push_back(vocab.require(kRefEndToken));
  v.teacher_context.push_back(vocab.require(kInstructionToken));
  return v;
}

/// p_S^n: the student policy on its own view at the shared temperature.
inline std::vector<double> student_dist(const TabularPolicy& student,
                                        const TokenSeq& prompt,
                                        const TokenSeq& rollout_prefix,
                                        double temperature) {
  TokenSeq ctx = prompt;
  ctx.insert(ctx.end(), rollout_prefix.begin(), rollout_prefix.end());
  return next_token_dist(student, ctx, temperature);
}

namespace detail {

/// True iff `needle` occurs in `hay` starting at `at`.
inline bool occurs_at(const TokenSeq& hay, std::size_t at,
                      const TokenSeq& needle, std::size_t needle_begin) {
  for (std::size_t i = needle_begin; i < needle.size(); ++i) {
    if (hay[at + i - needle_begin] != needle[i]) return false;
  }
  return true;
}

}  // namespace detail

/**
 * Per-position hint row b_n over the vocabulary (0/1 entries) under the
 * two-tier rule documented in the file header.
 */
inline std::vector<double> hint_profile(const MaskedReference& masked,
                                        const Vocab& vocab,
                                        const TokenSeq& rollout_prefix) {
  std::vector<double> b(static_cast<std::size_t>(vocab.size()), 0.0);
  const std::string visible = masked.visible_text();
  if (visible.empty()) return b;

  TokenSeq ref;
  {
    const auto gap = vocab.find(kGapToken);
    for (const TokenId t : masked_reference_tokens(masked, vocab)) {
      if (gap && t == *gap) continue;
      ref.push_back(t);
    }
  }
  if (ref.empty()) return b;

  if (rollout_prefix.empty()) {
    // Tier 2: tokens of the visible anchors.
    ReferenceSolution visible_ref;
    visible_ref.text = visible;
    const AnchorSet anchors = extract_anchors(visible_ref);
    for (const Anchor& a : anchors.anchors) {
      for (const TokenId t : vocab.tokenize(a.text)) {
        b[static_cast<std::size_t>(t)] = 1.0;
      }
    }
    return b;
  }

  // Tier 1: longest rollout suffix aligned inside the visible reference
  // with a following token; leftmost occurrence breaks length ties.
  const std::size_t max_len =
      std::min(rollout_prefix.size(), ref.size() > 0 ? ref.size() - 1 : 0);
  for (std::size_t len = max_len; len >= 1; --len) {
    const std::size_t suffix_begin = rollout_prefix.size() - len;
    for (std::size_t j = 0; j + len <= ref.size() - 1; ++j) {
      if (detail::occurs_at(ref, j, rollout_prefix, suffix_begin)) {
        b[static_cast<std::size_t>(ref[j + len])] = 1.0;
        return b;
      }
    }
  }
  return b;
}

namespace detail {

inline void warn_long_context_degenerate() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    std::cerr << "[distlab] warning: long_context teacher order too small to "
                 "reach the reference tokens; teacher degenerates to base\n";
  });
}

}  // namespace detail

/**
 * p_T^n: the privileged teacher distribution on the same student prefix.
 *
 * energy_tilt: E_T(v) = -log p_frozen(v) - beta_tilt * b_n(v), renormalized.
 * beta_tilt = 0 or an empty visible reference returns the frozen base
 * distribution bit-for-bit.
 */
inline std::vector<double> teacher_dist(const TeacherConfig& config,
                                        const PromptViews& views,
                                        const MaskedReference& masked,
                                        const TokenSeq& rollout_prefix,
                                        double temperature) {
  if (config.frozen == nullptr) {
    throw std::invalid_argument("teacher_dist: frozen policy required");
  }
  const TabularPolicy& frozen = *config.frozen;

  if (config.mode == TeacherMode::long_context) {
    TokenSeq base_ctx = views.student_context;
    base_ctx.insert(base_ctx.end(), rollout_prefix.begin(), rollout_prefix.end());
    if (masked.visible_text().empty()) {
      return next_token_dist(frozen, base_ctx, temperature);
    }
    TokenSeq ctx = views.teacher_context;
    ctx.insert(ctx.end(), rollout_prefix.begin(), rollout_prefix.end());
    // The last reference token sits behind </REF>, <INST> and the prefix;
    // a window of m tokens reaches it only when m >= prefix + 3.
    if (static_cast<std::size_t>(frozen.order()) < rollout_prefix.size() + 3) {
      detail::warn_long_context_degenerate();
    }
    return next_token_dist(frozen, ctx, temperature);
  }

  // energy_tilt
  TokenSeq ctx = views.student_context;
  ctx.insert(ctx.end(), rollout_prefix.begin(), rollout_prefix.end());
  std::vector<double> base = next_token_dist(frozen, ctx, temperature);
  if (config.beta_tilt == 0.0 || masked.visible_text().empty()) return base;

  const std::vector<double> b =
      hint_profile(masked, frozen.vocab(), rollout_prefix);
  bool any = false;
  for (const double v : b) {
    if (v != 0.0) {
      any = true;
      break;
    }
  }
  if (!any) return base;

  double z = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    base[i] *= std::exp(config.beta_tilt * b[i]);
    z += base[i];
  }
  for (double& v : base) v /= z;
  return base;
}

}  // namespace distlab
