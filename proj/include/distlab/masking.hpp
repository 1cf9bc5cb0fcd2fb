#pragma once

/**
 * Reference solutions, anchor extraction, rollout-reference overlap, the
 * affine mask-ratio schedule, and masked trace construction.
 *
 * Anchors are normalized substrings of a reference solution used as a
 * recall proxy: the marked final answer, formula-like spans, and
 * informative numbers. Definitions used here:
 *
 *   formula span: maximal whitespace-delimited run of the normalized text,
 *     trimmed of surrounding punctuation, with >= 3 characters and at least
 *     one operator from  = < > + - * / ^
 *   informative number: numeric literal ([0-9]+ with optional fraction) of
 *     >= 2 characters; single digits are near-universal noise and only
 *     count when they are the marked answer.
 *   answer markers recognized: an explicit answer field, \boxed{...} /
 *     boxed{...} content, or a trailing "#..." span (the plain-text marker
 *     used by the synthetic tasks).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "distlab/rng.hpp"
#include "distlab/text.hpp"
#include "distlab/vocab.hpp"

namespace distlab {

struct ReferenceSolution {
  std::string text;   // raw solution text
  TokenSeq tokens;    // token form over the task vocabulary (may be empty)
  std::string answer; // final answer span (may be empty)
};

enum class AnchorKind { boxed_answer, formula_span, number };

struct Anchor {
  std::string text;  // normalized
  AnchorKind kind;
};

struct AnchorSet {
  std::vector<Anchor> anchors;

  bool empty() const { return anchors.empty(); }
  std::size_t size() const { return anchors.size(); }
};

namespace detail {

inline bool is_trim_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

inline bool is_operator_char(char c) {
  return c == '=' || c == '<' || c == '>' || c == '+' || c == '-' ||
         c == '*' || c == '/' || c == '^';
}

inline void push_unique(std::vector<Anchor>& out, std::string text,
                        AnchorKind kind) {
  if (text.empty()) return;
  for (const Anchor& a : out) {
    if (a.text == text) return;
  }
  out.push_back(Anchor{std::move(text), kind});
}

/// Content of the first \boxed{...} or boxed{...} group, case-insensitive.
inline std::string find_boxed_content(std::string_view raw) {
  std::string lowered(raw);
  for (char& c : lowered) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  const std::string_view needle = "boxed{";
  const std::size_t at = lowered.find(needle);
  if (at == std::string::npos) return {};
  std::size_t pos = at + needle.size() - 1;  // points at '{'
  std::string_view content;
  std::string_view view = lowered;
  if (!text::detail::read_brace_group(view, pos, content)) return {};
  return std::string(content);
}

/// Trailing "#answer" span: content after the last '#', trimmed.
inline std::string find_marker_content(std::string_view raw) {
  const std::size_t at = raw.rfind('#');
  if (at == std::string::npos) return {};
  std::string out(raw.substr(at + 1));
  while (!out.empty() && (out.back() == '$' || out.back() == ' ' ||
                          out.back() == '\n')) {
    out.pop_back();
  }
  std::size_t start = 0;
  while (start < out.size() && out[start] == ' ') ++start;
  return out.substr(start);
}

}  // namespace detail

/**
 * Extract the anchor set of a reference: marked answer first, then formula
 * spans, then informative numbers, all normalized and deduplicated in
 * first-seen order. An empty set is a valid result.
 */
inline AnchorSet extract_anchors(const ReferenceSolution& ref) {
  AnchorSet set;

  // Final answer: explicit field, else boxed{...}, else trailing '#' span.
  std::string answer = ref.answer;
  if (answer.empty()) answer = detail::find_boxed_content(ref.text);
  if (answer.empty()) answer = detail::find_marker_content(ref.text);
  if (!answer.empty()) {
    detail::push_unique(set.anchors, text::normalize_text(answer),
                        AnchorKind::boxed_answer);
  }

  const std::string norm = text::normalize_text(ref.text);

  // Formula spans.
  std::size_t pos = 0;
  while (pos < norm.size()) {
    std::size_t end = norm.find(' ', pos);
    if (end == std::string::npos) end = norm.size();
    std::string_view run(norm.data() + pos, end - pos);
    while (!run.empty() && detail::is_trim_punct(run.front())) run.remove_prefix(1);
    while (!run.empty() && detail::is_trim_punct(run.back())) run.remove_suffix(1);
    if (run.size() >= 3 &&
        std::any_of(run.begin(), run.end(), detail::is_operator_char)) {
      detail::push_unique(set.anchors, std::string(run), AnchorKind::formula_span);
    }
    pos = end + 1;
  }

  // Informative numbers: maximal digit runs with an optional single '.'.
  pos = 0;
  while (pos < norm.size()) {
    if (std::isdigit(static_cast<unsigned char>(norm[pos])) == 0) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    bool seen_dot = false;
    while (end < norm.size()) {
      const char c = norm[end];
      if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
        ++end;
      } else if (c == '.' && !seen_dot && end + 1 < norm.size() &&
                 std::isdigit(static_cast<unsigned char>(norm[end + 1])) != 0) {
        seen_dot = true;
        ++end;
      } else {
        break;
      }
    }
    const std::string_view lit(norm.data() + pos, end - pos);
    if (lit.size() >= 2) {
      detail::push_unique(set.anchors, std::string(lit), AnchorKind::number);
    }
    pos = end;
  }

  return set;
}

/**
 * Recall-style overlap: the fraction of anchors that occur as substrings of
 * the normalized rollout text. Returns 0 when the anchor set is empty.
 */
inline double overlap_score(std::string_view rollout_text,
                            const AnchorSet& anchors) {
  if (anchors.empty()) return 0.0;
  const std::string norm = text::normalize_text(rollout_text);
  std::size_t hits = 0;
  for (const Anchor& a : anchors.anchors) {
    if (norm.find(a.text) != std::string::npos) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(anchors.size());
}

/// Affine schedule endpoints. The adaptive schedule requires a strictly
/// larger hidden ratio for aligned rollouts.
struct MaskSchedule {
  double rho_wrong = 0.30;
  double rho_correct = 0.40;

  MaskSchedule() = default;
  MaskSchedule(double wrong, double correct)
      : rho_wrong(wrong), rho_correct(correct) {
    if (!(wrong >= 0.0 && wrong < 1.0 && correct >= 0.0 && correct < 1.0)) {
      throw std::invalid_argument("MaskSchedule: ratios must lie in [0,1)");
    }
    if (!(correct > wrong)) {
      throw std::invalid_argument("MaskSchedule: rho_correct must exceed rho_wrong");
    }
  }
};

/// rho(alpha) = rho_wrong + (rho_correct - rho_wrong) * alpha.
inline double mask_ratio(double alpha, const MaskSchedule& schedule) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("mask_ratio: alpha outside [0,1]");
  }
  return schedule.rho_wrong + (schedule.rho_correct - schedule.rho_wrong) * alpha;
}

enum class MaskPlacement { suffix, prefix, middle, random_contiguous };

inline std::string_view placement_name(MaskPlacement p) {
  switch (p) {
    case MaskPlacement::suffix: return "suffix";
    case MaskPlacement::prefix: return "prefix";
    case MaskPlacement::middle: return "middle";
    case MaskPlacement::random_contiguous: return "random";
  }
  return "unknown";
}

inline MaskPlacement placement_from_name(std::string_view name) {
  if (name == "suffix") return MaskPlacement::suffix;
  if (name == "prefix") return MaskPlacement::prefix;
  if (name == "middle") return MaskPlacement::middle;
  if (name == "random" || name == "random_contiguous") {
    return MaskPlacement::random_contiguous;
  }
  throw std::invalid_argument("unknown mask placement '" + std::string(name) + "'");
}

inline constexpr std::string_view kDefaultOmissionMarker = "[...omitted...]";

/**
 * A reference with one contiguous character block hidden. The visible
 * prefix/suffix partition the original text around the hidden block; the
 * omission marker stands in for the block when rendering.
 */
struct MaskedReference {
  std::string visible_prefix;   // characters before the hidden block
  std::string visible_suffix;   // characters after the hidden block
  std::string marker = std::string(kDefaultOmissionMarker);
  MaskPlacement placement = MaskPlacement::suffix;
  double rho = 0.0;             // applied ratio
  std::size_t hidden_count = 0;
  std::size_t original_length = 0;

  std::string visible_text() const { return visible_prefix + visible_suffix; }

  /// Visible text with the marker in place of the hidden block. The marker
  /// appears exactly once when rho > 0 and never when rho = 0.
  std::string rendered() const {
    if (rho <= 0.0) return visible_prefix + visible_suffix;
    return visible_prefix + marker + visible_suffix;
  }
};

/**
 * Hide floor(rho * length) characters of the reference as one contiguous
 * block. Suffix placement hides the tail, prefix the head, middle centers
 * the block, and random_contiguous draws the start offset from the caller's
 * generator (required for that placement only, and only when the block is
 * nonempty).
 */
inline MaskedReference apply_mask(const ReferenceSolution& ref, double rho,
                                  MaskPlacement placement, Rng* rng = nullptr,
                                  std::string_view marker = kDefaultOmissionMarker) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("apply_mask: rho outside [0,1)");
  }
  const std::size_t length = ref.text.size();
  const std::size_t hidden =
      static_cast<std::size_t>(std::floor(rho * static_cast<double>(length)));

  std::size_t start = 0;
  switch (placement) {
    case MaskPlacement::suffix:
      start = length - hidden;
      break;
    case MaskPlacement::prefix:
      start = 0;
      break;
    case MaskPlacement::middle:
      start = (length - hidden) / 2;
      break;
    case MaskPlacement::random_contiguous:
      if (hidden == 0) {
        start = length;  // empty block; no draw needed
      } else {
        if (rng == nullptr) {
          throw std::invalid_argument(
              "apply_mask: random_contiguous placement needs a generator");
        }
        start = static_cast<std::size_t>(
            rng->uniform_below(static_cast<std::uint64_t>(length - hidden + 1)));
      }
      break;
  }

  MaskedReference m;
  m.visible_prefix = ref.text.substr(0, start);
  m.visible_suffix = ref.text.substr(start + hidden);
  m.marker = std::string(marker);
  m.placement = placement;
  m.rho = rho;
  m.hidden_count = hidden;
  m.original_length = length;
  return m;
}

}  // namespace distlab
