#pragma once

/**
 * Math-text normalization.
 *
 * normalize_text lowercases, applies the v1 rewrite table below plus a few
 * structural rules, and collapses whitespace. The rule set is a fixed,
 * documented subset of common math notation; unknown commands pass through
 * verbatim. The operator is idempotent: lowercasing happens before any
 * rewriting, and no rewrite output can re-trigger a rule.
 *
 * Structural rules (balanced-brace arguments, recursively normalized):
 *   \frac{a}{b} -> (a)/(b)
 *   \boxed{a}   -> a
 *   \sqrt{a}    -> sqrt(a)
 *   \left \right -> removed
 *   $            -> removed
 *
 * The same rules ship as a versioned text resource
 * (resources/normalize_rules_v1.txt) so tests can pin exact behavior.
 */

#include <array>
#include <cctype>
#include <string>
#include <string_view>

namespace distlab::text {

inline constexpr std::string_view kRewriteTableVersion = "v1";

struct RewriteRule {
  std::string_view from;
  std::string_view to;
};

/// Simple command substitutions (applied after lowercasing).
inline constexpr std::array<RewriteRule, 10> kCommandRewrites = {{
    {"cdot", "*"},
    {"times", "*"},
    {"div", "/"},
    {"leq", "<="},
    {"le", "<="},
    {"geq", ">="},
    {"ge", ">="},
    {"neq", "!="},
    {"ne", "!="},
    {"pm", "+-"},
}};

/// UTF-8 symbol substitutions.
inline constexpr std::array<RewriteRule, 5> kSymbolRewrites = {{
    {"\xE2\x89\xA4", "<="},  // lower-or-equal sign
    {"\xE2\x89\xA5", ">="},  // greater-or-equal sign
    {"\xE2\x88\x92", "-"},   // unicode minus
    {"\xC3\x97", "*"},       // multiplication sign
    {"\xC2\xB7", "*"},       // middle dot
}};

namespace detail {

inline bool is_cmd_char(char c) { return c >= 'a' && c <= 'z'; }

/// Reads a balanced {...} group starting at pos (which must point at '{').
/// Returns the inner content and advances pos past the closing brace.
/// Malformed input returns false and leaves pos untouched.
inline bool read_brace_group(std::string_view s, std::size_t& pos,
                             std::string_view& content) {
  if (pos >= s.size() || s[pos] != '{') return false;
  int depth = 0;
  for (std::size_t i = pos; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}') {
      --depth;
      if (depth == 0) {
        content = s.substr(pos + 1, i - pos - 1);
        pos = i + 1;
        return true;
      }
    }
  }
  return false;
}

inline std::string rewrite_pass(std::string_view s);

inline void emit_command(std::string_view cmd, std::string_view s,
                         std::size_t& pos, std::string& out) {
  if (cmd == "frac") {
    std::string_view a, b;
    std::size_t p = pos;
    if (read_brace_group(s, p, a) && read_brace_group(s, p, b)) {
      out += "(" + rewrite_pass(a) + ")/(" + rewrite_pass(b) + ")";
      pos = p;
      return;
    }
  } else if (cmd == "boxed") {
    std::string_view a;
    std::size_t p = pos;
    if (read_brace_group(s, p, a)) {
      out += rewrite_pass(a);
      pos = p;
      return;
    }
  } else if (cmd == "sqrt") {
    std::string_view a;
    std::size_t p = pos;
    if (read_brace_group(s, p, a)) {
      out += "sqrt(" + rewrite_pass(a) + ")";
      pos = p;
      return;
    }
  } else if (cmd == "left" || cmd == "right") {
    return;  // stripped
  } else {
    for (const auto& rule : kCommandRewrites) {
      if (cmd == rule.from) {
        out += rule.to;
        return;
      }
    }
  }
  // Unknown (or malformed) command: pass through verbatim.
  out.push_back('\\');
  out += cmd;
}

inline std::string rewrite_pass(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    const char c = s[pos];
    if (c == '$') {
      ++pos;
      continue;
    }
    if (c == '\\') {
      std::size_t cmd_end = pos + 1;
      while (cmd_end < s.size() && is_cmd_char(s[cmd_end])) ++cmd_end;
      if (cmd_end > pos + 1) {
        const std::string_view cmd = s.substr(pos + 1, cmd_end - pos - 1);
        pos = cmd_end;
        emit_command(cmd, s, pos, out);
        continue;
      }
      out.push_back(c);
      ++pos;
      continue;
    }
    bool matched = false;
    for (const auto& rule : kSymbolRewrites) {
      if (s.compare(pos, rule.from.size(), rule.from) == 0) {
        out += rule.to;
        pos += rule.from.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    out.push_back(c);
    ++pos;
  }
  return out;
}

}  // namespace detail

inline std::string normalize_text(std::string_view input) {
  // 1. Lowercase (ASCII only; multibyte sequences pass through).
  std::string lowered(input);
  for (char& c : lowered) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  // 2. Rewrites.
  const std::string rewritten = detail::rewrite_pass(lowered);
  // 3. Whitespace collapse + trim.
  std::string out;
  out.reserve(rewritten.size());
  bool in_space = false;
  for (const char c : rewritten) {
    const bool ws = (c == ' ' || c == '\t' || c == '\r' || c == '\n');
    if (ws) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

/// Canonical rendering of the rewrite table, byte-identical to the shipped
/// resources/normalize_rules_v1.txt. Tests pin the two against each other.
inline std::string rewrite_table_resource() {
  std::string out;
  out += "# normalize_text rewrite table ";
  out += kRewriteTableVersion;
  out += "\n";
  out += "# command <TAB> replacement\n";
  for (const auto& rule : kCommandRewrites) {
    out += "\\";
    out += rule.from;
    out += "\t";
    out += rule.to;
    out += "\n";
  }
  out += "# utf8 symbol <TAB> replacement\n";
  for (const auto& rule : kSymbolRewrites) {
    out += rule.from;
    out += "\t";
    out += rule.to;
    out += "\n";
  }
  out += "# structural: \\frac{a}{b} -> (a)/(b); \\boxed{a} -> a; ";
  out += "\\sqrt{a} -> sqrt(a); \\left,\\right,$ removed\n";
  return out;
}

}  // namespace distlab::text
