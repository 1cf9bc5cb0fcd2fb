#pragma once

/**
 * Token vocabulary for enumerable policies.
 *
 * Tokens are short distinct symbol strings; ids are their positions in the
 * construction order. One token is the designated EOS. A reserved pad id
 * (kPadToken = -1) fills context windows left of the sequence start and is
 * never a member of the vocabulary.
 */

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace distlab {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPadToken = -1;

class Vocab {
 public:
  Vocab(std::vector<std::string> tokens, std::string_view eos)
      : tokens_(std::move(tokens)) {
    if (tokens_.size() < 2) {
      throw std::invalid_argument("Vocab: need at least 2 tokens");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) {
        throw std::invalid_argument("Vocab: empty token symbol");
      }
      const auto [it, inserted] =
          index_.emplace(tokens_[i], static_cast<TokenId>(i));
      if (!inserted) {
        throw std::invalid_argument("Vocab: duplicate token '" + tokens_[i] + "'");
      }
    }
    const auto it = index_.find(std::string(eos));
    if (it == index_.end()) {
      throw std::invalid_argument("Vocab: eos token not in vocabulary");
    }
    eos_ = it->second;
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  TokenId eos() const { return eos_; }

  const std::string& symbol(TokenId id) const {
    if (id < 0 || id >= size()) {
      throw std::out_of_range("Vocab::symbol: bad token id");
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  std::optional<TokenId> find(std::string_view symbol) const {
    const auto it = index_.find(symbol);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenId require(std::string_view symbol) const {
    const auto id = find(symbol);
    if (!id) {
      throw std::invalid_argument("Vocab: missing required token '" +
                                  std::string(symbol) + "'");
    }
    return *id;
  }

  /**
   * Greedy longest-match tokenization. Characters that start no known
   * symbol are skipped, which lets plain-text renderings with separators
   * round-trip through the token alphabet.
   */
  TokenSeq tokenize(std::string_view text) const {
    TokenSeq out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t best_len = 0;
      TokenId best_id = kPadToken;
      for (const auto& [sym, id] : index_) {
        if (sym.size() > best_len && text.compare(pos, sym.size(), sym) == 0) {
          best_len = sym.size();
          best_id = id;
        }
      }
      if (best_len == 0) {
        ++pos;  // unknown character
      } else {
        out.push_back(best_id);
        pos += best_len;
      }
    }
    return out;
  }

  /// Concatenated symbols. Pad ids render as nothing.
  std::string render(const TokenSeq& tokens) const {
    std::string out;
    for (const TokenId t : tokens) {
      if (t == kPadToken) continue;
      out += symbol(t);
    }
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> index_;
  TokenId eos_ = 0;
};

}  // namespace distlab
