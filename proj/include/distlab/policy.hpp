#pragma once

/**
 * Context-conditioned tabular softmax policies.
 *
 * A policy of order m keeps one logit row per distinct context key, where
 * the key is the last m tokens of (prompt + generated prefix), left-padded
 * with the reserved pad id. Unseen keys read as an all-zero row, i.e. the
 * uniform distribution -- rollouts may wander into contexts no update has
 * touched and the maximum-entropy default is the sane fallback.
 *
 * Policies are either mutable students or frozen teachers. Freezing is
 * enforced: mutating a frozen policy throws.
 *
 * Checkpoints serialize to a little-endian binary table (version header,
 * vocabulary, then key -> logit-row records in key order). Doubles are
 * stored bit-exactly, so save/load round-trips are lossless.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "distlab/rng.hpp"
#include "distlab/vocab.hpp"

namespace distlab {

enum class PolicyRole { student, frozen_teacher };

using LogitRow = std::vector<double>;
/// Keyed by padded context; also the shape of parameter gradients.
using LogitTable = std::map<TokenSeq, LogitRow>;

/// Softmax with temperature scaling, max-subtracted for stability.
/// Output is strictly positive and sums to 1 within 1e-12.
inline std::vector<double> softmax(const LogitRow& logits, double temperature) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("softmax: temperature must be positive");
  }
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  double zmax = logits[0];
  for (const double z : logits) zmax = std::max(zmax, z);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - zmax) / temperature);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

class TabularPolicy {
 public:
  TabularPolicy(Vocab vocab, int order, PolicyRole role = PolicyRole::student)
      : vocab_(std::move(vocab)), order_(order), role_(role) {
    if (order < 0) throw std::invalid_argument("TabularPolicy: negative order");
  }

  const Vocab& vocab() const { return vocab_; }
  int order() const { return order_; }
  PolicyRole role() const { return role_; }
  bool frozen() const { return role_ == PolicyRole::frozen_teacher; }
  const LogitTable& table() const { return table_; }

  /// Last `order` tokens of the full context, left-padded with kPadToken.
  TokenSeq context_key(const TokenSeq& context) const {
    TokenSeq key(static_cast<std::size_t>(order_), kPadToken);
    const std::size_t n = context.size();
    const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(order_));
    for (std::size_t i = 0; i < take; ++i) {
      key[static_cast<std::size_t>(order_) - take + i] = context[n - take + i];
    }
    return key;
  }

  /// Stored row for a key, or nullptr when unseen.
  const LogitRow* row(const TokenSeq& key) const {
    const auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  /// Row for mutation; creates a zero row on first touch.
  LogitRow& mutable_row(const TokenSeq& key) {
    require_mutable();
    auto it = table_.find(key);
    if (it == table_.end()) {
      it = table_.emplace(key, LogitRow(static_cast<std::size_t>(vocab_.size()), 0.0)).first;
    }
    return it->second;
  }

  /// theta <- theta - lr * grad, row by row in key order.
  void apply_gradient(const LogitTable& grad, double learning_rate) {
    require_mutable();
    for (const auto& [key, g] : grad) {
      LogitRow& r = mutable_row(key);
      if (g.size() != r.size()) {
        throw std::invalid_argument("apply_gradient: row width mismatch");
      }
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= learning_rate * g[i];
    }
  }

  /// Snapshot with parameters copied and mutation disabled.
  TabularPolicy frozen_copy() const {
    TabularPolicy t(vocab_, order_, PolicyRole::frozen_teacher);
    t.table_ = table_;
    return t;
  }

  /// FNV-1a over the canonical serialized bytes. Used by the trainer's
  /// teacher-immutability check.
  std::uint64_t checksum() const {
    const std::string bytes = serialize();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : bytes) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  /// Canonical binary image (see file header). Keys iterate in map order,
  /// so identical parameters always produce identical bytes.
  std::string serialize() const {
    std::string out;
    out += "DLPOL1\n";
    append_u32(out, 1);  // version
    append_u32(out, static_cast<std::uint32_t>(vocab_.size()));
    append_u32(out, static_cast<std::uint32_t>(order_));
    out.push_back(frozen() ? 'T' : 'S');
    for (int i = 0; i < vocab_.size(); ++i) {
      const std::string& sym = vocab_.symbol(i);
      append_u32(out, static_cast<std::uint32_t>(sym.size()));
      out += sym;
    }
    append_u32(out, static_cast<std::uint32_t>(vocab_.eos()));
    append_u64(out, table_.size());
    for (const auto& [key, row_v] : table_) {
      append_u32(out, static_cast<std::uint32_t>(key.size()));
      for (const TokenId t : key) append_i32(out, t);
      for (const double v : row_v) append_f64(out, v);
    }
    return out;
  }

  static TabularPolicy deserialize(const std::string& bytes) {
    std::size_t pos = 0;
    const std::string magic = "DLPOL1\n";
    if (bytes.compare(0, magic.size(), magic) != 0) {
      throw std::runtime_error("policy load: bad magic");
    }
    pos = magic.size();
    const std::uint32_t version = read_u32(bytes, pos);
    if (version != 1) throw std::runtime_error("policy load: unknown version");
    const std::uint32_t v = read_u32(bytes, pos);
    const std::uint32_t order = read_u32(bytes, pos);
    if (pos >= bytes.size()) throw std::runtime_error("policy load: truncated");
    const char role_c = bytes[pos++];
    std::vector<std::string> syms;
    syms.reserve(v);
    for (std::uint32_t i = 0; i < v; ++i) {
      const std::uint32_t len = read_u32(bytes, pos);
      if (pos + len > bytes.size()) throw std::runtime_error("policy load: truncated");
      syms.emplace_back(bytes.substr(pos, len));
      pos += len;
    }
    const std::uint32_t eos_id = read_u32(bytes, pos);
    if (eos_id >= v) throw std::runtime_error("policy load: bad eos id");
    Vocab vocab(syms, syms[eos_id]);
    TabularPolicy policy(std::move(vocab), static_cast<int>(order),
                         PolicyRole::student);
    const std::uint64_t rows = read_u64(bytes, pos);
    for (std::uint64_t r = 0; r < rows; ++r) {
      const std::uint32_t klen = read_u32(bytes, pos);
      TokenSeq key(klen);
      for (std::uint32_t i = 0; i < klen; ++i) key[i] = read_i32(bytes, pos);
      LogitRow row_v(v);
      for (std::uint32_t i = 0; i < v; ++i) row_v[i] = read_f64(bytes, pos);
      policy.table_.emplace(std::move(key), std::move(row_v));
    }
    if (role_c == 'T') policy.role_ = PolicyRole::frozen_teacher;
    return policy;
  }

 private:
  void require_mutable() const {
    if (frozen()) {
      throw std::logic_error("TabularPolicy: frozen teacher cannot be mutated");
    }
  }

  static void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void append_i32(std::string& out, std::int32_t v) {
    append_u32(out, static_cast<std::uint32_t>(v));
  }
  static void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void append_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    append_u64(out, bits);
  }
  static std::uint32_t read_u32(const std::string& b, std::size_t& pos) {
    if (pos + 4 > b.size()) throw std::runtime_error("policy load: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  static std::int32_t read_i32(const std::string& b, std::size_t& pos) {
    return static_cast<std::int32_t>(read_u32(b, pos));
  }
  static std::uint64_t read_u64(const std::string& b, std::size_t& pos) {
    if (pos + 8 > b.size()) throw std::runtime_error("policy load: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  static double read_f64(const std::string& b, std::size_t& pos) {
    const std::uint64_t bits = read_u64(b, pos);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  Vocab vocab_;
  int order_;
  PolicyRole role_;
  LogitTable table_;
};

/// Next-token distribution on the full context sequence at a temperature.
/// Unseen context keys read as the zero row (uniform output).
inline std::vector<double> next_token_dist(const TabularPolicy& policy,
                                           const TokenSeq& context,
                                           double temperature) {
  const TokenSeq key = policy.context_key(context);
  const LogitRow* row = policy.row(key);
  if (row != nullptr) return softmax(*row, temperature);
  const LogitRow zeros(static_cast<std::size_t>(policy.vocab().size()), 0.0);
  return softmax(zeros, temperature);
}

/// Gradient of log p(token | context) w.r.t. the active logit row:
/// e_token - p. Off-row entries are exactly zero and omitted.
inline LogitTable logprob_gradient(const TabularPolicy& policy,
                                   const TokenSeq& context, TokenId token) {
  if (token < 0 || token >= policy.vocab().size()) {
    throw std::invalid_argument("logprob_gradient: bad token id");
  }
  const std::vector<double> p = next_token_dist(policy, context, 1.0);
  LogitRow g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = -p[i];
  g[static_cast<std::size_t>(token)] += 1.0;
  LogitTable out;
  out.emplace(policy.context_key(context), std::move(g));
  return out;
}

enum class TerminationReason { eos, max_length };

struct Rollout {
  TokenSeq prompt;
  TokenSeq completion;
  std::vector<double> step_logprobs;  // log-prob of each sampled token
  TerminationReason terminated_by = TerminationReason::max_length;
};

/**
 * Sample a completion autoregressively at the given temperature.
 * Deterministic given the generator state. Stops after emitting EOS or
 * after max_len tokens; no token ever follows EOS.
 */
inline Rollout sample_rollout(const TabularPolicy& policy,
                              const TokenSeq& prompt, int max_len,
                              double temperature, Rng& rng) {
  if (max_len < 1) throw std::invalid_argument("sample_rollout: max_len >= 1");
  Rollout r;
  r.prompt = prompt;
  TokenSeq context = prompt;
  for (int step = 0; step < max_len; ++step) {
    const std::vector<double> p = next_token_dist(policy, context, temperature);
    const TokenId tok = static_cast<TokenId>(rng.categorical(p));
    r.completion.push_back(tok);
    r.step_logprobs.push_back(std::log(p[static_cast<std::size_t>(tok)]));
    context.push_back(tok);
    if (tok == policy.vocab().eos()) {
      r.terminated_by = TerminationReason::eos;
      return r;
    }
  }
  r.terminated_by = TerminationReason::max_length;
  return r;
}

inline void save_policy(const TabularPolicy& policy, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_policy: cannot open " + path);
  const std::string bytes = policy.serialize();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("save_policy: write failed for " + path);
}

inline TabularPolicy load_policy(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_policy: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return TabularPolicy::deserialize(bytes);
}

}  // namespace distlab
