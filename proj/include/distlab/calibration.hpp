#pragma once

/**
 * Entropies, entropy ratios, the information-gain score, budgeted position
 * selection, and sparse teacher energy interpolation.
 *
 * The entropy ratio R_n = H_T/H_S is a rank statistic: a fixed budget of
 * S = ceil(f_top * |J|) positions with the largest ratios receives a
 * constant-strength geometric interpolation of the teacher toward the
 * student; everything else keeps the raw teacher target. Ties at the
 * cutoff break toward the lowest position index so runs reproduce.
 *
 * Sentinels for a (near) deterministic student: H_S below tolerance with
 * H_T above maps to +infinity (sorts above every finite ratio); both below
 * maps to 1 (neutral).
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace distlab {

inline constexpr double kEntropyNormTol = 1e-9;
inline constexpr double kEntropyFloor = 1e-9;
inline constexpr double kRatioMax = std::numeric_limits<double>::infinity();
inline constexpr double kRatioNeutral = 1.0;

/// Shannon entropy -sum p log p with 0 log 0 = 0. Input must be normalized
/// within kEntropyNormTol and nonnegative.
inline double entropy(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("entropy: empty vector");
  double sum = 0.0;
  for (const double v : p) {
    if (v < 0.0) throw std::invalid_argument("entropy: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kEntropyNormTol) {
    throw std::invalid_argument("entropy: input not normalized");
  }
  double h = 0.0;
  for (const double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::max(h, 0.0);
}

/// H_T / H_S with the sentinel rules above. Negative entropies are errors.
inline double entropy_ratio(double h_teacher, double h_student) {
  if (h_teacher < 0.0 || h_student < 0.0) {
    throw std::invalid_argument("entropy_ratio: negative entropy");
  }
  if (h_student <= kEntropyFloor) {
    return h_teacher <= kEntropyFloor ? kRatioNeutral : kRatioMax;
  }
  return h_teacher / h_student;
}

/// Signed differential-entropy reduction of applying interpolation
/// strength k at a position with entropy ratio R:
///   dI = 1/2 * log(1 - k + k * R^gamma).
/// Strictly increasing in R; sign matches sign(R - 1).
inline double information_gain(double ratio, double k, double gamma) {
  if (!(ratio > 0.0)) throw std::invalid_argument("information_gain: R must be positive");
  if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("information_gain: k in (0,1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("information_gain: gamma positive");
  return 0.5 * std::log(1.0 - k + k * std::pow(ratio, gamma));
}

/// Aligned per-position distribution pair with derived statistics.
struct TokenDistPair {
  int position = 0;  // 1-based rollout position
  std::vector<double> student;         // p_S
  std::vector<double> teacher;         // p_T
  std::vector<double> student_energy;  // -log p_S
  std::vector<double> teacher_energy;  // -log p_T
  double student_entropy = 0.0;
  double teacher_entropy = 0.0;
  double ratio = 1.0;  // R_n (may be the +inf sentinel)
};

inline TokenDistPair make_dist_pair(int position,
                                    std::vector<double> student,
                                    std::vector<double> teacher) {
  if (student.size() != teacher.size() || student.empty()) {
    throw std::invalid_argument("make_dist_pair: misaligned vectors");
  }
  TokenDistPair pair;
  pair.position = position;
  pair.student_energy.resize(student.size());
  pair.teacher_energy.resize(teacher.size());
  for (std::size_t i = 0; i < student.size(); ++i) {
    pair.student_energy[i] = -std::log(student[i]);
    pair.teacher_energy[i] = -std::log(teacher[i]);
  }
  pair.student_entropy = entropy(student);
  pair.teacher_entropy = entropy(teacher);
  pair.ratio = entropy_ratio(pair.teacher_entropy, pair.student_entropy);
  pair.student = std::move(student);
  pair.teacher = std::move(teacher);
  return pair;
}

struct CalibrationConfig {
  double k_base = 0.03;
  double f_top = 0.03;
  double gamma = 1.0;       // diagnostic only; never changes the selection
  double temperature = 1.1;
};

struct CalibrationPlan {
  std::vector<int> valid_positions;  // J
  std::size_t budget = 0;            // S
  std::vector<int> selected;         // I, ascending positions
  std::vector<double> delta_i;       // per valid position, J order

  bool is_selected(int position) const {
    return std::binary_search(selected.begin(), selected.end(), position);
  }
};

/**
 * Pick the S = ceil(f_top * |J|) positions with the largest entropy
 * ratios. delta_i carries the diagnostic information gain per position
 * (zero when k_base = 0, where the formula degenerates).
 */
inline CalibrationPlan select_positions(const std::vector<TokenDistPair>& pairs,
                                        double f_top, double k_base = 0.03,
                                        double gamma = 1.0) {
  if (!(f_top >= 0.0 && f_top <= 1.0)) {
    throw std::invalid_argument("select_positions: f_top outside [0,1]");
  }
  if (pairs.empty() && f_top > 0.0) {
    throw std::invalid_argument("select_positions: empty position set");
  }
  CalibrationPlan plan;
  plan.valid_positions.reserve(pairs.size());
  for (const TokenDistPair& p : pairs) plan.valid_positions.push_back(p.position);

  plan.delta_i.resize(pairs.size(), 0.0);
  if (k_base > 0.0) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double r = pairs[i].ratio;
      plan.delta_i[i] = std::isinf(r)
                            ? std::numeric_limits<double>::infinity()
                            : information_gain(r, k_base, gamma);
    }
  }

  plan.budget = static_cast<std::size_t>(
      std::ceil(f_top * static_cast<double>(pairs.size())));
  plan.budget = std::min(plan.budget, pairs.size());
  if (plan.budget == 0) return plan;

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pairs[a].ratio != pairs[b].ratio) return pairs[a].ratio > pairs[b].ratio;
    return pairs[a].position < pairs[b].position;
  });
  plan.selected.reserve(plan.budget);
  for (std::size_t i = 0; i < plan.budget; ++i) {
    plan.selected.push_back(pairs[order[i]].position);
  }
  std::sort(plan.selected.begin(), plan.selected.end());
  return plan;
}

namespace detail {

/// Interpolated teacher energies. `student_sign` exists as a corruption
/// seam for the oracle suite's mutation sensitivity check; production
/// callers always pass +1.
inline std::vector<double> interpolate_energies(
    const std::vector<double>& teacher_energy,
    const std::vector<double>& student_energy, double k_base,
    double student_sign = 1.0) {
  std::vector<double> out(teacher_energy.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - k_base) * teacher_energy[i] +
             student_sign * k_base * student_energy[i];
  }
  return out;
}

inline std::vector<double> dist_from_energies(const std::vector<double>& energy) {
  double emin = energy[0];
  for (const double e : energy) emin = std::min(emin, e);
  std::vector<double> p(energy.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(-(energy[i] - emin));
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace detail

/**
 * Interpolated teacher target for one position. Unselected positions (and
 * k_base = 0) return p_T unchanged, bit-for-bit. Selected positions return
 * the normalized geometric mixture p_T^(1-k) * p_S^k.
 */
inline std::vector<double> interpolate_teacher(const TokenDistPair& pair,
                                               bool selected, double k_base) {
  if (!(k_base >= 0.0 && k_base < 1.0)) {
    throw std::invalid_argument("interpolate_teacher: k_base outside [0,1)");
  }
  if (!selected || k_base == 0.0) return pair.teacher;
  const std::vector<double> energy = detail::interpolate_energies(
      pair.teacher_energy, pair.student_energy, k_base);
  return detail::dist_from_energies(energy);
}

}  // namespace distlab
