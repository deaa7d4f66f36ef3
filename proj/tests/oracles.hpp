#pragma once

// Reference implementations written independently of the library, used to
// freeze expected values. They favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

/// exp(mean(unconditioned) - mean(conditioned)) with long double sums.
inline double ifd(const std::vector<double>& conditioned, const std::vector<double>& unconditioned) {
  long double sc = 0.0L, su = 0.0L;
  for (double v : conditioned) sc += v;
  for (double v : unconditioned) su += v;
  const long double n = static_cast<long double>(conditioned.size());
  return static_cast<double>(std::exp(su / n - sc / n));
}

/// max(0, d) / max(d), all zeros when no diff is positive.
inline std::vector<double> pi_dual(const std::vector<double>& diffs) {
  double best = -INFINITY;
  for (double d : diffs) best = d > best ? d : best;
  std::vector<double> out;
  for (double d : diffs) out.push_back(best > 0.0 && d > 0.0 ? d / best : 0.0);
  return out;
}

/// Score for verdict letters from the unswapped (A = base) and swapped
/// (A = candidate) orderings, read off an enumerated table.
inline double pi_llm(char first, char second) {
  static const std::map<std::pair<char, char>, double> table{
      {{'A', 'A'}, 0.5}, {{'A', 'B'}, 0.0}, {{'A', 'C'}, 0.5},  //
      {{'B', 'A'}, 1.0}, {{'B', 'B'}, 0.5}, {{'B', 'C'}, 0.5},  //
      {{'C', 'A'}, 0.5}, {{'C', 'B'}, 0.5}, {{'C', 'C'}, 0.5}};
  return table.at({first, second});
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / std::sqrt(na * nb));
}

/// Indices of the n most similar rows, best first, older (lower index)
/// first among equals. Full stable sort.
inline std::vector<std::size_t> top_n_cosine(const std::vector<double>& q, const std::vector<std::vector<double>>& rows,
                                             std::size_t n) {
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> s;
  for (const auto& r : rows) s.push_back(cosine(q, r));
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  idx.resize(std::min(n, idx.size()));
  return idx;
}

/// One evolution step on a plain vector: add beta * reward, renormalize.
inline std::vector<double> evolve(std::vector<double> p, const std::vector<double>& reward, double beta) {
  long double total = 0.0L, added = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] += beta * reward[i];
    added += beta * reward[i];
  }
  if (added == 0.0L) return p;
  for (double v : p) total += v;
  for (double& v : p) v = static_cast<double>(v / total);
  return p;
}

}  // namespace oracle
