#include "cfs/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cfs {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

FactorMatrix::FactorMatrix(RequestId request_id, std::size_t n_items,
                           std::size_t p, std::vector<double> values)
    : request_id_(request_id),
      n_items_(n_items),
      p_(p),
      values_(std::move(values)) {
  if (n_items_ < 2) {
    throw ShapeError("factor matrix: n_items must be >= 2, got " +
                     std::to_string(n_items_));
  }
  if (p_ == 0) throw ShapeError("factor matrix: p must be positive");
  if (values_.size() != n_items_ * p_) {
    throw ShapeError("factor matrix: expected " +
                     std::to_string(n_items_ * p_) + " values, got " +
                     std::to_string(values_.size()));
  }
  if (!all_finite(values_)) {
    throw ValueError("factor matrix: non-finite value");
  }
}

CostVector::CostVector(std::vector<double> costs) : costs_(std::move(costs)) {
  for (double c : costs_) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ValueError("cost vector: costs must be finite and > 0");
    }
  }
}

double CostVector::total() const {
  return std::accumulate(costs_.begin(), costs_.end(), 0.0);
}

FactorMask::FactorMask(std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)) {
  for (std::uint8_t b : bits_) {
    if (b > 1) throw ValueError("factor mask: bits must be 0 or 1");
  }
}

FactorMask FactorMask::ones(std::size_t p) {
  return FactorMask(std::vector<std::uint8_t>(p, 1));
}

FactorMask FactorMask::zeros(std::size_t p) {
  return FactorMask(std::vector<std::uint8_t>(p, 0));
}

FactorMask FactorMask::from_value(std::uint32_t value, std::size_t p) {
  std::vector<std::uint8_t> bits(p, 0);
  for (std::size_t k = 0; k < p; ++k) {
    bits[k] = (value >> k) & 1u;
  }
  return FactorMask(std::move(bits));
}

std::size_t FactorMask::count() const {
  std::size_t kept = 0;
  for (std::uint8_t b : bits_) kept += b;
  return kept;
}

std::string FactorMask::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    if (bits_[k]) s[k] = '1';
  }
  return s;
}

void RankingModel::add(RequestId id, std::vector<double> weights) {
  if (weights.empty()) throw ShapeError("ranking model: empty weight vector");
  if (!all_finite(weights)) {
    throw ValueError("ranking model: non-finite weight");
  }
  if (p_ == 0) {
    p_ = weights.size();
  } else if (weights.size() != p_) {
    throw ShapeError("ranking model: weight vector length " +
                     std::to_string(weights.size()) + " != p " +
                     std::to_string(p_));
  }
  weights_[id] = std::move(weights);
}

Permutation Permutation::from_order(std::vector<std::uint32_t> order) {
  const std::size_t n = order.size();
  std::vector<std::uint32_t> rank_of(n, 0);
  std::vector<std::uint8_t> seen(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::uint32_t item = order[pos];
    if (item >= n || seen[item]) {
      throw ValueError("permutation: order is not a bijection");
    }
    seen[item] = 1;
    rank_of[item] = static_cast<std::uint32_t>(pos);
  }
  return Permutation{std::move(order), std::move(rank_of)};
}

CfsLossParams::CfsLossParams(double lambda_in) : lambda(lambda_in) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValueError("cfs loss: lambda must be finite and > 0");
  }
}

std::vector<double> score_items(const RankingModel& model, RequestId id,
                                const FactorMatrix& factors,
                                const FactorMask& mask) {
  const auto it = model.weights_.find(id);
  if (it == model.weights_.end()) {
    throw MissingModelError("ranking model: no weights for request " +
                            std::to_string(id));
  }
  const std::vector<double>& w = it->second;
  if (w.size() != factors.p() || mask.size() != factors.p()) {
    throw ShapeError("score_items: factor count mismatch (weights " +
                     std::to_string(w.size()) + ", mask " +
                     std::to_string(mask.size()) + ", factors " +
                     std::to_string(factors.p()) + ")");
  }
  const std::size_t n = factors.n_items();
  const std::size_t p = factors.p();
  std::vector<double> scores(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::span<const double> x = factors.row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      if (mask.test(k)) s += w[k] * x[k];
    }
    scores[j] = s;
  }
  return scores;
}

Permutation rank(std::span<const double> scores) {
  for (double s : scores) {
    if (std::isnan(s)) throw InvalidScoreError("rank: NaN score");
  }
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return scores[a] > scores[b];
                   });
  return Permutation::from_order(std::move(order));
}

namespace {

// Counts inversions of `seq` by bottom-up merge sort.
std::uint64_t count_inversions(std::vector<std::uint32_t>& seq) {
  const std::size_t n = seq.size();
  std::vector<std::uint32_t> buf(n);
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, out = lo;
      while (i < mid && j < hi) {
        if (seq[i] <= seq[j]) {
          buf[out++] = seq[i++];
        } else {
          inversions += mid - i;
          buf[out++] = seq[j++];
        }
      }
      while (i < mid) buf[out++] = seq[i++];
      while (j < hi) buf[out++] = seq[j++];
      std::copy(buf.begin() + lo, buf.begin() + hi, seq.begin() + lo);
    }
  }
  return inversions;
}

}  // namespace

double pairwise_distance(const Permutation& reference,
                         const Permutation& candidate) {
  const std::size_t n = reference.size();
  if (candidate.size() != n) {
    throw ShapeError("pairwise_distance: permutation sizes differ");
  }
  if (n < 2) {
    throw ShapeError("pairwise_distance: need at least 2 items");
  }
  // Walk items in reference preference order; an unordered pair flips
  // exactly when the candidate positions form an inversion.
  std::vector<std::uint32_t> seq(n);
  for (std::size_t i = 0; i < n; ++i) {
    seq[i] = candidate.rank_of[reference.order[i]];
  }
  const std::uint64_t flipped = count_inversions(seq);
  return 2.0 * static_cast<double>(flipped) /
         (static_cast<double>(n) * static_cast<double>(n - 1));
}

LossBreakdown cfs_loss(const FactorMatrix& factors, const RankingModel& model,
                       const CostVector& costs, const FactorMask& mask,
                       const CfsLossParams& params) {
  if (costs.size() != factors.p()) {
    throw ShapeError("cfs_loss: cost vector length != p");
  }
  const FactorMask full = FactorMask::ones(factors.p());
  const std::vector<double> full_scores =
      score_items(model, factors.request_id(), factors, full);
  const std::vector<double> masked_scores =
      score_items(model, factors.request_id(), factors, mask);
  const double distance =
      pairwise_distance(rank(full_scores), rank(masked_scores));
  double kept_cost = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask.test(k)) kept_cost += costs[k];
  }
  const double cost_term = static_cast<double>(factors.n_items()) * kept_cost;
  return LossBreakdown{distance + params.lambda * cost_term, distance,
                       cost_term};
}

}  // namespace cfs
