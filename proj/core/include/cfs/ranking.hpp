#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cfs/error.hpp"

namespace cfs {

using RequestId = std::int64_t;

/// Dense n_items x p matrix of factor values for one search request.
/// Immutable after construction; all values are checked finite.
class FactorMatrix {
 public:
  FactorMatrix(RequestId request_id, std::size_t n_items, std::size_t p,
               std::vector<double> values);

  RequestId request_id() const { return request_id_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t p() const { return p_; }

  double at(std::size_t item, std::size_t factor) const {
    return values_[item * p_ + factor];
  }
  std::span<const double> row(std::size_t item) const {
    return {values_.data() + item * p_, p_};
  }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const FactorMatrix&) const = default;

 private:
  RequestId request_id_;
  std::size_t n_items_;
  std::size_t p_;
  std::vector<double> values_;  // row-major, n_items rows
};

/// Per-factor compute costs in abstract milliseconds. Strictly positive.
class CostVector {
 public:
  CostVector() = default;
  explicit CostVector(std::vector<double> costs);

  std::size_t size() const { return costs_.size(); }
  double operator[](std::size_t k) const { return costs_[k]; }
  const std::vector<double>& values() const { return costs_; }
  double total() const;

  bool operator==(const CostVector&) const = default;

 private:
  std::vector<double> costs_;
};

/// Binary indicator over the p factors: bits[k] == 1 keeps factor k.
class FactorMask {
 public:
  explicit FactorMask(std::vector<std::uint8_t> bits);
  static FactorMask ones(std::size_t p);
  static FactorMask zeros(std::size_t p);
  static FactorMask from_value(std::uint32_t value, std::size_t p);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t k) const { return bits_[k] != 0; }
  void set(std::size_t k, bool kept) { bits_[k] = kept ? 1 : 0; }
  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string to_string() const;  // e.g. "01101"

  bool operator==(const FactorMask&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Linear per-request scorer. Weight vectors are write-only from the
/// outside; the only read path is score_items, so nonlinear scorers can
/// replace this class behind the same contract.
class RankingModel {
 public:
  void add(RequestId id, std::vector<double> weights);
  bool contains(RequestId id) const { return weights_.count(id) != 0; }
  std::size_t p() const { return p_; }
  std::size_t size() const { return weights_.size(); }

  friend std::vector<double> score_items(const RankingModel&, RequestId,
                                         const FactorMatrix&,
                                         const FactorMask&);

 private:
  std::unordered_map<RequestId, std::vector<double>> weights_;
  std::size_t p_ = 0;
};

/// Ranking permutation. order[0] is the top item; rank_of[item] recovers
/// the item's position, so rank_of is the inverse of order.
struct Permutation {
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> rank_of;

  static Permutation from_order(std::vector<std::uint32_t> order);
  std::size_t size() const { return order.size(); }

  bool operator==(const Permutation&) const = default;
};

struct CfsLossParams {
  explicit CfsLossParams(double lambda);
  double lambda;
};

struct LossBreakdown {
  double loss;       // distance + lambda * cost_term
  double distance;   // pairwise ranking distance in [0, 1]
  double cost_term;  // n_items * sum of kept factor costs
};

/// Masked linear score per item: score_j = sum_k mask[k] * w_k * x_{j,k}.
/// With the all-ones mask the result is bit-identical to the plain dot
/// product (same additions in the same order).
std::vector<double> score_items(const RankingModel& model, RequestId id,
                                const FactorMatrix& factors,
                                const FactorMask& mask);

/// Descending-score permutation; ties broken by ascending item index.
Permutation rank(std::span<const double> scores);

/// Fraction of unordered item pairs ranked one way by `reference` and the
/// other way by `candidate`. 0 for identical permutations, 1 for an exact
/// reversal.
double pairwise_distance(const Permutation& reference,
                         const Permutation& candidate);

/// Ranking distortion of the masked scorer plus the cost of the kept
/// factors. The returned parts satisfy
/// loss == distance + lambda * cost_term exactly.
LossBreakdown cfs_loss(const FactorMatrix& factors, const RankingModel& model,
                       const CostVector& costs, const FactorMask& mask,
                       const CfsLossParams& params);

}  // namespace cfs
