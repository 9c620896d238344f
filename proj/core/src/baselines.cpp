#include "cfs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "cfs/rng.hpp"

namespace cfs {

RegressionSet build_regression_set(const Dataset& dataset,
                                   const RankingModel& model) {
  if (dataset.page_views.empty()) {
    throw ValueError("regression set: empty dataset");
  }
  RegressionSet set;
  set.cols = dataset.p;
  set.rows = 0;
  for (const PageView& pv : dataset.page_views) {
    set.rows += pv.factors.n_items();
  }
  set.x.reserve(set.rows * set.cols);
  set.targets.reserve(set.rows);
  const FactorMask full = FactorMask::ones(dataset.p);
  for (const PageView& pv : dataset.page_views) {
    const std::vector<double> scores =
        score_items(model, pv.factors.request_id(), pv.factors, full);
    for (std::size_t j = 0; j < pv.factors.n_items(); ++j) {
      const std::span<const double> row = pv.factors.row(j);
      set.x.insert(set.x.end(), row.begin(), row.end());
      set.targets.push_back(scores[j]);
    }
  }
  return set;
}

std::vector<FactorMask> norm_elimination(const Dataset& dataset,
                                         double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ValueError("norm elimination: epsilon must be > 0");
  }
  if (dataset.page_views.empty()) {
    throw ValueError("norm elimination: empty dataset");
  }
  std::vector<FactorMask> masks;
  masks.reserve(dataset.page_views.size());
  for (const PageView& pv : dataset.page_views) {
    std::vector<std::uint8_t> bits(pv.weights.size(), 0);
    for (std::size_t k = 0; k < pv.weights.size(); ++k) {
      bits[k] = std::abs(pv.weights[k]) >= epsilon ? 1 : 0;
    }
    masks.emplace_back(std::move(bits));
  }
  return masks;
}

// ---------------------------------------------------------------------------
// Lasso

namespace {

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

}  // namespace

LassoResult lasso_select(const RegressionSet& data, double alpha,
                         bool standardize) {
  if (!(alpha >= 0.0)) throw ValueError("lasso: alpha must be >= 0");
  const std::size_t n = data.rows;
  const std::size_t p = data.cols;
  if (n < p) {
    throw ValueError("lasso: need at least p rows, got " + std::to_string(n));
  }

  // Work on a column-major copy; optionally standardized.
  std::vector<double> cols(p * n);
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      cols[k * n + i] = data.at(i, k);
    }
  }
  const double y_mean =
      std::accumulate(data.targets.begin(), data.targets.end(), 0.0) /
      static_cast<double>(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.targets[i] - y_mean;

  if (standardize) {
    for (std::size_t k = 0; k < p; ++k) {
      double* col = cols.data() + k * n;
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += col[i];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        col[i] -= mean;
        var += col[i] * col[i];
      }
      var /= static_cast<double>(n);
      if (var > 0.0) {
        const double inv_sd = 1.0 / std::sqrt(var);
        for (std::size_t i = 0; i < n; ++i) col[i] *= inv_sd;
      } else {
        // Constant column carries no signal; leave it zeroed out.
        std::fill(col, col + n, 0.0);
      }
    }
  }

  std::vector<double> col_sq(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    const double* col = cols.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) col_sq[k] += col[i] * col[i];
  }

  constexpr double kTolerance = 1e-8;
  constexpr std::size_t kMaxSweeps = 10000;
  const double threshold = alpha * static_cast<double>(n);

  std::vector<double> w(p, 0.0);
  std::vector<double> residual = y;
  LassoResult result;
  for (result.sweeps = 0; result.sweeps < kMaxSweeps; ++result.sweeps) {
    double max_change = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      if (col_sq[k] == 0.0) continue;
      const double* col = cols.data() + k * n;
      double rho = w[k] * col_sq[k];
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * residual[i];
      const double updated = soft_threshold(rho, threshold) / col_sq[k];
      const double change = updated - w[k];
      if (change != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= change * col[i];
        w[k] = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }
    if (max_change < kTolerance) {
      result.converged = true;
      ++result.sweeps;
      break;
    }
  }

  std::vector<std::uint8_t> bits(p, 0);
  for (std::size_t k = 0; k < p; ++k) {
    bits[k] = w[k] != 0.0 ? 1 : 0;
  }
  result.mask = FactorMask(std::move(bits));
  result.coefficients = std::move(w);
  return result;
}

// ---------------------------------------------------------------------------
// Extremely randomized trees

namespace {

struct TreeBuilder {
  const RegressionSet& data;
  std::vector<double>& importance;  // accumulated SSE reduction per factor
  std::size_t min_samples_split;
  Rng rng;

  struct NodeStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double y) {
      sum += y;
      sum_sq += y * y;
      ++count;
    }
    double sse() const {
      if (count == 0) return 0.0;
      return sum_sq - sum * sum / static_cast<double>(count);
    }
  };

  void build(std::vector<std::uint32_t>& rows, std::size_t lo,
             std::size_t hi) {
    struct Frame {
      std::size_t lo, hi;
    };
    std::vector<Frame> stack{{lo, hi}};
    while (!stack.empty()) {
      const Frame frame = stack.back();
      stack.pop_back();
      const std::size_t count = frame.hi - frame.lo;
      if (count < min_samples_split) continue;

      NodeStats node;
      for (std::size_t i = frame.lo; i < frame.hi; ++i) {
        node.add(data.targets[rows[i]]);
      }
      const double node_sse = node.sse();
      if (!(node_sse > 0.0)) continue;  // constant target in this node

      // One uniform random threshold per factor; best variance reduction
      // wins. This is the extremely-randomized split rule.
      double best_gain = 0.0;
      std::size_t best_factor = 0;
      double best_threshold = 0.0;
      bool found = false;
      for (std::size_t k = 0; k < data.cols; ++k) {
        double lo_v = data.at(rows[frame.lo], k);
        double hi_v = lo_v;
        for (std::size_t i = frame.lo + 1; i < frame.hi; ++i) {
          const double v = data.at(rows[i], k);
          lo_v = std::min(lo_v, v);
          hi_v = std::max(hi_v, v);
        }
        if (!(hi_v > lo_v)) continue;
        const double threshold = rng.uniform(lo_v, hi_v);
        NodeStats left;
        NodeStats right;
        for (std::size_t i = frame.lo; i < frame.hi; ++i) {
          const double y = data.targets[rows[i]];
          if (data.at(rows[i], k) <= threshold) {
            left.add(y);
          } else {
            right.add(y);
          }
        }
        if (left.count == 0 || right.count == 0) continue;
        const double gain = node_sse - left.sse() - right.sse();
        if (!found || gain > best_gain) {
          found = true;
          best_gain = gain;
          best_factor = k;
          best_threshold = threshold;
        }
      }
      if (!found || !(best_gain > 0.0)) continue;

      importance[best_factor] += best_gain;
      const auto mid_it = std::partition(
          rows.begin() + static_cast<std::ptrdiff_t>(frame.lo),
          rows.begin() + static_cast<std::ptrdiff_t>(frame.hi),
          [&](std::uint32_t row) {
            return data.at(row, best_factor) <= best_threshold;
          });
      const auto mid =
          static_cast<std::size_t>(mid_it - rows.begin());
      stack.push_back({frame.lo, mid});
      stack.push_back({mid, frame.hi});
    }
  }
};

}  // namespace

TreeResult tree_select(const RegressionSet& data,
                       const TreeSelectParams& params) {
  const std::size_t p = data.cols;
  if (data.rows < p) {
    throw ValueError("tree select: need at least p rows");
  }
  if (params.num_trees == 0) {
    throw ValueError("tree select: num_trees must be > 0");
  }
  if (params.mode == TreeMaskMode::TopK && (params.k == 0 || params.k > p)) {
    throw ValueError("tree select: k must be in [1, p]");
  }

  std::vector<double> importance(p, 0.0);
  const Rng base(params.seed);
  for (std::size_t t = 0; t < params.num_trees; ++t) {
    std::vector<std::uint32_t> rows(data.rows);
    std::iota(rows.begin(), rows.end(), 0u);
    TreeBuilder builder{data, importance,
                        std::max<std::size_t>(params.min_samples_split, 2),
                        base.derive(t)};
    builder.build(rows, 0, data.rows);
  }

  TreeResult result;
  const double total =
      std::accumulate(importance.begin(), importance.end(), 0.0);
  if (!(total > 0.0)) {
    result.degenerate = true;
    result.importances.assign(p, 0.0);
    result.mask = FactorMask::zeros(p);
    return result;
  }
  for (double& imp : importance) imp /= total;
  result.importances = importance;

  std::vector<std::uint8_t> bits(p, 0);
  if (params.mode == TreeMaskMode::MeanImportance) {
    const double mean = 1.0 / static_cast<double>(p);
    for (std::size_t k = 0; k < p; ++k) {
      bits[k] = importance[k] > mean ? 1 : 0;
    }
  } else {
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return importance[a] > importance[b];
                     });
    for (std::size_t i = 0; i < params.k; ++i) bits[order[i]] = 1;
  }
  result.mask = FactorMask(std::move(bits));
  return result;
}

// ---------------------------------------------------------------------------
// F-test

FtestResult ftest_select(const RegressionSet& data, std::size_t k) {
  const std::size_t n = data.rows;
  const std::size_t p = data.cols;
  if (n < 3) throw ValueError("f-test: need at least 3 rows");
  if (k == 0 || k > p) throw ValueError("f-test: k must be in [1, p]");

  const double inv_n = 1.0 / static_cast<double>(n);
  double y_mean = 0.0;
  for (double t : data.targets) y_mean += t;
  y_mean *= inv_n;
  double y_var = 0.0;
  for (double t : data.targets) y_var += (t - y_mean) * (t - y_mean);

  std::vector<double> scores(p, 0.0);
  for (std::size_t col = 0; col < p; ++col) {
    double x_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) x_mean += data.at(i, col);
    x_mean *= inv_n;
    double xx = 0.0;
    double xy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = data.at(i, col) - x_mean;
      xx += dx * dx;
      xy += dx * (data.targets[i] - y_mean);
    }
    if (xx == 0.0 || y_var == 0.0) {
      scores[col] = 0.0;
      continue;
    }
    double r_sq = xy * xy / (xx * y_var);
    r_sq = std::min(r_sq, 1.0 - 1e-12);  // r == 1 would blow up F
    scores[col] = r_sq / (1.0 - r_sq) * static_cast<double>(n - 2);
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  std::vector<std::uint8_t> bits(p, 0);
  for (std::size_t i = 0; i < k; ++i) bits[order[i]] = 1;
  return FtestResult{FactorMask(std::move(bits)), std::move(scores)};
}

// ---------------------------------------------------------------------------
// Mask files

void save_mask_file(const std::filesystem::path& path, const MaskFile& file) {
  if (file.masks.empty()) throw ValueError("mask file: no masks");
  for (const FactorMask& mask : file.masks) {
    if (mask.size() != file.p) {
      throw ShapeError("mask file: mask length != p");
    }
  }
  if (!file.per_request && file.masks.size() != 1) {
    throw ValueError("mask file: global kind requires exactly one mask");
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "cfs-mask v1\n";
  os << "method " << file.method << '\n';
  os << "params " << file.params << '\n';
  os << "p " << file.p << '\n';
  os << "kind " << (file.per_request ? "per_request" : "global") << '\n';
  os << "count " << file.masks.size() << '\n';
  for (const FactorMask& mask : file.masks) os << mask.to_string() << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

namespace {

std::string expect_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) {
    throw FormatError(std::string("mask file: missing ") + what);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string expect_field(std::istream& is, const std::string& key) {
  const std::string line = expect_line(is, key.c_str());
  if (line.rfind(key + " ", 0) != 0) {
    throw FormatError("mask file: expected '" + key + "', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

MaskFile load_mask_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  if (expect_line(is, "header") != "cfs-mask v1") {
    throw FormatError("mask file: unsupported header");
  }
  MaskFile file;
  file.method = expect_field(is, "method");
  file.params = expect_field(is, "params");
  file.p = std::stoul(expect_field(is, "p"));
  const std::string kind = expect_field(is, "kind");
  if (kind == "global") {
    file.per_request = false;
  } else if (kind == "per_request") {
    file.per_request = true;
  } else {
    throw FormatError("mask file: unknown kind '" + kind + "'");
  }
  const std::size_t count = std::stoul(expect_field(is, "count"));
  file.masks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string bits_line = expect_line(is, "mask bits");
    if (bits_line.size() != file.p) {
      throw FormatError("mask file: bits length != p");
    }
    std::vector<std::uint8_t> bits(file.p);
    for (std::size_t k = 0; k < file.p; ++k) {
      if (bits_line[k] != '0' && bits_line[k] != '1') {
        throw FormatError("mask file: bits must be 0/1");
      }
      bits[k] = bits_line[k] == '1' ? 1 : 0;
    }
    file.masks.emplace_back(std::move(bits));
  }
  return file;
}

}  // namespace cfs
