#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace feel {

/// Dense row-major matrix of doubles.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Takes ownership of `data`; its length must equal rows * cols.
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double> column(std::size_t c) const;

  bool all_finite() const noexcept;

  friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

RealMatrix transpose(const RealMatrix& m);

/// out = a * b.
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);

/// out = a^T * b, without materializing the transpose.
RealMatrix matmul_at_b(const RealMatrix& a, const RealMatrix& b);

/// out = a * b^T.
RealMatrix matmul_a_bt(const RealMatrix& a, const RealMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }
double sigmoid(double x) noexcept;

/// Numerically stable softmax (shift by max). Throws InvalidArgument on empty input.
std::vector<double> softmax(std::span<const double> v);

/// Row indices of the k largest entries of column `c`, largest first; equal
/// values are ordered by ascending row index.
std::vector<std::size_t> topk_rows(const RealMatrix& m, std::size_t c, std::size_t k);

/// Mean of the k largest values of each column. Requires 1 <= k <= rows.
std::vector<double> topk_mean_per_column(const RealMatrix& m, std::size_t k);

/// Unit-normalize every nonzero row; zero rows are returned unchanged.
RealMatrix l2_normalize_rows(const RealMatrix& m);

/// Adam moments and hyperparameters for one flat parameter vector.
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  static AdamState fresh(std::size_t parameter_count, double learning_rate = 1e-4);
};

/// One bias-corrected Adam update in place. Shapes of params, grads and the
/// moment arrays must agree.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace feel
