#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fjs/nn/tape.hpp"
#include "fjs/rng.hpp"

namespace fjs::nn {

/// Ordered name -> matrix collection. Insertion order is the iteration and
/// serialization order.
template <typename Scalar>
class NamedParams {
 public:
  using Mat = Matrix<Scalar>;

  Mat& add(const std::string& name, Mat value) {
    if (find(name) >= 0) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    entries_.emplace_back(name, std::move(value));
    return entries_.back().second;
  }

  int find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].first == name) return static_cast<int>(i);
    return -1;
  }

  bool contains(const std::string& name) const { return find(name) >= 0; }

  const Mat& operator[](const std::string& name) const { return at(name); }
  Mat& operator[](const std::string& name) { return const_cast<Mat&>(std::as_const(*this).at(name)); }

  const Mat& at(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw std::out_of_range("no parameter named '" + name + "'");
    return entries_[static_cast<std::size_t>(i)].second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  const Mat& value(std::size_t i) const { return entries_[i].second; }
  Mat& value(std::size_t i) { return entries_[i].second; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  template <typename Other>
  NamedParams<Other> cast() const {
    NamedParams<Other> out;
    for (const auto& [n, v] : entries_) out.add(n, v.template cast<Other>());
    return out;
  }

  /// Same names and shapes, all zeros.
  NamedParams zeros_like() const {
    NamedParams out;
    for (const auto& [n, v] : entries_) out.add(n, Mat::Zero(v.rows(), v.cols()));
    return out;
  }

  friend bool operator==(const NamedParams& a, const NamedParams& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.name(i) != b.name(i) || a.value(i).rows() != b.value(i).rows() || a.value(i).cols() != b.value(i).cols() ||
          a.value(i) != b.value(i))
        return false;
    }
    return true;
  }

 private:
  std::vector<std::pair<std::string, Mat>> entries_;
};

/// Parameters placed on a tape as leaves, aligned with the NamedParams order.
template <typename Scalar>
class BoundParams {
 public:
  BoundParams(Tape<Scalar>& tape, const NamedParams<Scalar>& params, bool requires_grad) : params_(&params) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.leaf(params.value(i), requires_grad));
  }

  Var<Scalar> operator[](const std::string& name) const {
    const int i = params_->find(name);
    if (i < 0) throw std::out_of_range("no parameter named '" + name + "'");
    return vars_[static_cast<std::size_t>(i)];
  }

  Var<Scalar> var(std::size_t i) const { return vars_[i]; }
  std::size_t size() const { return vars_.size(); }

  /// Adds the gradients of the last backward pass into `into` (same layout).
  void accumulate_grads(NamedParams<Scalar>& into) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) into.value(i) += vars_[i].tape->grad(vars_[i]);
  }

 private:
  const NamedParams<Scalar>* params_;
  std::vector<Var<Scalar>> vars_;
};

/// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) initialization.
template <typename Scalar>
Matrix<Scalar> init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
  return m;
}

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binary checkpoint: "EMARM\0", u32 version 1, u32 tensor count, then per
/// tensor u16 name length, name, u8 rank, u64 dims, little-endian float32 data.
void write_checkpoint(const NamedParams<float>& params, const std::filesystem::path& path);
NamedParams<float> read_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const NamedParams<float>& params);
NamedParams<float> decode_checkpoint(const std::string& bytes);

}  // namespace fjs::nn
