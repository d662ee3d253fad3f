//
// Copyright 2026 The UDG Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Hashed bag-of-words features and a multinomial logistic regression trained
// by minibatch SGD. Header-only; templated on the scalar type.

#ifndef UDG_CLASSIFIER_HPP_
#define UDG_CLASSIFIER_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "udg/common.hpp"

namespace udg {

inline constexpr std::uint32_t kDefaultFeatureDims = 1u << 18;

template <class Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using DenseMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sparse feature vector: strictly increasing indices into [0, dims).
template <class Scalar = double>
struct FeatureVector {
  std::vector<std::uint32_t> indices;
  std::vector<Scalar> values;
  std::uint32_t dims = 0;

  std::size_t size() const { return indices.size(); }
};

namespace detail {

struct HashedFeature {
  std::uint32_t index;
  int sign;
};

inline HashedFeature hash_feature(std::string_view key, std::uint32_t dims) {
  const std::uint64_t h = fnv1a64(key);
  const std::uint64_t slot = splitmix64(h);
  const std::uint64_t sign_bits = splitmix64(h ^ 0x5bd1e9955bd1e995ULL);
  return {static_cast<std::uint32_t>(slot & (dims - 1)),
          (sign_bits >> 63) ? -1 : 1};
}

}  // namespace detail

/// Lowercased whitespace unigrams and bigrams, signed feature hashing, term
/// frequency values, L2 normalized. Throws EmptyInput for blank text.
template <class Scalar = double>
FeatureVector<Scalar> featurize(std::string_view text,
                                std::uint32_t dims = kDefaultFeatureDims) {
  if (dims == 0 || (dims & (dims - 1)) != 0) {
    throw ShapeError("feature dims must be a power of two");
  }
  const std::string lowered = to_lower_ascii(text);
  const auto tokens = split_whitespace(lowered);
  if (tokens.empty()) throw EmptyInput("text is empty after normalization");

  std::map<std::uint32_t, Scalar> acc;
  auto add = [&](const std::string& key) {
    const auto f = detail::hash_feature(key, dims);
    acc[f.index] += static_cast<Scalar>(f.sign);
  };
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    key.assign("u\x1f").append(tokens[i]);
    add(key);
    if (i + 1 < tokens.size()) {
      key.assign("b\x1f").append(tokens[i]).append("\x1f").append(tokens[i + 1]);
      add(key);
    }
  }

  FeatureVector<Scalar> fv;
  fv.dims = dims;
  Scalar norm2 = 0;
  for (const auto& [idx, v] : acc) {
    if (v == Scalar(0)) continue;  // colliding features cancelled out
    fv.indices.push_back(idx);
    fv.values.push_back(v);
    norm2 += v * v;
  }
  const Scalar norm = std::sqrt(norm2);
  for (auto& v : fv.values) v /= norm;
  return fv;
}

/// Linear softmax model. Weights are stored as scale * raw so that L2 decay
/// costs O(1) per step; `weight()` and `weights()` return effective values.
template <class Scalar = double>
class ClassifierModel {
 public:
  using Matrix = DenseMatrix<Scalar>;
  using Vec = DenseVector<Scalar>;

  ClassifierModel() = default;
  ClassifierModel(std::uint32_t dims, int num_classes)
      : raw_(Matrix::Zero(dims, num_classes)),
        bias_(Vec::Zero(num_classes)),
        dims_(dims),
        num_classes_(num_classes) {
    if (num_classes < 1) throw ShapeError("num_classes must be >= 1");
  }

  std::uint32_t dims() const { return dims_; }
  int num_classes() const { return num_classes_; }
  Scalar scale() const { return scale_; }

  Scalar weight(std::uint32_t row, int cls) const {
    return scale_ * raw_(row, cls);
  }
  Matrix weights() const { return scale_ * raw_; }
  const Vec& bias() const { return bias_; }

  void set_weights(const Matrix& w) {
    if (w.rows() != raw_.rows() || w.cols() != raw_.cols()) {
      throw ShapeError("weight matrix has the wrong shape");
    }
    raw_ = w;
    scale_ = 1;
    raw_sqnorm_ = raw_.squaredNorm();
  }
  void set_bias(const Vec& b) {
    if (b.size() != bias_.size()) throw ShapeError("bias has the wrong size");
    bias_ = b;
  }

  /// Folds the scale into the raw weights.
  void normalize() {
    if (scale_ != Scalar(1)) {
      raw_ *= scale_;
      scale_ = 1;
    }
    raw_sqnorm_ = raw_.squaredNorm();
  }

  Vec logits(const FeatureVector<Scalar>& x) const {
    if (x.dims != dims_) {
      throw ShapeError("feature dims " + std::to_string(x.dims) +
                       " != model dims " + std::to_string(dims_));
    }
    Vec z = Vec::Zero(num_classes_);
    for (std::size_t j = 0; j < x.size(); ++j) {
      z += x.values[j] * raw_.row(x.indices[j]).transpose();
    }
    return (scale_ * z + bias_).eval();
  }

  // Mutators used by train_step.
  Matrix& raw() { return raw_; }
  Vec& mutable_bias() { return bias_; }
  void set_scale(Scalar s) { scale_ = s; }
  // Running ||raw||^2, kept current by train_step.
  Scalar raw_sqnorm() const { return raw_sqnorm_; }
  void add_raw_sqnorm(Scalar delta) { raw_sqnorm_ += delta; }

  bool operator==(const ClassifierModel& other) const {
    return dims_ == other.dims_ && num_classes_ == other.num_classes_ &&
           weights() == other.weights() && bias_ == other.bias_;
  }

 private:
  Matrix raw_;
  Vec bias_;
  Scalar scale_ = 1;
  Scalar raw_sqnorm_ = 0;
  std::uint32_t dims_ = 0;
  int num_classes_ = 0;
};

template <class Scalar>
DenseVector<Scalar> softmax(const DenseVector<Scalar>& z) {
  const Scalar peak = z.maxCoeff();
  DenseVector<Scalar> e = (z.array() - peak).exp().matrix();
  return e / e.sum();
}

template <class Scalar>
DenseVector<Scalar> predict_proba(const ClassifierModel<Scalar>& model,
                                  const FeatureVector<Scalar>& x) {
  return softmax<Scalar>(model.logits(x));
}

/// Argmax with ties to the lowest class index.
template <class Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

template <class Scalar>
int predict(const ClassifierModel<Scalar>& model,
            const FeatureVector<Scalar>& x) {
  return argmax(model.logits(x));
}

template <class Scalar = double>
struct LabeledFeatures {
  FeatureVector<Scalar> features;
  int label = 0;
};

template <class Scalar>
using Batch = std::span<const LabeledFeatures<Scalar>* const>;

/// Mean cross-entropy over the batch plus (l2 / 2) * ||W||^2 (bias is not
/// penalized).
template <class Scalar>
Scalar objective(const ClassifierModel<Scalar>& model, Batch<Scalar> batch,
                 Scalar l2) {
  Scalar loss = 0;
  for (const auto* ex : batch) {
    const auto z = model.logits(ex->features);
    const Scalar peak = z.maxCoeff();
    const Scalar lse = peak + std::log((z.array() - peak).exp().sum());
    loss += lse - z[ex->label];
  }
  loss /= static_cast<Scalar>(batch.size());
  if (l2 != Scalar(0)) loss += Scalar(0.5) * l2 * model.weights().squaredNorm();
  return loss;
}

template <class Scalar>
struct Gradient {
  DenseMatrix<Scalar> weights;
  DenseVector<Scalar> bias;
};

/// Dense analytic gradient of objective(). Intended for checks on small
/// models; train_step applies the same gradient sparsely.
template <class Scalar>
Gradient<Scalar> gradient(const ClassifierModel<Scalar>& model,
                          Batch<Scalar> batch, Scalar l2) {
  Gradient<Scalar> g{l2 * model.weights(),
                     DenseVector<Scalar>::Zero(model.num_classes())};
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.size());
  for (const auto* ex : batch) {
    DenseVector<Scalar> delta = predict_proba(model, ex->features);
    delta[ex->label] -= 1;
    delta *= inv_n;
    for (std::size_t j = 0; j < ex->features.size(); ++j) {
      g.weights.row(ex->features.indices[j]) +=
          ex->features.values[j] * delta.transpose();
    }
    g.bias += delta;
  }
  return g;
}

/// One SGD step on the mean cross-entropy + L2 objective. Returns the
/// pre-update objective. Throws DivergenceError on a non-finite loss.
template <class Scalar>
Scalar train_step(ClassifierModel<Scalar>& model, Batch<Scalar> batch,
                  Scalar learning_rate, Scalar l2) {
  if (batch.empty()) throw InvalidParams("train_step needs a non-empty batch");
  const int c = model.num_classes();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.size());

  // Accumulate the data gradient sparsely by feature row.
  std::map<std::uint32_t, DenseVector<Scalar>> rows;
  DenseVector<Scalar> bias_grad = DenseVector<Scalar>::Zero(c);
  Scalar loss = 0;
  for (const auto* ex : batch) {
    if (ex->label < 0 || ex->label >= c) {
      throw InvalidParams("label " + std::to_string(ex->label) +
                          " out of range");
    }
    const auto z = model.logits(ex->features);
    const Scalar peak = z.maxCoeff();
    const DenseVector<Scalar> e = (z.array() - peak).exp().matrix();
    const Scalar sum = e.sum();
    loss += peak + std::log(sum) - z[ex->label];
    DenseVector<Scalar> delta = e / sum;
    delta[ex->label] -= 1;
    delta *= inv_n;
    for (std::size_t j = 0; j < ex->features.size(); ++j) {
      auto [it, fresh] = rows.try_emplace(ex->features.indices[j]);
      if (fresh) it->second = DenseVector<Scalar>::Zero(c);
      it->second += ex->features.values[j] * delta;
    }
    bias_grad += delta;
  }
  loss *= inv_n;
  const Scalar decay = Scalar(1) - learning_rate * l2;
  if (l2 != Scalar(0)) {
    loss += Scalar(0.5) * l2 * model.scale() * model.scale() *
            model.raw_sqnorm();
  }
  if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite");
  if (!(decay > Scalar(0))) {
    throw InvalidParams("learning_rate * l2 must be < 1");
  }

  // W' = (1 - lr*l2) W - lr G, with W = s * raw.
  const Scalar new_scale = model.scale() * decay;
  auto& raw = model.raw();
  Scalar sq_delta = 0;
  for (const auto& [idx, g] : rows) {
    const Scalar before = raw.row(idx).squaredNorm();
    raw.row(idx) -= (learning_rate / new_scale) * g.transpose();
    sq_delta += raw.row(idx).squaredNorm() - before;
  }
  model.add_raw_sqnorm(sq_delta);
  model.mutable_bias() -= learning_rate * bias_grad;
  model.set_scale(new_scale);
  if (new_scale < Scalar(1e-6)) model.normalize();
  return loss;
}

// ---------------------------------------------------------------------------
// Checkpoint: {"format": "udg-classifier", "version": 1, "dims",
// "num_classes", "bias": [...], "weights": [[row, w_0, ..., w_{C-1}], ...]}
// Only rows with a nonzero entry are listed.

inline constexpr int kCheckpointVersion = 1;

template <class Scalar>
nlohmann::json checkpoint_json(const ClassifierModel<Scalar>& model) {
  nlohmann::json j;
  j["format"] = "udg-classifier";
  j["version"] = kCheckpointVersion;
  j["dims"] = model.dims();
  j["num_classes"] = model.num_classes();
  j["bias"] = std::vector<double>(model.bias().data(),
                                  model.bias().data() + model.bias().size());
  auto rows = nlohmann::json::array();
  for (std::uint32_t r = 0; r < model.dims(); ++r) {
    bool any = false;
    for (int c = 0; c < model.num_classes(); ++c) {
      if (model.weight(r, c) != Scalar(0)) any = true;
    }
    if (!any) continue;
    auto row = nlohmann::json::array({r});
    for (int c = 0; c < model.num_classes(); ++c) {
      row.push_back(static_cast<double>(model.weight(r, c)));
    }
    rows.push_back(std::move(row));
  }
  j["weights"] = std::move(rows);
  return j;
}

template <class Scalar>
ClassifierModel<Scalar> model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "udg-classifier") {
      throw ParseError("not a udg-classifier checkpoint", 0);
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version", 0);
    }
    ClassifierModel<Scalar> model(j.at("dims").get<std::uint32_t>(),
                                  j.at("num_classes").get<int>());
    const int c = model.num_classes();
    DenseVector<Scalar> bias(c);
    const auto& jb = j.at("bias");
    if (static_cast<int>(jb.size()) != c) throw ParseError("bias size", 0);
    for (int k = 0; k < c; ++k) bias[k] = jb[k].get<double>();
    model.set_bias(bias);
    for (const auto& row : j.at("weights")) {
      const auto r = row.at(0).get<std::uint32_t>();
      if (r >= model.dims() || static_cast<int>(row.size()) != c + 1) {
        throw ParseError("bad weight row", 0);
      }
      for (int k = 0; k < c; ++k) {
        model.raw()(r, k) = static_cast<Scalar>(row[k + 1].get<double>());
      }
    }
    model.normalize();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
}

template <class Scalar>
void save_checkpoint(const ClassifierModel<Scalar>& model,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FixtureError("cannot write " + path.string());
  out << checkpoint_json(model).dump() << '\n';
}

template <class Scalar = double>
ClassifierModel<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
  return model_from_json<Scalar>(j);
}

}  // namespace udg

#endif  // UDG_CLASSIFIER_HPP_
