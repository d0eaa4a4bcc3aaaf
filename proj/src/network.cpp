#include "ceqln/network.hpp"

#include <cmath>
#include <sstream>

#include "ceqln/error.hpp"

namespace ceqln {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kSine:
      return "sine";
    case Activation::kCosine:
      return "cosine";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kProduct:
      return "product";
    case Activation::kSech:
      return "sech";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity" || name == "I") return Activation::kIdentity;
  if (name == "sine" || name == "sin") return Activation::kSine;
  if (name == "cosine" || name == "cos") return Activation::kCosine;
  if (name == "sigmoid" || name == "sigma") return Activation::kSigmoid;
  if (name == "product" || name == "x" || name == "*") return Activation::kProduct;
  if (name == "sech") return Activation::kSech;
  throw Error(ErrorKind::kConfig, "unknown activation '" + std::string(name) + "'");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sech(double z) {
  // 2 / (e^z + e^-z) rewritten with e^-|z| only, so it never overflows.
  const double e = std::exp(-std::abs(z));
  return 2.0 * e / (1.0 + e * e);
}

Index LayerSpec::pre_width() const {
  Index width = 0;
  for (Activation a : activations) width += is_binary(a) ? 2 : 1;
  return width;
}

LayerSpec repeat_layer(int copies, const std::vector<Activation>& kinds) {
  LayerSpec layer;
  for (int c = 0; c < copies; ++c) layer.activations.insert(layer.activations.end(), kinds.begin(), kinds.end());
  return layer;
}

Index NetworkParams::parameter_count() const {
  Index count = output.W.size() + output.b.size();
  for (const DenseLayer& layer : hidden) count += layer.W.size() + layer.b.size();
  return count;
}

VectorXd NetworkParams::flatten() const {
  VectorXd flat(parameter_count());
  Index k = 0;
  auto push = [&](const DenseLayer& layer) {
    flat.segment(k, layer.W.size()) = layer.W.reshaped();
    k += layer.W.size();
    flat.segment(k, layer.b.size()) = layer.b;
    k += layer.b.size();
  };
  for (const DenseLayer& layer : hidden) push(layer);
  push(output);
  return flat;
}

void NetworkParams::assign(const VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorKind::kConfig, "parameter vector has wrong length");
  }
  Index k = 0;
  auto pull = [&](DenseLayer& layer) {
    layer.W.reshaped() = flat.segment(k, layer.W.size());
    k += layer.W.size();
    layer.b = flat.segment(k, layer.b.size());
    k += layer.b.size();
  };
  for (DenseLayer& layer : hidden) pull(layer);
  pull(output);
}

bool NetworkParams::operator==(const NetworkParams& other) const {
  if (hidden.size() != other.hidden.size()) return false;
  auto same = [](const DenseLayer& a, const DenseLayer& b) {
    return a.W.rows() == b.W.rows() && a.W.cols() == b.W.cols() && a.b.size() == b.b.size() &&
           a.W == b.W && a.b == b.b;
  };
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    if (!same(hidden[l], other.hidden[l])) return false;
  }
  return same(output, other.output);
}

NetworkParams zeros_like(const NetworkSpec& spec) {
  NetworkParams params;
  Index input_width = 1;
  for (const LayerSpec& layer : spec.hidden) {
    params.hidden.push_back({MatrixXd::Zero(layer.pre_width(), input_width), VectorXd::Zero(layer.pre_width())});
    input_width = layer.output_width();
  }
  params.output = {MatrixXd::Zero(spec.basis_count, input_width), VectorXd::Zero(spec.basis_count)};
  return params;
}

void validate(const NetworkParams& params, const NetworkSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, what); };
  if (params.hidden.size() != spec.hidden.size()) {
    std::ostringstream os;
    os << "network has " << params.hidden.size() << " hidden layers but spec lists " << spec.hidden.size();
    fail(os.str());
  }
  Index input_width = 1;
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    const DenseLayer& layer = params.hidden[l];
    const Index pre = spec.hidden[l].pre_width();
    if (layer.W.rows() != pre || layer.W.cols() != input_width || layer.b.size() != pre) {
      std::ostringstream os;
      os << "hidden layer " << l << ": expected W " << pre << "x" << input_width << " and b " << pre << ", got W "
         << layer.W.rows() << "x" << layer.W.cols() << " and b " << layer.b.size();
      fail(os.str());
    }
    if (!layer.W.allFinite() || !layer.b.allFinite()) {
      fail("hidden layer " + std::to_string(l) + ": non-finite parameter");
    }
    input_width = spec.hidden[l].output_width();
  }
  const DenseLayer& out = params.output;
  if (out.W.rows() != spec.basis_count || out.W.cols() != input_width || out.b.size() != spec.basis_count) {
    std::ostringstream os;
    os << "output layer: expected W " << spec.basis_count << "x" << input_width << " and b " << spec.basis_count
       << ", got W " << out.W.rows() << "x" << out.W.cols() << " and b " << out.b.size();
    fail(os.str());
  }
  if (!out.W.allFinite() || !out.b.allFinite()) fail("output layer: non-finite parameter");
}

namespace {

// z = W h + b, one column at a time with a fixed summation order so that the
// result for a given time does not depend on how many other times are batched.
MatrixXd affine(const DenseLayer& layer, const MatrixXd& inputs) {
  const Index rows = layer.W.rows();
  const Index width = layer.W.cols();
  MatrixXd z(rows, inputs.cols());
  for (Index n = 0; n < inputs.cols(); ++n) {
    for (Index i = 0; i < rows; ++i) {
      double s = layer.b(i);
      for (Index j = 0; j < width; ++j) s += layer.W(i, j) * inputs(j, n);
      z(i, n) = s;
    }
  }
  return z;
}

MatrixXd activate(const LayerSpec& spec, const MatrixXd& z) {
  MatrixXd h(spec.output_width(), z.cols());
  for (Index n = 0; n < z.cols(); ++n) {
    Index slot = 0;
    for (Index k = 0; k < spec.output_width(); ++k) {
      const double v = z(slot, n);
      switch (spec.activations[static_cast<std::size_t>(k)]) {
        case Activation::kIdentity:
          h(k, n) = v;
          break;
        case Activation::kSine:
          h(k, n) = std::sin(v);
          break;
        case Activation::kCosine:
          h(k, n) = std::cos(v);
          break;
        case Activation::kSigmoid:
          h(k, n) = sigmoid(v);
          break;
        case Activation::kSech:
          h(k, n) = sech(v);
          break;
        case Activation::kProduct:
          h(k, n) = v * z(slot + 1, n);
          ++slot;
          break;
      }
      ++slot;
    }
  }
  return h;
}

// Maps a cotangent on the layer output back onto its pre-activations.
MatrixXd activate_pullback(const LayerSpec& spec, const MatrixXd& z, const MatrixXd& dh) {
  MatrixXd dz(z.rows(), z.cols());
  for (Index n = 0; n < z.cols(); ++n) {
    Index slot = 0;
    for (Index k = 0; k < spec.output_width(); ++k) {
      const double v = z(slot, n);
      const double g = dh(k, n);
      switch (spec.activations[static_cast<std::size_t>(k)]) {
        case Activation::kIdentity:
          dz(slot, n) = g;
          break;
        case Activation::kSine:
          dz(slot, n) = std::cos(v) * g;
          break;
        case Activation::kCosine:
          dz(slot, n) = -std::sin(v) * g;
          break;
        case Activation::kSigmoid: {
          const double s = sigmoid(v);
          dz(slot, n) = s * (1.0 - s) * g;
          break;
        }
        case Activation::kSech:
          dz(slot, n) = -sech(v) * std::tanh(v) * g;
          break;
        case Activation::kProduct:
          dz(slot, n) = z(slot + 1, n) * g;
          dz(slot + 1, n) = v * g;
          ++slot;
          break;
      }
      ++slot;
    }
  }
  return dz;
}

MatrixXd time_row(const VectorXd& times) { return times.transpose(); }

}  // namespace

BasisEvaluations forward(const NetworkParams& params, const NetworkSpec& spec, const VectorXd& times) {
  validate(params, spec);
  MatrixXd h = time_row(times);
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) h = activate(spec.hidden[l], affine(params.hidden[l], h));
  return {affine(params.output, h), times};
}

std::pair<BasisEvaluations, NetworkPullback> forward_with_gradients(const NetworkParams& params,
                                                                    const NetworkSpec& spec,
                                                                    const VectorXd& times) {
  validate(params, spec);
  NetworkPullback pullback;
  pullback.params_ = params;
  pullback.spec_ = spec;
  MatrixXd h = time_row(times);
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    pullback.inputs_.push_back(h);
    MatrixXd z = affine(params.hidden[l], h);
    h = activate(spec.hidden[l], z);
    pullback.pre_.push_back(std::move(z));
  }
  pullback.inputs_.push_back(h);
  BasisEvaluations out{affine(params.output, h), times};
  return {std::move(out), std::move(pullback)};
}

NetworkParams NetworkPullback::operator()(const MatrixXd& cotangent) const {
  const Index n = inputs_.front().cols();
  if (cotangent.rows() != spec_.basis_count || cotangent.cols() != n) {
    throw Error(ErrorKind::kConfig, "cotangent shape does not match the basis evaluations");
  }
  NetworkParams grad = zeros_like(spec_);
  MatrixXd dz = cotangent;
  const MatrixXd& h_last = inputs_.back();
  grad.output.W = dz * h_last.transpose();
  grad.output.b = dz.rowwise().sum();
  MatrixXd dh = params_.output.W.transpose() * dz;
  for (std::size_t l = spec_.hidden.size(); l-- > 0;) {
    dz = activate_pullback(spec_.hidden[l], pre_[l], dh);
    grad.hidden[l].W = dz * inputs_[l].transpose();
    grad.hidden[l].b = dz.rowwise().sum();
    if (l > 0) dh = params_.hidden[l].W.transpose() * dz;
  }
  return grad;
}

NetworkParams init_uniform(const NetworkSpec& spec, const std::vector<InitRange>& ranges, UniformSource& source) {
  const std::size_t layers = spec.hidden.size() + 1;
  if (ranges.empty() || (ranges.size() != 1 && ranges.size() != layers)) {
    throw Error(ErrorKind::kConfig, "init ranges: expected 1 or " + std::to_string(layers) + " entries, got " +
                                        std::to_string(ranges.size()));
  }
  for (const InitRange& r : ranges) {
    if (!(r.weight.lo <= r.weight.hi) || !(r.bias.lo <= r.bias.hi)) {
      throw Error(ErrorKind::kConfig, "init ranges: lower bound exceeds upper bound");
    }
  }
  NetworkParams params = zeros_like(spec);
  auto fill = [&](DenseLayer& layer, const InitRange& range) {
    for (Index i = 0; i < layer.W.rows(); ++i)
      for (Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = source.uniform(range.weight.lo, range.weight.hi);
    for (Index i = 0; i < layer.b.size(); ++i) layer.b(i) = source.uniform(range.bias.lo, range.bias.hi);
  };
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) fill(params.hidden[l], ranges[ranges.size() == 1 ? 0 : l]);
  fill(params.output, ranges.back());
  return params;
}

NetworkParams init_uniform(const NetworkSpec& spec, const std::vector<InitRange>& ranges, std::uint64_t seed) {
  UniformSource source(seed);
  return init_uniform(spec, ranges, source);
}

}  // namespace ceqln
