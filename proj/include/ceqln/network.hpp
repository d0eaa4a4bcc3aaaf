#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ceqln {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Elemental functions of an equation-learner layer. `kProduct` is the only
// binary unit: it multiplies two consecutive pre-activation slots.
enum class Activation : std::uint8_t {
  kIdentity,
  kSine,
  kCosine,
  kSigmoid,
  kProduct,
  kSech,
};

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

constexpr bool is_binary(Activation a) { return a == Activation::kProduct; }

// Numerically stable scalar activations.
double sigmoid(double z);
double sech(double z);

struct LayerSpec {
  std::vector<Activation> activations;

  // Number of pre-activation slots consumed: unary units take one, products two.
  Index pre_width() const;
  Index output_width() const { return static_cast<Index>(activations.size()); }
};

// Expands the `k x {kinds}` notation: the listed block repeated k times.
LayerSpec repeat_layer(int copies, const std::vector<Activation>& kinds);

struct NetworkSpec {
  std::vector<LayerSpec> hidden;
  Index basis_count = 0;  // M - 1 outputs; the design matrix adds the ones column.
};

struct DenseLayer {
  MatrixXd W;
  VectorXd b;
};

// theta = {W, b} for every hidden layer plus the linear output layer.
struct NetworkParams {
  std::vector<DenseLayer> hidden;
  DenseLayer output;

  Index parameter_count() const;
  // Layout: per layer (hidden first, then output) W column-major followed by b.
  VectorXd flatten() const;
  void assign(const VectorXd& flat);
  bool operator==(const NetworkParams& other) const;
};

// Zero-valued parameters with the shapes implied by `spec`.
NetworkParams zeros_like(const NetworkSpec& spec);

// Throws ErrorKind::kConfig naming the first layer whose shape does not chain.
void validate(const NetworkParams& params, const NetworkSpec& spec);

struct BasisEvaluations {
  MatrixXd values;  // (M-1) x N, column n is the network output at times[n]
  VectorXd times;
};

BasisEvaluations forward(const NetworkParams& params, const NetworkSpec& spec, const VectorXd& times);

// Reverse-mode pass. Holds the activations of one forward evaluation and maps a
// cotangent on BasisEvaluations::values to cotangents on every W and b.
class NetworkPullback {
 public:
  NetworkParams operator()(const MatrixXd& cotangent) const;

 private:
  friend std::pair<BasisEvaluations, NetworkPullback> forward_with_gradients(const NetworkParams&,
                                                                             const NetworkSpec&,
                                                                             const VectorXd&);
  NetworkParams params_;
  NetworkSpec spec_;
  std::vector<MatrixXd> inputs_;  // h^(l-1) for each hidden layer and the output layer
  std::vector<MatrixXd> pre_;     // z^(l) for each hidden layer
};

std::pair<BasisEvaluations, NetworkPullback> forward_with_gradients(const NetworkParams& params,
                                                                    const NetworkSpec& spec,
                                                                    const VectorXd& times);

struct UniformRange {
  double lo = -1.0;
  double hi = 1.0;
};

// Initialization range for one layer: weights and biases are drawn separately.
struct InitRange {
  UniformRange weight;
  UniformRange bias;
};

// Uniform doubles in [0, 1) from the top 53 bits of std::mt19937_64, whose
// output sequence is fixed by the standard; draws are reproducible across
// platforms for a given seed.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// `ranges` has one entry per hidden layer plus one for the output layer; a
// single entry applies to all layers.
NetworkParams init_uniform(const NetworkSpec& spec, const std::vector<InitRange>& ranges,
                           std::uint64_t seed);
NetworkParams init_uniform(const NetworkSpec& spec, const std::vector<InitRange>& ranges,
                           UniformSource& source);

}  // namespace ceqln
