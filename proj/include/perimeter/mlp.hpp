#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace perimeter {

enum class OutputActivation {
  Identity,
  Bounded,  // lo + (hi - lo) (tanh(z) + 1) / 2
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Parameter-shaped gradient accumulator.
struct MlpGradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  void scale(double s);
};

/// Feed-forward net with ReLU hidden layers. Batches are column-major:
/// one sample per column.
class Mlp {
 public:
  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  };

  /// Uniform fan-in init U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the final layer
  /// is multiplied by `final_scale`.
  Mlp(std::vector<int> sizes, OutputActivation output, std::mt19937_64& rng,
      double final_scale = 1.0, double lo = 0.0, double hi = 1.0);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  OutputActivation output_activation() const { return output_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  /// Back-propagates dL/dy through the taped pass; accumulates parameter
  /// gradients into `grads` when given and returns dL/dx.
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& grad_out,
                           MlpGradients* grads) const;

  MlpGradients zero_gradients() const;
  bool same_architecture(const Mlp& other) const;
  bool finite() const;

  std::size_t parameter_count() const;
  /// Flat parameter vector: per layer, weights row-major then biases.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  static std::vector<double> flatten(const MlpGradients& grads);

  /// Architecture header plus flat parameters.
  std::string to_json() const;
  static Mlp from_json(const std::string& text);

 private:
  Mlp() = default;
  double output_derivative(double z) const;

  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::Identity;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::vector<DenseLayer> layers_;
};

class Adam {
 public:
  explicit Adam(const Mlp& net, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// theta -= lr * m_hat / (sqrt(v_hat) + eps)
  void descend(Mlp& net, const MlpGradients& grads, double lr);
  std::int64_t steps() const { return t_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  MlpGradients m_;
  MlpGradients v_;
};

}  // namespace perimeter
