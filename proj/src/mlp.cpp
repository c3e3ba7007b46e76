#include "perimeter/mlp.hpp"

#include <cmath>

#include <json.hpp>

#include "perimeter/errors.hpp"

namespace perimeter {

void MlpGradients::scale(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias) b *= s;
}

Mlp::Mlp(std::vector<int> sizes, OutputActivation output, std::mt19937_64& rng,
         double final_scale, double lo, double hi)
    : sizes_(std::move(sizes)), output_(output), lo_(lo), hi_(hi) {
  if (sizes_.size() < 2) throw DomainError("an MLP needs at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw DomainError("layer sizes must be positive");
  }
  if (output_ == OutputActivation::Bounded && !(lo_ < hi_)) {
    throw DomainError("bounded output needs lo < hi");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double r = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-r, r);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) layer.weight(i, j) = u(rng);
    }
    for (int i = 0; i < out; ++i) layer.bias(i) = u(rng);
    if (l + 2 == sizes_.size()) {
      layer.weight *= final_scale;
      layer.bias *= final_scale;
    }
    layers_.push_back(std::move(layer));
  }
}

double Mlp::output_derivative(double z) const {
  if (output_ == OutputActivation::Identity) return 1.0;
  const double t = std::tanh(z);
  return 0.5 * (hi_ - lo_) * (1.0 - t * t);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Tape tape;
  return forward(x, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_size()) {
    throw DomainError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                      std::to_string(input_size()));
  }
  tape.inputs.resize(layers_.size());
  tape.pre.resize(layers_.size());
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    tape.inputs[l] = a;
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    tape.pre[l] = z;
    if (l + 1 < layers_.size()) {
      a = z.cwiseMax(0.0);
    } else if (output_ == OutputActivation::Identity) {
      a = std::move(z);
    } else {
      a = (lo_ + 0.5 * (hi_ - lo_) * (z.array().tanh() + 1.0)).matrix();
    }
  }
  return a;
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_out,
                              MlpGradients* grads) const {
  if (tape.pre.size() != layers_.size()) throw DomainError("tape does not match network");
  Eigen::MatrixXd dz;
  if (output_ == OutputActivation::Identity) {
    dz = grad_out;
  } else {
    dz = grad_out.cwiseProduct(tape.pre.back().unaryExpr([this](double z) {
      return output_derivative(z);
    }));
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (grads) {
      grads->weight[l].noalias() += dz * tape.inputs[l].transpose();
      grads->bias[l] += dz.rowwise().sum();
    }
    Eigen::MatrixXd dx = layers_[l].weight.transpose() * dz;
    if (l == 0) return dx;
    dz = dx.cwiseProduct((tape.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return {};
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (const auto& layer : layers_) {
    g.weight.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  return g;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return sizes_ == other.sizes_ && output_ == other.output_ && lo_ == other.lo_ &&
         hi_ == other.hi_;
}

bool Mlp::finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    for (int i = 0; i < layer.weight.rows(); ++i) {
      for (int j = 0; j < layer.weight.cols(); ++j) flat.push_back(layer.weight(i, j));
    }
    for (int i = 0; i < layer.bias.size(); ++i) flat.push_back(layer.bias(i));
  }
  return flat;
}

void Mlp::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw DomainError("parameter count mismatch");
  std::size_t k = 0;
  for (auto& layer : layers_) {
    for (int i = 0; i < layer.weight.rows(); ++i) {
      for (int j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = flat[k++];
    }
    for (int i = 0; i < layer.bias.size(); ++i) layer.bias(i) = flat[k++];
  }
}

std::vector<double> Mlp::flatten(const MlpGradients& grads) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < grads.weight.size(); ++l) {
    const auto& w = grads.weight[l];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) flat.push_back(w(i, j));
    }
    for (int i = 0; i < grads.bias[l].size(); ++i) flat.push_back(grads.bias[l](i));
  }
  return flat;
}

std::string Mlp::to_json() const {
  nlohmann::json j;
  j["format"] = "perimeter-mlp/1";
  j["sizes"] = sizes_;
  j["hidden"] = "relu";
  j["output"] = output_ == OutputActivation::Identity ? "identity" : "bounded";
  j["lo"] = lo_;
  j["hi"] = hi_;
  j["parameters"] = parameters();
  return j.dump();
}

Mlp Mlp::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network blob: ") + e.what());
  }
  if (j.value("format", "") != "perimeter-mlp/1") throw ConfigError("unknown network format");
  Mlp net;
  net.sizes_ = j.at("sizes").get<std::vector<int>>();
  const std::string out = j.at("output").get<std::string>();
  if (out == "identity") {
    net.output_ = OutputActivation::Identity;
  } else if (out == "bounded") {
    net.output_ = OutputActivation::Bounded;
  } else {
    throw ConfigError("unknown output activation '" + out + "'");
  }
  net.lo_ = j.at("lo").get<double>();
  net.hi_ = j.at("hi").get<double>();
  if (net.sizes_.size() < 2) throw ConfigError("network blob needs at least two layer sizes");
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    net.layers_.push_back(DenseLayer{Eigen::MatrixXd(net.sizes_[l + 1], net.sizes_[l]),
                                     Eigen::VectorXd(net.sizes_[l + 1])});
  }
  const auto flat = j.at("parameters").get<std::vector<double>>();
  net.set_parameters(flat);
  return net;
}

Adam::Adam(const Mlp& net, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void Adam::descend(Mlp& net, const MlpGradients& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr * std::sqrt(c2) / c1;
  const double eps = eps_ * std::sqrt(c2);
  for (std::size_t l = 0; l < grads.weight.size(); ++l) {
    DenseLayer& layer = net.layer(l);
    m_.weight[l] = beta1_ * m_.weight[l] + (1.0 - beta1_) * grads.weight[l];
    v_.weight[l] = beta2_ * v_.weight[l] + (1.0 - beta2_) * grads.weight[l].cwiseAbs2();
    layer.weight.array() -= step * m_.weight[l].array() / (v_.weight[l].array().sqrt() + eps);
    m_.bias[l] = beta1_ * m_.bias[l] + (1.0 - beta1_) * grads.bias[l];
    v_.bias[l] = beta2_ * v_.bias[l] + (1.0 - beta2_) * grads.bias[l].cwiseAbs2();
    layer.bias.array() -= step * m_.bias[l].array() / (v_.bias[l].array().sqrt() + eps);
  }
}

}  // namespace perimeter
