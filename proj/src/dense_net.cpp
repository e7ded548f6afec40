#include "macs/dense_net.hpp"

#include "macs/error.hpp"
#include "macs/rng.hpp"

#include <cmath>
#include <string>

namespace macs {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ConfigError("a network needs at least two layer sizes");
  for (int s : sizes) {
    if (s < 1) throw ConfigError("layer sizes must be positive");
  }
}

}  // namespace

Eigen::Index parameter_count_for(const std::vector<int>& sizes) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<Eigen::Index>(sizes[l + 1]) * (sizes[l] + 1);
  }
  return n;
}

DenseNet::DenseNet(std::vector<int> layer_sizes, OutputActivation output, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), output_(output) {
  check_sizes(sizes_);
  compute_offsets();
  params_ = Eigen::VectorXd::Zero(parameter_count_for(sizes_));
  Rng rng(seed);
  for (int l = 0; l < layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = weights(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
  }
}

DenseNet::DenseNet(std::vector<int> layer_sizes, OutputActivation output, Eigen::VectorXd params)
    : sizes_(std::move(layer_sizes)), output_(output), params_(std::move(params)) {
  check_sizes(sizes_);
  if (params_.size() != parameter_count_for(sizes_)) {
    throw DimensionError("parameter vector does not match layer sizes");
  }
  compute_offsets();
}

void DenseNet::compute_offsets() {
  offsets_.clear();
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
}

Eigen::Map<const Eigen::MatrixXd> DenseNet::weights(int l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}
Eigen::Map<Eigen::MatrixXd> DenseNet::weights(int l) {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}
Eigen::Map<const Eigen::VectorXd> DenseNet::biases(int l) const {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l],
          sizes_[l + 1]};
}
Eigen::Map<Eigen::VectorXd> DenseNet::biases(int l) {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l],
          sizes_[l + 1]};
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& input) const {
  return forward_batch(input, nullptr).col(0);
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& input, Tape* tape) const {
  if (input.rows() != input_size()) {
    throw DimensionError("network input has " + std::to_string(input.rows()) +
                         " rows, expected " + std::to_string(input_size()));
  }
  if (tape) {
    tape->activations.assign(1, input);
    tape->pre_activations.clear();
  }
  Eigen::MatrixXd a = input;
  for (int l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = weights(l) * a;
    z.colwise() += biases(l);
    const bool last = l + 1 == layer_count();
    if (!last) {
      a = z.cwiseMax(0.0);
    } else if (output_ == OutputActivation::Tanh) {
      a = z.array().tanh().matrix();
    } else {
      a = z;
    }
    if (tape) {
      tape->pre_activations.push_back(std::move(z));
      tape->activations.push_back(a);
    }
  }
  return a;
}

DenseNet::Gradients DenseNet::backward(const Tape& tape,
                                       const Eigen::MatrixXd& output_grad) const {
  const auto& acts = tape.activations;
  if (static_cast<int>(acts.size()) != layer_count() + 1) {
    throw DimensionError("tape does not belong to this network");
  }
  if (output_grad.rows() != output_size() || output_grad.cols() != acts.back().cols()) {
    throw DimensionError("output gradient shape does not match the forward batch");
  }
  Gradients g;
  g.params = Eigen::VectorXd::Zero(parameter_count());
  Eigen::MatrixXd delta = output_grad;
  if (output_ == OutputActivation::Tanh) {
    delta.array() *= 1.0 - acts.back().array().square();
  }
  for (int l = layer_count() - 1; l >= 0; --l) {
    Eigen::Map<Eigen::MatrixXd> dw(g.params.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Eigen::VectorXd> db(
        g.params.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l],
        sizes_[l + 1]);
    dw.noalias() = delta * acts[l].transpose();
    db = delta.rowwise().sum();
    Eigen::MatrixXd upstream = weights(l).transpose() * delta;
    if (l > 0) {
      upstream.array() *= (tape.pre_activations[l - 1].array() > 0.0).cast<double>();
    }
    delta = std::move(upstream);
  }
  g.input = std::move(delta);
  return g;
}

DenseNet::Gradients DenseNet::backward(const Eigen::MatrixXd& input,
                                       const Eigen::MatrixXd& output_grad) const {
  Tape tape;
  forward_batch(input, &tape);
  return backward(tape, output_grad);
}

DenseNet init_net(const std::vector<int>& layer_sizes, OutputActivation output,
                  std::uint64_t seed) {
  return DenseNet(layer_sizes, output, seed);
}

}  // namespace macs
