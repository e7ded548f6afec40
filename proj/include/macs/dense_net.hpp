#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace macs {

enum class OutputActivation : std::uint8_t { Identity = 0, Tanh = 1 };

// Fully connected network with ReLU hidden layers. All parameters live in one
// flat vector (per layer: weights column-major out x in, then biases), which is
// the layout shared by the optimizer, Polyak averaging and checkpoints.
//
// Batches are column-per-sample matrices.
class DenseNet {
 public:
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;  // [0] is the input
    std::vector<Eigen::MatrixXd> pre_activations;
  };

  struct Gradients {
    Eigen::VectorXd params;  // summed over the batch
    Eigen::MatrixXd input;
  };

  DenseNet() = default;
  // Glorot-uniform weights, zero biases. Requires at least two layer sizes.
  DenseNet(std::vector<int> layer_sizes, OutputActivation output, std::uint64_t seed);
  DenseNet(std::vector<int> layer_sizes, OutputActivation output, Eigen::VectorXd params);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  OutputActivation output_activation() const { return output_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<const Eigen::MatrixXd> weights(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weights(int layer);
  Eigen::Map<const Eigen::VectorXd> biases(int layer) const;
  Eigen::Map<Eigen::VectorXd> biases(int layer);

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& input, Tape* tape = nullptr) const;

  // Reverse-mode gradients of sum_{ij} output_grad(i,j) * output(i,j).
  Gradients backward(const Tape& tape, const Eigen::MatrixXd& output_grad) const;
  Gradients backward(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output_grad) const;

 private:
  void compute_offsets();

  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::Identity;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> offsets_;
};

Eigen::Index parameter_count_for(const std::vector<int>& layer_sizes);

DenseNet init_net(const std::vector<int>& layer_sizes, OutputActivation output,
                  std::uint64_t seed);

}  // namespace macs
