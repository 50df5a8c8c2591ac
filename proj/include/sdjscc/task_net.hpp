#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "sdjscc/checkpoint.hpp"
#include "sdjscc/dataset.hpp"
#include "sdjscc/layers.hpp"

namespace sdjscc {

struct FeatureGeometry {
  std::size_t K = 0;
  std::size_t M = 0;
  std::size_t N = 0;
};

// Conv blocks (conv3x3 + relu) -> global average pool -> linear. The feature
// stack is the post-relu output of block `feature_layer` (default: the last).
struct TaskArch {
  std::size_t in_channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = 4;
  std::vector<std::size_t> widths = {16, 32, 32};
  std::vector<std::size_t> strides = {2, 2, 1};
  std::size_t feature_layer = 2;

  void validate() const;
  FeatureGeometry feature_geometry() const;
};

template <typename T>
class TaskNetwork {
 public:
  struct Outputs {
    Var features;  // [B,K,M,N]
    Var logits;    // [B,C]
  };

  TaskNetwork(const TaskArch& arch, std::uint64_t seed);

  TaskNetwork(const TaskNetwork&) = delete;
  TaskNetwork& operator=(const TaskNetwork&) = delete;

  // Input through the feature layer.
  Var features(Tape<T>& tape, Var x);
  // Feature layer through the logits.
  Var head(Tape<T>& tape, Var features);
  // One pass producing both.
  Outputs forward(Tape<T>& tape, Var x);

  // Gradient-free logits [B,C] and feature stack [B,K,M,N].
  Tensor<T> perceive(const Tensor<T>& x);
  Tensor<T> extract_features(const Tensor<T>& x);

  // After freeze() every parameter enters tapes as a constant.
  void freeze();
  bool frozen() const { return frozen_; }

  ParameterList<T> parameters();
  std::uint64_t hash() { return parameter_hash(parameters()); }
  const TaskArch& arch() const { return arch_; }
  FeatureGeometry geometry() const { return arch_.feature_geometry(); }

  Checkpoint checkpoint(CheckpointMeta meta);
  void load(const Checkpoint& ckpt);

 private:
  TaskArch arch_;
  Rng rng_;
  std::vector<Conv2d<T>> blocks_;
  Linear<T> classifier_;
  bool frozen_ = false;
};

struct TaskTrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 3e-3;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  std::unique_ptr<TaskNetwork<float>> net;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> epoch_losses;
};

// Cross-entropy training with Adam; returns the frozen network. Throws
// TrainingError when test accuracy does not reach twice chance level.
PretrainResult pretrain_task(const Dataset& train, const Dataset& test, const TaskArch& arch,
                             const TaskTrainConfig& config);

// Argmax predictions of `net` over a whole dataset, in order.
std::vector<std::size_t> predict(TaskNetwork<float>& net, const Dataset& data, std::size_t batch = 100);

double accuracy_of(const std::vector<std::size_t>& predictions, const Dataset& data);

TaskArch task_arch_for(const Dataset& data);

extern template class TaskNetwork<float>;
extern template class TaskNetwork<double>;

}  // namespace sdjscc
