#include "sdjscc/task_net.hpp"

#include <algorithm>
#include <numeric>

#include "sdjscc/ops.hpp"
#include "sdjscc/optim.hpp"

namespace sdjscc {

namespace {

const TaskArch& validated(const TaskArch& arch) {
  arch.validate();
  return arch;
}

template <typename T>
std::vector<Conv2d<T>> make_blocks(const TaskArch& arch, Rng& rng) {
  std::vector<Conv2d<T>> blocks;
  blocks.reserve(arch.widths.size());
  std::size_t in = arch.in_channels;
  for (std::size_t i = 0; i < arch.widths.size(); ++i) {
    blocks.emplace_back("task.conv" + std::to_string(i), in, arch.widths[i], 3, arch.strides[i], 1, rng);
    in = arch.widths[i];
  }
  return blocks;
}

}  // namespace

void TaskArch::validate() const {
  if (widths.empty() || widths.size() != strides.size()) {
    throw ConfigError("task net: widths and strides must be non-empty and of equal length");
  }
  if (feature_layer >= widths.size()) {
    throw ConfigError("task net: feature layer index " + std::to_string(feature_layer) + " out of range (have " +
                      std::to_string(widths.size()) + " conv blocks)");
  }
  if (num_classes < 2) throw ConfigError("task net: need at least 2 classes");
  std::size_t h = height, w = width;
  for (std::size_t s : strides) {
    if (s < 1) throw ConfigError("task net: stride must be >= 1");
    h = (h + 2 - 3) / s + 1;
    w = (w + 2 - 3) / s + 1;
  }
  if (h == 0 || w == 0) throw ConfigError("task net: input too small");
}

FeatureGeometry TaskArch::feature_geometry() const {
  std::size_t h = height, w = width;
  for (std::size_t i = 0; i <= feature_layer; ++i) {
    h = (h + 2 - 3) / strides[i] + 1;
    w = (w + 2 - 3) / strides[i] + 1;
  }
  return FeatureGeometry{widths[feature_layer], h, w};
}

template <typename T>
TaskNetwork<T>::TaskNetwork(const TaskArch& arch, std::uint64_t seed)
    : arch_(validated(arch)),
      rng_(seed),
      blocks_(make_blocks<T>(arch, rng_)),
      classifier_("task.fc", arch.widths.back(), arch.num_classes, rng_) {}

template <typename T>
Var TaskNetwork<T>::features(Tape<T>& tape, Var x) {
  const Shape& xs = tape.shape(x);
  if (xs.size() != 4 || xs[1] != arch_.in_channels || xs[2] != arch_.height || xs[3] != arch_.width) {
    throw ConfigError("task net: expects [B," + std::to_string(arch_.in_channels) + "," +
                      std::to_string(arch_.height) + "," + std::to_string(arch_.width) + "], got " +
                      shape_string(xs));
  }
  // Pixels are centred to [-0.5, 0.5] before the first conv.
  Var h = add(tape, x, tape.constant(Tensor<T>(xs, T(-0.5))));
  for (std::size_t i = 0; i <= arch_.feature_layer; ++i) h = relu(tape, blocks_[i].forward(tape, h));
  return h;
}

template <typename T>
Var TaskNetwork<T>::head(Tape<T>& tape, Var f) {
  const FeatureGeometry g = geometry();
  const Shape& fs = tape.shape(f);
  if (fs.size() != 4 || fs[1] != g.K || fs[2] != g.M || fs[3] != g.N) {
    throw ConfigError("task net: feature stack must be [B," + std::to_string(g.K) + "," + std::to_string(g.M) +
                      "," + std::to_string(g.N) + "], got " + shape_string(fs));
  }
  Var h = f;
  for (std::size_t i = arch_.feature_layer + 1; i < blocks_.size(); ++i) h = relu(tape, blocks_[i].forward(tape, h));
  return classifier_.forward(tape, global_avg_pool(tape, h));
}

template <typename T>
typename TaskNetwork<T>::Outputs TaskNetwork<T>::forward(Tape<T>& tape, Var x) {
  Var f = features(tape, x);
  return Outputs{f, head(tape, f)};
}

template <typename T>
Tensor<T> TaskNetwork<T>::perceive(const Tensor<T>& x) {
  Tape<T> tape;
  tape.set_grad_enabled(false);
  return tape.value(forward(tape, tape.constant(x)).logits);
}

template <typename T>
Tensor<T> TaskNetwork<T>::extract_features(const Tensor<T>& x) {
  Tape<T> tape;
  tape.set_grad_enabled(false);
  return tape.value(features(tape, tape.constant(x)));
}

template <typename T>
void TaskNetwork<T>::freeze() {
  frozen_ = true;
  for (Parameter<T>* p : parameters()) {
    p->frozen = true;
    p->tensor.requires_grad = false;
    p->tensor.grad.reset();
  }
}

template <typename T>
ParameterList<T> TaskNetwork<T>::parameters() {
  ParameterList<T> out;
  for (auto& b : blocks_) b.collect(out);
  classifier_.collect(out);
  require_unique_names(out);
  return out;
}

template <typename T>
Checkpoint TaskNetwork<T>::checkpoint(CheckpointMeta meta) {
  return make_checkpoint(parameters(), meta);
}

template <typename T>
void TaskNetwork<T>::load(const Checkpoint& ckpt) {
  load_parameters(ckpt, parameters());
}

TaskArch task_arch_for(const Dataset& data) {
  TaskArch arch;
  arch.in_channels = data.channels;
  arch.height = data.height;
  arch.width = data.width;
  arch.num_classes = data.num_classes;
  return arch;
}

std::vector<std::size_t> predict(TaskNetwork<float>& net, const Dataset& data, std::size_t batch) {
  std::vector<std::size_t> out;
  out.reserve(data.count);
  for (std::size_t start = 0; start < data.count; start += batch) {
    const std::size_t end = std::min(data.count, start + batch);
    const Tensor<float> logits = net.perceive(data.range<float>(start, end));
    const std::size_t C = logits.shape[1];
    for (std::size_t b = 0; b < end - start; ++b) {
      const float* row = logits.data.data() + b * C;
      out.push_back(static_cast<std::size_t>(std::max_element(row, row + C) - row));
    }
  }
  return out;
}

double accuracy_of(const std::vector<std::size_t>& predictions, const Dataset& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == data.labels[i] ? 1 : 0;
  return predictions.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(predictions.size());
}

PretrainResult pretrain_task(const Dataset& train, const Dataset& test, const TaskArch& arch,
                             const TaskTrainConfig& config) {
  if (train.count == 0) throw ConfigError("pretrain_task: empty training set");
  if (config.batch_size == 0 || config.epochs == 0) throw ConfigError("pretrain_task: batch_size and epochs must be >= 1");
  PretrainResult result;
  result.net = std::make_unique<TaskNetwork<float>>(arch, config.seed);
  TaskNetwork<float>& net = *result.net;
  ParameterList<float> params = net.parameters();
  Adam<float> adam(AdamOptions{.lr = config.lr});
  Rng rng(config.seed ^ 0x7a5c0ffeeULL);
  std::vector<std::size_t> order(train.count);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + config.batch_size <= train.count; start += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start, config.batch_size);
      Tape<float> tape;
      Var x = tape.constant(train.batch<float>(idx));
      const std::vector<std::size_t> labels = train.labels_of(idx);
      Var loss = cross_entropy(tape, net.forward(tape, x).logits, labels);
      tape.backward(loss);
      adam.step(params);
      total += tape.value(loss)[0];
      ++batches;
    }
    result.epoch_losses.push_back(batches ? total / static_cast<double>(batches) : 0.0);
  }
  net.freeze();
  result.train_accuracy = accuracy_of(predict(net, train), train);
  result.test_accuracy = accuracy_of(predict(net, test), test);
  // Twice chance, capped halfway between chance and 1 so two-class tasks
  // have a reachable gate.
  const double chance = 1.0 / static_cast<double>(arch.num_classes);
  const double gate = std::min(2.0 * chance, 0.5 * (1.0 + chance));
  if (result.test_accuracy < gate) {
    throw TrainingError("pretrain_task: test accuracy " + std::to_string(result.test_accuracy) +
                        " is below the gate " + std::to_string(gate));
  }
  return result;
}

template class TaskNetwork<float>;
template class TaskNetwork<double>;

}  // namespace sdjscc
