#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hadid/rng.hpp"
#include "hadid/vendor_json.hpp"

namespace hadid {

inline constexpr int kModelFormatVersion = 1;

enum class ForwardMode { Train, Infer };

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;               // epochs without validation improvement
    double validation_fraction = 0.15;
};

// Fully-connected feed-forward network: ReLU hidden layers, softmax output,
// inverted dropout on hidden activations. Inputs are z-scored with
// statistics stored in the model, so a serialized model is self-contained.
class Mlp {
  public:
    // He-initialized weights (zero-mean Gaussian, variance 2/fan_in), zero
    // biases; fully determined by seed.
    static Mlp init(const std::vector<int>& layer_sizes, double dropout_rate, uint64_t seed);

    // Class probabilities. Train mode applies inverted dropout and needs an
    // rng; infer mode is deterministic.
    std::vector<double> forward(std::span<const double> x, ForwardMode mode,
                                RandomStream* rng = nullptr) const;

    // Per-layer activations (input layer first, probabilities last).
    std::vector<std::vector<double>> forward_activations(std::span<const double> x,
                                                         ForwardMode mode,
                                                         RandomStream* rng = nullptr) const;

    int input_size() const { return layer_sizes_.front(); }
    int output_size() const { return layer_sizes_.back(); }
    const std::vector<int>& layer_sizes() const { return layer_sizes_; }
    double dropout_rate() const { return dropout_rate_; }
    uint64_t rng_seed() const { return rng_seed_; }

    void set_standardization(std::vector<double> mean, std::vector<double> std);
    const std::vector<double>& standardize_mean() const { return mean_; }
    const std::vector<double>& standardize_std() const { return std_; }

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

  private:
    friend struct MlpAccess;

    std::vector<int> layer_sizes_;
    double dropout_rate_ = 0.0;
    uint64_t rng_seed_ = 0;
    std::vector<std::vector<double>> weights_;  // [layer][out * in_size + in]
    std::vector<std::vector<double>> biases_;   // [layer][out]
    std::vector<double> mean_, std_;            // input standardization
};

// Cross-entropy against a one-hot target; probabilities are clamped to
// >= 1e-12 before the log. Throws InvalidTarget unless exactly one t_j is 1.
double cross_entropy(std::span<const double> probabilities, std::span<const double> one_hot);

struct TrainResult {
    Mlp model;                       // parameters from the best validation epoch
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch (empty when no validation split)
    int best_epoch = -1;
};

// Mini-batch SGD with momentum, epoch-shuffled batches, early stopping on
// held-out validation cross-entropy. Deterministic given (model, data, seed).
TrainResult train(const Mlp& model, const std::vector<std::vector<double>>& inputs,
                  const std::vector<int>& targets, const TrainConfig& config, uint64_t seed);

// Fraction of samples whose argmax probability matches the target.
double accuracy(const Mlp& model, const std::vector<std::vector<double>>& inputs,
                const std::vector<int>& targets);

// Max relative error between analytic gradients and central finite
// differences over a random subsample of at least 200 parameters (all
// parameters when the network is smaller). Dropout is disabled.
double gradient_check(const Mlp& model, std::span<const double> x,
                      std::span<const double> one_hot, double epsilon, uint64_t seed = 1);

}  // namespace hadid
