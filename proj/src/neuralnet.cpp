#include "hadid/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "hadid/error.hpp"

namespace hadid {

namespace {

void softmax_inplace(std::vector<double>& z) {
    double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

}  // namespace

// Internal access for training/gradient code.
struct MlpAccess {
    static std::vector<std::vector<double>>& weights(Mlp& m) { return m.weights_; }
    static std::vector<std::vector<double>>& biases(Mlp& m) { return m.biases_; }
    static const std::vector<std::vector<double>>& weights(const Mlp& m) { return m.weights_; }
    static const std::vector<std::vector<double>>& biases(const Mlp& m) { return m.biases_; }

    struct Trace {
        std::vector<std::vector<double>> activations;  // a[0] standardized input .. a[L] probs
        std::vector<std::vector<double>> pre_relu;     // z per layer
        std::vector<std::vector<double>> drop_scale;   // per hidden layer, 0 or 1/(1-rate)
    };

    static Trace run_forward(const Mlp& m, std::span<const double> x, ForwardMode mode,
                             RandomStream* rng);
    static void backprop(const Mlp& m, const Trace& trace, std::span<const double> one_hot,
                         std::vector<std::vector<double>>& grad_w,
                         std::vector<std::vector<double>>& grad_b);
};

MlpAccess::Trace MlpAccess::run_forward(const Mlp& m, std::span<const double> x, ForwardMode mode,
                                        RandomStream* rng) {
    if (static_cast<int>(x.size()) != m.input_size())
        raise(Errc::DimensionMismatch, "input size " + std::to_string(x.size()) + " != " +
                                           std::to_string(m.input_size()));

    const auto& sizes = m.layer_sizes_;
    const size_t num_layers = sizes.size() - 1;
    const bool dropping = mode == ForwardMode::Train && m.dropout_rate_ > 0.0;

    RandomStream fallback(m.rng_seed_);
    RandomStream* mask_rng = rng != nullptr ? rng : &fallback;

    Trace trace;
    trace.activations.resize(num_layers + 1);
    trace.pre_relu.resize(num_layers);
    trace.drop_scale.resize(num_layers);

    std::vector<double>& input = trace.activations[0];
    input.assign(x.begin(), x.end());
    if (!m.mean_.empty())
        for (size_t i = 0; i < input.size(); ++i) input[i] = (input[i] - m.mean_[i]) / m.std_[i];

    for (size_t l = 0; l < num_layers; ++l) {
        const int n_in = sizes[l];
        const int n_out = sizes[l + 1];
        const std::vector<double>& a = trace.activations[l];
        const std::vector<double>& w = m.weights_[l];
        const std::vector<double>& b = m.biases_[l];

        std::vector<double>& z = trace.pre_relu[l];
        z.resize(n_out);
        for (int j = 0; j < n_out; ++j) {
            double acc = b[j];
            const double* row = w.data() + static_cast<size_t>(j) * n_in;
            for (int i = 0; i < n_in; ++i) acc += row[i] * a[i];
            z[j] = acc;
        }

        std::vector<double>& out = trace.activations[l + 1];
        out = z;
        if (l + 1 < num_layers) {
            for (double& v : out) v = std::max(0.0, v);
            if (dropping) {
                const double keep = 1.0 - m.dropout_rate_;
                std::vector<double>& scale = trace.drop_scale[l];
                scale.resize(n_out);
                for (int j = 0; j < n_out; ++j) {
                    scale[j] = mask_rng->uniform01() < keep ? 1.0 / keep : 0.0;
                    out[j] *= scale[j];
                }
            }
        } else {
            softmax_inplace(out);
        }
    }
    return trace;
}

void MlpAccess::backprop(const Mlp& m, const Trace& trace, std::span<const double> one_hot,
                         std::vector<std::vector<double>>& grad_w,
                         std::vector<std::vector<double>>& grad_b) {
    const auto& sizes = m.layer_sizes_;
    const size_t num_layers = sizes.size() - 1;

    // Softmax + cross-entropy: dC/dz at the output is p - t.
    std::vector<double> delta = trace.activations[num_layers];
    for (size_t j = 0; j < delta.size(); ++j) delta[j] -= one_hot[j];

    for (size_t l = num_layers; l-- > 0;) {
        const int n_in = sizes[l];
        const int n_out = sizes[l + 1];
        const std::vector<double>& a = trace.activations[l];

        std::vector<double>& gw = grad_w[l];
        std::vector<double>& gb = grad_b[l];
        for (int j = 0; j < n_out; ++j) {
            gb[j] += delta[j];
            double* row = gw.data() + static_cast<size_t>(j) * n_in;
            const double dj = delta[j];
            for (int i = 0; i < n_in; ++i) row[i] += dj * a[i];
        }

        if (l == 0) break;
        std::vector<double> next(n_in, 0.0);
        const std::vector<double>& w = m.weights_[l];
        for (int j = 0; j < n_out; ++j) {
            const double dj = delta[j];
            const double* row = w.data() + static_cast<size_t>(j) * n_in;
            for (int i = 0; i < n_in; ++i) next[i] += row[i] * dj;
        }
        // Through ReLU (and the dropout scaling when a mask was applied).
        // At exactly zero the subgradient 1/2 is used; it is the value a
        // central finite difference measures across the kink.
        const std::vector<double>& z = trace.pre_relu[l - 1];
        const std::vector<double>& scale = trace.drop_scale[l - 1];
        for (int i = 0; i < n_in; ++i) {
            next[i] *= z[i] > 0.0 ? 1.0 : (z[i] == 0.0 ? 0.5 : 0.0);
            if (!scale.empty()) next[i] *= scale[i];
        }
        delta = std::move(next);
    }
}

Mlp Mlp::init(const std::vector<int>& layer_sizes, double dropout_rate, uint64_t seed) {
    if (layer_sizes.size() < 3)
        raise(Errc::InvalidTopology, "need input, at least one hidden, and output layer");
    for (int s : layer_sizes)
        if (s < 1) raise(Errc::InvalidTopology, "all layer sizes must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        raise(Errc::InvalidTopology, "dropout rate must be in [0, 1)");

    Mlp m;
    m.layer_sizes_ = layer_sizes;
    m.dropout_rate_ = dropout_rate;
    m.rng_seed_ = seed;

    RandomStream rng(seed);
    const size_t num_layers = layer_sizes.size() - 1;
    m.weights_.resize(num_layers);
    m.biases_.resize(num_layers);
    for (size_t l = 0; l < num_layers; ++l) {
        const int n_in = layer_sizes[l];
        const int n_out = layer_sizes[l + 1];
        const double stddev = std::sqrt(2.0 / n_in);
        m.weights_[l].resize(static_cast<size_t>(n_out) * n_in);
        for (double& w : m.weights_[l]) w = rng.normal(0.0, stddev);
        m.biases_[l].assign(n_out, 0.0);
    }
    return m;
}

void Mlp::set_standardization(std::vector<double> mean, std::vector<double> std) {
    if (static_cast<int>(mean.size()) != input_size() || mean.size() != std.size())
        raise(Errc::DimensionMismatch, "standardization vectors must match the input size");
    mean_ = std::move(mean);
    std_ = std::move(std);
}

std::vector<double> Mlp::forward(std::span<const double> x, ForwardMode mode,
                                 RandomStream* rng) const {
    return MlpAccess::run_forward(*this, x, mode, rng).activations.back();
}

std::vector<std::vector<double>> Mlp::forward_activations(std::span<const double> x,
                                                          ForwardMode mode,
                                                          RandomStream* rng) const {
    return MlpAccess::run_forward(*this, x, mode, rng).activations;
}

nlohmann::json Mlp::to_json() const {
    nlohmann::json j;
    j["format"] = "hadid-mlp";
    j["version"] = kModelFormatVersion;
    j["layer_sizes"] = layer_sizes_;
    j["dropout_rate"] = dropout_rate_;
    j["rng_seed"] = rng_seed_;
    j["standardize_mean"] = mean_;
    j["standardize_std"] = std_;
    j["weights"] = weights_;
    j["biases"] = biases_;
    return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != "hadid-mlp")
        raise(Errc::UnsupportedFormat, "not a serialized mlp document");
    if (!j.contains("version") || j["version"].get<int>() != kModelFormatVersion)
        raise(Errc::UnsupportedFormat,
              "model format version mismatch (expected " + std::to_string(kModelFormatVersion) + ")");

    Mlp m;
    m.layer_sizes_ = j.at("layer_sizes").get<std::vector<int>>();
    m.dropout_rate_ = j.at("dropout_rate").get<double>();
    m.rng_seed_ = j.at("rng_seed").get<uint64_t>();
    m.mean_ = j.at("standardize_mean").get<std::vector<double>>();
    m.std_ = j.at("standardize_std").get<std::vector<double>>();
    m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();

    if (m.layer_sizes_.size() < 2 || m.weights_.size() != m.layer_sizes_.size() - 1 ||
        m.biases_.size() != m.weights_.size())
        raise(Errc::CorruptHeader, "inconsistent mlp document");
    for (size_t l = 0; l + 1 < m.layer_sizes_.size(); ++l) {
        size_t expect_w = static_cast<size_t>(m.layer_sizes_[l]) * m.layer_sizes_[l + 1];
        if (m.weights_[l].size() != expect_w ||
            m.biases_[l].size() != static_cast<size_t>(m.layer_sizes_[l + 1]))
            raise(Errc::CorruptHeader, "weight shapes do not match layer sizes");
    }
    return m;
}

double cross_entropy(std::span<const double> probabilities, std::span<const double> one_hot) {
    if (probabilities.size() != one_hot.size())
        raise(Errc::DimensionMismatch, "probability and target sizes differ");
    int ones = 0;
    for (double t : one_hot) {
        if (t == 1.0) ++ones;
        else if (t != 0.0) raise(Errc::InvalidTarget, "target entries must be 0 or 1");
    }
    if (ones != 1) raise(Errc::InvalidTarget, "target must contain exactly one 1");

    double c = 0.0;
    for (size_t j = 0; j < probabilities.size(); ++j)
        if (one_hot[j] == 1.0) c -= std::log(std::max(probabilities[j], 1e-12));
    return c;
}

double accuracy(const Mlp& model, const std::vector<std::vector<double>>& inputs,
                const std::vector<int>& targets) {
    if (inputs.empty()) return 0.0;
    size_t correct = 0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        std::vector<double> p = model.forward(inputs[i], ForwardMode::Infer);
        int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
        if (pred == targets[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(inputs.size());
}

TrainResult train(const Mlp& initial, const std::vector<std::vector<double>>& inputs,
                  const std::vector<int>& targets, const TrainConfig& cfg, uint64_t seed) {
    if (inputs.empty() || inputs.size() != targets.size())
        raise(Errc::EmptyDataset, "training data empty or misaligned");
    if (cfg.learning_rate <= 0.0 || cfg.momentum < 0.0 || cfg.momentum >= 1.0 ||
        cfg.batch_size < 1 || cfg.patience < 1 || cfg.validation_fraction < 0.0 ||
        cfg.validation_fraction >= 1.0)
        raise(Errc::InvalidConfig, "invalid train config");

    const int num_classes = initial.output_size();
    std::set<int> present(targets.begin(), targets.end());
    for (int t : targets)
        if (t < 0 || t >= num_classes) raise(Errc::InvalidTarget, "target class out of range");
    if (present.size() < 2) raise(Errc::SingleClassData, "training data covers a single class");

    RandomStream rng(seed);

    // Stratified validation split: floor(fraction * n_c) per class, so every
    // class keeps at least one training sample.
    std::vector<size_t> train_idx, val_idx;
    {
        std::vector<std::vector<size_t>> per_class(num_classes);
        for (size_t i = 0; i < targets.size(); ++i) per_class[targets[i]].push_back(i);
        for (auto& idxs : per_class) {
            rng.shuffle(idxs);
            size_t n_val = static_cast<size_t>(cfg.validation_fraction * idxs.size());
            for (size_t i = 0; i < idxs.size(); ++i)
                (i < n_val ? val_idx : train_idx).push_back(idxs[i]);
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    }

    // Standardization from the training portion.
    const int dim = initial.input_size();
    std::vector<double> mean(dim, 0.0), std_dev(dim, 0.0);
    for (size_t i : train_idx) {
        if (static_cast<int>(inputs[i].size()) != dim)
            raise(Errc::DimensionMismatch, "input row size mismatch");
        for (int d = 0; d < dim; ++d) mean[d] += inputs[i][d];
    }
    for (int d = 0; d < dim; ++d) mean[d] /= static_cast<double>(train_idx.size());
    for (size_t i : train_idx)
        for (int d = 0; d < dim; ++d) {
            double dv = inputs[i][d] - mean[d];
            std_dev[d] += dv * dv;
        }
    for (int d = 0; d < dim; ++d) {
        std_dev[d] = std::sqrt(std_dev[d] / static_cast<double>(train_idx.size()));
        if (std_dev[d] < 1e-12) std_dev[d] = 1.0;  // constant feature
    }

    Mlp model = initial;
    model.set_standardization(mean, std_dev);

    auto& weights = MlpAccess::weights(model);
    auto& biases = MlpAccess::biases(model);
    const size_t num_layers = weights.size();

    std::vector<std::vector<double>> vel_w(num_layers), vel_b(num_layers);
    std::vector<std::vector<double>> grad_w(num_layers), grad_b(num_layers);
    for (size_t l = 0; l < num_layers; ++l) {
        vel_w[l].assign(weights[l].size(), 0.0);
        vel_b[l].assign(biases[l].size(), 0.0);
        grad_w[l].assign(weights[l].size(), 0.0);
        grad_b[l].assign(biases[l].size(), 0.0);
    }

    auto one_hot_of = [&](int cls) {
        std::vector<double> t(num_classes, 0.0);
        t[cls] = 1.0;
        return t;
    };

    auto mean_loss = [&](const std::vector<size_t>& idxs) {
        double total = 0.0;
        for (size_t i : idxs) {
            std::vector<double> p = model.forward(inputs[i], ForwardMode::Infer);
            total += cross_entropy(p, one_hot_of(targets[i]));
        }
        return total / static_cast<double>(idxs.size());
    };

    TrainResult result;
    Mlp best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since_best = 0;

    std::vector<size_t> order = train_idx;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            for (size_t l = 0; l < num_layers; ++l) {
                std::fill(grad_w[l].begin(), grad_w[l].end(), 0.0);
                std::fill(grad_b[l].begin(), grad_b[l].end(), 0.0);
            }
            for (size_t bi = start; bi < stop; ++bi) {
                size_t i = order[bi];
                auto trace = MlpAccess::run_forward(model, inputs[i], ForwardMode::Train, &rng);
                std::vector<double> t = one_hot_of(targets[i]);
                epoch_loss += cross_entropy(trace.activations.back(), t);
                MlpAccess::backprop(model, trace, t, grad_w, grad_b);
            }
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            for (size_t l = 0; l < num_layers; ++l) {
                for (size_t i = 0; i < weights[l].size(); ++i) {
                    vel_w[l][i] = cfg.momentum * vel_w[l][i] -
                                  cfg.learning_rate * grad_w[l][i] * inv_batch;
                    weights[l][i] += vel_w[l][i];
                }
                for (size_t i = 0; i < biases[l].size(); ++i) {
                    vel_b[l][i] = cfg.momentum * vel_b[l][i] -
                                  cfg.learning_rate * grad_b[l][i] * inv_batch;
                    biases[l][i] += vel_b[l][i];
                }
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            raise(Errc::NonFiniteLoss, "training diverged at epoch " + std::to_string(epoch));
        result.train_loss.push_back(epoch_loss);

        if (!val_idx.empty()) {
            double val = mean_loss(val_idx);
            result.val_loss.push_back(val);
            if (val < best_val - 1e-12) {
                best_val = val;
                best = model;
                best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }

    if (val_idx.empty() || best_epoch < 0) {
        result.model = std::move(model);
        result.best_epoch = static_cast<int>(result.train_loss.size()) - 1;
    } else {
        result.model = std::move(best);
        result.best_epoch = best_epoch;
    }
    return result;
}

double gradient_check(const Mlp& input_model, std::span<const double> x,
                      std::span<const double> one_hot, double epsilon, uint64_t seed) {
    Mlp model = input_model;  // finite differences perturb a private copy

    auto loss_at = [&]() {
        std::vector<double> p = model.forward(x, ForwardMode::Infer);
        return cross_entropy(p, one_hot);
    };

    auto trace = MlpAccess::run_forward(model, x, ForwardMode::Infer, nullptr);
    const size_t num_layers = MlpAccess::weights(model).size();
    std::vector<std::vector<double>> grad_w(num_layers), grad_b(num_layers);
    for (size_t l = 0; l < num_layers; ++l) {
        grad_w[l].assign(MlpAccess::weights(model)[l].size(), 0.0);
        grad_b[l].assign(MlpAccess::biases(model)[l].size(), 0.0);
    }
    MlpAccess::backprop(model, trace, one_hot, grad_w, grad_b);

    // Flat index space over all weights then all biases.
    std::vector<std::pair<bool, std::pair<size_t, size_t>>> params;
    for (size_t l = 0; l < num_layers; ++l) {
        for (size_t i = 0; i < grad_w[l].size(); ++i) params.push_back({true, {l, i}});
        for (size_t i = 0; i < grad_b[l].size(); ++i) params.push_back({false, {l, i}});
    }

    RandomStream rng(seed);
    std::vector<size_t> chosen;
    if (params.size() <= 200) {
        chosen.resize(params.size());
        std::iota(chosen.begin(), chosen.end(), 0);
    } else {
        std::vector<size_t> all(params.size());
        std::iota(all.begin(), all.end(), 0);
        rng.shuffle(all);
        chosen.assign(all.begin(), all.begin() + 200);
    }

    double max_rel = 0.0;
    for (size_t pi : chosen) {
        auto [is_weight, loc] = params[pi];
        double& theta = is_weight ? MlpAccess::weights(model)[loc.first][loc.second]
                                  : MlpAccess::biases(model)[loc.first][loc.second];
        const double saved = theta;
        theta = saved + epsilon;
        double loss_plus = loss_at();
        theta = saved - epsilon;
        double loss_minus = loss_at();
        theta = saved;

        double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        double analytic = is_weight ? grad_w[loc.first][loc.second] : grad_b[loc.first][loc.second];
        double denom = std::max({1e-6, std::abs(numeric), std::abs(analytic)});
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
    }
    return max_rel;
}

}  // namespace hadid
