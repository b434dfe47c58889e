#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "greenladder/error.hpp"
#include "greenladder/random.hpp"
#include "greenladder/ml/features.hpp"

namespace greenladder::ml {

struct MlpParams {
    std::vector<int> hidden{64};
    double learning_rate = 0.001;
    int max_epochs = 500;
    int batch_size = 32;
    // Training stops once the epoch loss has failed to improve on the best
    // seen by more than `tol` for `n_iter_no_change` consecutive epochs.
    double tol = 1e-4;
    int n_iter_no_change = 10;
    std::uint64_t seed = 0;
};

/// Fully connected regressor: ReLU hidden layers, linear scalar output,
/// loss = sum((yhat - y)^2) / (2 n), trained with Adam on shuffled minibatches.
class Mlp {
public:
    struct Layer {
        Eigen::MatrixXd weights; // out x in
        Eigen::VectorXd bias;    // out
    };

    Mlp() = default;
    explicit Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {}

    /// Glorot-uniform initialization of weights and biases.
    static Mlp initialize(std::span<const int> hidden, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<Layer> layers;
        Eigen::Index in = static_cast<Eigen::Index>(kNumFeatures);
        auto add = [&](Eigen::Index out) {
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            Layer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
            for (Eigen::Index r = 0; r < out; ++r) {
                for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = rng.uniform(-bound, bound);
            }
            for (Eigen::Index r = 0; r < out; ++r) l.bias(r) = rng.uniform(-bound, bound);
            layers.push_back(std::move(l));
            in = out;
        };
        for (int h : hidden) {
            if (h < 1) throw Error(ErrorCode::InvalidArgument, "hidden layer size must be positive");
            add(h);
        }
        add(1);
        return Mlp(std::move(layers));
    }

    const std::vector<Layer>& layers() const { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
        return n;
    }

    /// Flattened parameters: per layer, weights column-major then bias.
    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto& l : layers_) {
            p.insert(p.end(), l.weights.data(), l.weights.data() + l.weights.size());
            p.insert(p.end(), l.bias.data(), l.bias.data() + l.bias.size());
        }
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count()) throw Error(ErrorCode::InvalidArgument, "parameter count mismatch");
        std::size_t k = 0;
        for (auto& l : layers_) {
            std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k), l.weights.size(), l.weights.data());
            k += static_cast<std::size_t>(l.weights.size());
            std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k), l.bias.size(), l.bias.data());
            k += static_cast<std::size_t>(l.bias.size());
        }
    }

    /// Inputs as columns (features x batch); returns one prediction per column.
    Eigen::RowVectorXd forward(const Eigen::MatrixXd& inputs) const {
        Eigen::MatrixXd a = inputs;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            Eigen::MatrixXd z = layers_[i].weights * a;
            z.colwise() += layers_[i].bias;
            a = i + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
        }
        return a.row(0);
    }

    double predict(const FeatureRow& x) const {
        Eigen::MatrixXd in(static_cast<Eigen::Index>(kNumFeatures), 1);
        for (std::size_t f = 0; f < kNumFeatures; ++f) in(static_cast<Eigen::Index>(f), 0) = x[f];
        return forward(in)(0);
    }

    /// Loss over the batch and its gradient, one entry per layer.
    double loss_and_gradient(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets,
                             std::vector<Layer>& grads) const {
        const auto L = layers_.size();
        const double n = static_cast<double>(inputs.cols());
        std::vector<Eigen::MatrixXd> acts(L + 1), pre(L);
        acts[0] = inputs;
        for (std::size_t i = 0; i < L; ++i) {
            pre[i] = layers_[i].weights * acts[i];
            pre[i].colwise() += layers_[i].bias;
            acts[i + 1] = i + 1 < L ? Eigen::MatrixXd(pre[i].cwiseMax(0.0)) : pre[i];
        }
        const Eigen::RowVectorXd err = acts[L].row(0) - targets;
        const double loss = err.squaredNorm() / (2.0 * n);

        grads.resize(L);
        Eigen::MatrixXd delta = err / n; // dLoss/dz for the output layer, 1 x batch
        for (std::size_t i = L; i-- > 0;) {
            grads[i].weights = delta * acts[i].transpose();
            grads[i].bias = delta.rowwise().sum();
            if (i > 0) {
                Eigen::MatrixXd back = layers_[i].weights.transpose() * delta;
                delta = back.cwiseProduct((pre[i - 1].array() > 0.0).cast<double>().matrix());
            }
        }
        return loss;
    }

    /// Adam training on already-scaled data. Returns the per-epoch loss curve.
    std::vector<double> train(std::span<const FeatureRow> X, std::span<const double> y, const MlpParams& params) {
        const std::size_t n = X.size();
        if (n == 0 || n != y.size()) throw Error(ErrorCode::TooFewSamples, "mlp needs paired samples");
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

        std::vector<Layer> m(layers_.size()), v(layers_.size()), g;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            m[i] = {Eigen::MatrixXd::Zero(layers_[i].weights.rows(), layers_[i].weights.cols()),
                    Eigen::VectorXd::Zero(layers_[i].bias.size())};
            v[i] = m[i];
        }

        Rng rng(mix_seed(params.seed, 0x6D6C70));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const auto batch = static_cast<std::size_t>(std::max(1, params.batch_size));
        std::vector<double> curve;
        double best = std::numeric_limits<double>::infinity();
        int stale = 0;
        long step = 0;

        for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
            rng.shuffle(order);
            double epoch_loss = 0;
            for (std::size_t start = 0; start < n; start += batch) {
                const std::size_t b = std::min(batch, n - start);
                Eigen::MatrixXd in(static_cast<Eigen::Index>(kNumFeatures), static_cast<Eigen::Index>(b));
                Eigen::RowVectorXd t(static_cast<Eigen::Index>(b));
                for (std::size_t j = 0; j < b; ++j) {
                    const auto row = order[start + j];
                    for (std::size_t f = 0; f < kNumFeatures; ++f) {
                        in(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) = X[row][f];
                    }
                    t(static_cast<Eigen::Index>(j)) = y[row];
                }
                epoch_loss += loss_and_gradient(in, t, g) * static_cast<double>(b);

                ++step;
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                const double lr = params.learning_rate * std::sqrt(c2) / c1;
                for (std::size_t i = 0; i < layers_.size(); ++i) {
                    m[i].weights = beta1 * m[i].weights + (1 - beta1) * g[i].weights;
                    m[i].bias = beta1 * m[i].bias + (1 - beta1) * g[i].bias;
                    v[i].weights = beta2 * v[i].weights + (1 - beta2) * g[i].weights.cwiseAbs2();
                    v[i].bias = beta2 * v[i].bias + (1 - beta2) * g[i].bias.cwiseAbs2();
                    layers_[i].weights.array() -= lr * m[i].weights.array() / (v[i].weights.array().sqrt() + eps);
                    layers_[i].bias.array() -= lr * m[i].bias.array() / (v[i].bias.array().sqrt() + eps);
                }
            }
            epoch_loss /= static_cast<double>(n);
            curve.push_back(epoch_loss);
            if (!std::isfinite(epoch_loss)) throw Error(ErrorCode::NonFiniteInput, "mlp training diverged");
            if (epoch_loss > best - params.tol) {
                if (++stale >= params.n_iter_no_change) break;
            } else {
                stale = 0;
            }
            best = std::min(best, epoch_loss);
        }
        return curve;
    }

private:
    std::vector<Layer> layers_;
};

/// Hidden layer sizes for a (h_size, h_num) pair: each further layer halves
/// the previous width, so (256, 2) gives {256, 128}.
inline std::vector<int> pyramid_layers(int h_size, int h_num) {
    std::vector<int> sizes;
    int width = h_size;
    for (int i = 0; i < h_num; ++i) {
        sizes.push_back(std::max(1, width));
        width /= 2;
    }
    return sizes;
}

/// Max relative error between backprop gradients and central differences,
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6), over every parameter.
inline double gradient_check(const Mlp& net, std::span<const FeatureRow> X, std::span<const double> y,
                             double step = 1e-5) {
    const auto n = static_cast<Eigen::Index>(X.size());
    Eigen::MatrixXd in(static_cast<Eigen::Index>(kNumFeatures), n);
    Eigen::RowVectorXd t(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            in(static_cast<Eigen::Index>(f), j) = X[static_cast<std::size_t>(j)][f];
        }
        t(j) = y[static_cast<std::size_t>(j)];
    }

    std::vector<Mlp::Layer> grads;
    net.loss_and_gradient(in, t, grads);
    std::vector<double> analytic;
    for (const auto& g : grads) {
        analytic.insert(analytic.end(), g.weights.data(), g.weights.data() + g.weights.size());
        analytic.insert(analytic.end(), g.bias.data(), g.bias.data() + g.bias.size());
    }

    Mlp probe = net;
    const std::vector<double> base = net.parameters();
    std::vector<double> p = base;
    std::vector<Mlp::Layer> scratch;
    double worst = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = base[k] + step;
        probe.set_parameters(p);
        const double up = probe.loss_and_gradient(in, t, scratch);
        p[k] = base[k] - step;
        probe.set_parameters(p);
        const double down = probe.loss_and_gradient(in, t, scratch);
        p[k] = base[k];
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

} // namespace greenladder::ml
