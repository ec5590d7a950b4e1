#include "numsense/dbn.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <optional>

#include "numsense/errors.hpp"
#include "numsense/seeds.hpp"

namespace numsense::dbn {

namespace {

Matrix sigmoid(const Matrix& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

void check_visible(const Rbm& rbm, Eigen::Index rows) {
    if (rows != rbm.visible_size()) {
        throw ShapeMismatch("visible input has " + std::to_string(rows) + " rows, RBM expects " +
                            std::to_string(rbm.visible_size()));
    }
}

}  // namespace

Rbm::Rbm(Eigen::Index visible, Eigen::Index hidden)
    : weights(Matrix::Zero(hidden, visible)), visible_bias(Vector::Zero(visible)), hidden_bias(Vector::Zero(hidden)) {}

Rbm Rbm::gaussian(Eigen::Index visible, Eigen::Index hidden, double stddev, std::mt19937_64& rng) {
    Rbm rbm(visible, hidden);
    std::normal_distribution<double> normal(0.0, stddev);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < visible; ++j) {
        for (Eigen::Index i = 0; i < hidden; ++i) rbm.weights(i, j) = normal(rng);
    }
    return rbm;
}

void TrainHyper::validate() const {
    if (!(learning_rate >= 0.0)) throw DomainError("learning_rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw DomainError("weight_decay must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
    if (epochs < 1) throw DomainError("epochs must be >= 1");
}

Vector hidden_probabilities(const Rbm& rbm, const Vector& v) {
    check_visible(rbm, v.size());
    return sigmoid(rbm.weights * v + rbm.hidden_bias);
}

Matrix hidden_probabilities(const Rbm& rbm, const Matrix& batch) {
    check_visible(rbm, batch.rows());
    Matrix pre = rbm.weights * batch;
    pre.colwise() += rbm.hidden_bias;
    return sigmoid(pre);
}

Vector visible_probabilities(const Rbm& rbm, const Vector& h) {
    if (h.size() != rbm.hidden_size()) throw ShapeMismatch("hidden vector size does not match RBM");
    return sigmoid(rbm.weights.transpose() * h + rbm.visible_bias);
}

Matrix visible_probabilities(const Rbm& rbm, const Matrix& hidden) {
    if (hidden.rows() != rbm.hidden_size()) throw ShapeMismatch("hidden batch size does not match RBM");
    Matrix pre = rbm.weights.transpose() * hidden;
    pre.colwise() += rbm.visible_bias;
    return sigmoid(pre);
}

double energy(const Rbm& rbm, const Vector& v, const Vector& h) {
    check_visible(rbm, v.size());
    if (h.size() != rbm.hidden_size()) throw ShapeMismatch("hidden vector size does not match RBM");
    return -rbm.visible_bias.dot(v) - rbm.hidden_bias.dot(h) - h.dot(rbm.weights * v);
}

Matrix RandomBernoulli::sample(const Matrix& probabilities) {
    Matrix out(probabilities.rows(), probabilities.cols());
    for (Eigen::Index j = 0; j < probabilities.cols(); ++j) {
        for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
            out(i, j) = unit_(engine_) < probabilities(i, j) ? 1.0 : 0.0;
        }
    }
    return out;
}

Velocity Velocity::zeros_like(const Rbm& rbm) {
    return {Matrix::Zero(rbm.weights.rows(), rbm.weights.cols()), Vector::Zero(rbm.visible_bias.size()),
            Vector::Zero(rbm.hidden_bias.size())};
}

double cd1_update(Rbm& rbm, const Matrix& batch, const TrainHyper& hyper, BernoulliSampler& sampler,
                  Velocity& velocity) {
    if (batch.cols() == 0) throw InsufficientData("CD-1 update needs a nonempty batch");
    check_visible(rbm, batch.rows());
    if (velocity.weights.rows() != rbm.weights.rows() || velocity.weights.cols() != rbm.weights.cols()) {
        throw ShapeMismatch("velocity shape does not match RBM");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.cols());

    const Matrix pos_hidden = hidden_probabilities(rbm, batch);
    const Matrix hidden_states = sampler.sample(pos_hidden);
    const Matrix recon_prob = visible_probabilities(rbm, hidden_states);
    const Matrix recon = sampler.sample(recon_prob);
    const Matrix neg_hidden = hidden_probabilities(rbm, recon);

    const double lr = hyper.learning_rate;
    const Matrix grad_w = (pos_hidden * batch.transpose() - neg_hidden * recon.transpose()) * inv_b;
    const Vector grad_b = (batch - recon).rowwise().sum() * inv_b;
    const Vector grad_c = (pos_hidden - neg_hidden).rowwise().sum() * inv_b;

    velocity.weights = lr * grad_w - lr * hyper.weight_decay * rbm.weights + hyper.momentum * velocity.weights;
    velocity.visible_bias = lr * grad_b + hyper.momentum * velocity.visible_bias;
    velocity.hidden_bias = lr * grad_c + hyper.momentum * velocity.hidden_bias;

    rbm.weights += velocity.weights;
    rbm.visible_bias += velocity.visible_bias;
    rbm.hidden_bias += velocity.hidden_bias;

    if (!rbm.weights.allFinite() || !rbm.visible_bias.allFinite() || !rbm.hidden_bias.allFinite()) {
        throw NumericalError("CD-1 produced non-finite parameters (learning rate " + std::to_string(lr) +
                             "); training aborted");
    }
    return (batch - recon_prob).squaredNorm() / static_cast<double>(batch.size());
}

Vector represent(const Dbn& dbn, const Vector& image) {
    Vector act = image;
    for (const Rbm& layer : dbn.layers) act = hidden_probabilities(layer, act);
    return act;
}

Matrix represent(const Dbn& dbn, const Matrix& images) {
    Matrix act = images;
    for (const Rbm& layer : dbn.layers) act = hidden_probabilities(layer, act);
    return act;
}

const std::vector<Architecture>& reference_architectures() {
    static const std::vector<Architecture> table = {
        {1, 500, 500},    {2, 500, 1000},   {3, 500, 1500},   {4, 500, 2000},
        {5, 1000, 500},   {6, 1000, 1000},  {7, 1000, 1500},  {8, 1500, 2000},
        {9, 1500, 500},   {10, 1500, 1000}, {11, 1500, 1500}, {12, 1500, 2000},
    };
    return table;
}

bool is_reference_architecture(int h1, int h2) {
    const auto& t = reference_architectures();
    return std::any_of(t.begin(), t.end(), [&](const Architecture& a) { return a.h1 == h1 && a.h2 == h2; });
}

namespace {

// Trains one RBM on `data` for `epochs`, reporting the mean batch error of
// each epoch. The shuffle and sampling streams are seeded from `seed`.
void train_layer(Rbm& rbm, const Matrix& data, const TrainHyper& hyper, int epochs, std::uint64_t seed, int layer,
                 const std::function<void(const EpochLog&)>& on_epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(seed, "shuffle"));
    RandomBernoulli sampler(derive_seed(seed, "cd1"));
    Velocity velocity = Velocity::zeros_like(rbm);
    const Eigen::Index n = data.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::Index batch = std::min<Eigen::Index>(hyper.batch_size, n);

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double err_sum = 0.0;
        int batches = 0;
        for (Eigen::Index first = 0; first < n; first += batch) {
            const Eigen::Index count = std::min(batch, n - first);
            Matrix mb(data.rows(), count);
            for (Eigen::Index k = 0; k < count; ++k) mb.col(k) = data.col(order[static_cast<std::size_t>(first + k)]);
            err_sum += cd1_update(rbm, mb, hyper, sampler, velocity);
            ++batches;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_epoch) on_epoch({epoch, layer, err_sum / batches, secs});
    }
}

}  // namespace

TrainResult train_dbn(const Matrix& images, const DbnConfig& config, const EpochCallback& on_epoch) {
    config.hyper.validate();
    if (config.hidden_sizes.empty()) throw DomainError("a DBN needs at least one hidden layer");
    for (int h : config.hidden_sizes) {
        if (h < 1) throw DomainError("hidden layer sizes must be positive");
    }
    if (images.cols() == 0) throw InsufficientData("no training images");
    if (((images.array() != 0.0) && (images.array() != 1.0)).any()) {
        throw DomainError("training images must be binary {0, 1}");
    }

    TrainResult result;
    result.young.tag = "young";
    result.young.epoch = 1;
    result.mature.tag = "mature";
    result.mature.epoch = config.hyper.epochs;

    Matrix young_input = images;
    Matrix mature_input = images;
    Eigen::Index visible = images.rows();
    for (std::size_t k = 0; k < config.hidden_sizes.size(); ++k) {
        const int layer = static_cast<int>(k) + 1;
        const std::uint64_t layer_seed = derive_seed(config.hyper.seed, "layer", k);
        std::mt19937_64 init_rng(derive_seed(layer_seed, "init"));
        const Rbm initial = Rbm::gaussian(visible, config.hidden_sizes[k], config.init_stddev, init_rng);

        Rbm mature = initial;
        std::optional<Rbm> young;
        if (k == 0) {
            // The first layer's young state is a snapshot of the mature run.
            train_layer(mature, mature_input, config.hyper, config.hyper.epochs, layer_seed, layer,
                        [&](const EpochLog& log) {
                            if (log.epoch == 1) young = mature;
                            result.log.push_back(log);
                            if (on_epoch) on_epoch(log);
                        });
        } else {
            young = initial;
            train_layer(*young, young_input, config.hyper, 1, layer_seed, layer, {});
            train_layer(mature, mature_input, config.hyper, config.hyper.epochs, layer_seed, layer,
                        [&](const EpochLog& log) {
                            result.log.push_back(log);
                            if (on_epoch) on_epoch(log);
                        });
        }
        if (k + 1 < config.hidden_sizes.size()) {
            young_input = hidden_probabilities(*young, young_input);
            mature_input = hidden_probabilities(mature, mature_input);
        }
        result.young.layers.push_back(std::move(*young));
        result.mature.layers.push_back(std::move(mature));
        visible = config.hidden_sizes[k];
    }
    return result;
}

}  // namespace numsense::dbn
