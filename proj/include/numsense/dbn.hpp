#pragma once

// Restricted Boltzmann machines trained with one-step contrastive divergence,
// stacked greedily into a two-layer deep belief network.
//
// Convention: the weight matrix is hidden x visible, so for an RBM with
// energy E(v, h) = -b'v - c'h - h'Wv
//   P(h = 1 | v) = sigmoid(c + W v)
//   P(v = 1 | h) = sigmoid(b + W' h)
// Batches are matrices with one sample per column.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace numsense::dbn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Rbm {
    Matrix weights;      // hidden x visible
    Vector visible_bias;  // b
    Vector hidden_bias;   // c

    Rbm() = default;
    /// All-zero parameters.
    Rbm(Eigen::Index visible, Eigen::Index hidden);

    Eigen::Index visible_size() const { return weights.cols(); }
    Eigen::Index hidden_size() const { return weights.rows(); }

    /// Weights ~ N(0, stddev^2), biases zero.
    static Rbm gaussian(Eigen::Index visible, Eigen::Index hidden, double stddev, std::mt19937_64& rng);
};

struct TrainHyper {
    double learning_rate = 0.15;
    double weight_decay = 0.0001;
    double momentum = 0.7;
    int batch_size = 100;
    int epochs = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

Vector hidden_probabilities(const Rbm& rbm, const Vector& v);
Matrix hidden_probabilities(const Rbm& rbm, const Matrix& batch);
Vector visible_probabilities(const Rbm& rbm, const Vector& h);
Matrix visible_probabilities(const Rbm& rbm, const Matrix& hidden);

double energy(const Rbm& rbm, const Vector& v, const Vector& h);

/// Source of binary samples drawn from elementwise Bernoulli probabilities.
class BernoulliSampler {
public:
    virtual ~BernoulliSampler() = default;
    virtual Matrix sample(const Matrix& probabilities) = 0;
};

class RandomBernoulli final : public BernoulliSampler {
public:
    explicit RandomBernoulli(std::uint64_t seed) : engine_(seed) {}
    Matrix sample(const Matrix& probabilities) override;

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Previous parameter increments (momentum state).
struct Velocity {
    Matrix weights;
    Vector visible_bias;
    Vector hidden_bias;

    static Velocity zeros_like(const Rbm& rbm);
};

/// One CD-1 step on a batch (visible x batch_size), in place.
///
/// Positive phase: p_h = P(h|v), h ~ p_h. Negative phase: v' ~ P(v|h),
/// p_h' = P(h|v'). Statistics use p_h and p_h':
///   dW = lr * (p_h v^T - p_h' v'^T) / B - lr * decay * W + momentum * dW_prev
/// Bias increments follow the same rule without decay. Returns the mean
/// squared difference between the data and P(v|h). Throws NumericalError if
/// any parameter becomes non-finite.
double cd1_update(Rbm& rbm, const Matrix& batch, const TrainHyper& hyper, BernoulliSampler& sampler,
                  Velocity& velocity);

struct Dbn {
    std::vector<Rbm> layers;
    int epoch = 0;
    std::string tag;

    Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().visible_size(); }
    Eigen::Index output_size() const { return layers.empty() ? 0 : layers.back().hidden_size(); }
};

/// Deterministic feed-forward of probabilities through every layer.
Vector represent(const Dbn& dbn, const Vector& image);
Matrix represent(const Dbn& dbn, const Matrix& images);

struct DbnConfig {
    std::vector<int> hidden_sizes{1500, 1000};
    TrainHyper hyper;
    double init_stddev = 0.01;
};

/// Hidden layer sizes explored in the original model sweep.
struct Architecture {
    int id;
    int h1;
    int h2;
};
const std::vector<Architecture>& reference_architectures();
/// True for a hidden-size pair from reference_architectures().
bool is_reference_architecture(int h1, int h2);

struct EpochLog {
    int epoch;
    int layer;  // 1-based
    double recon_error;  // mean over batches
    double seconds;
};

struct TrainResult {
    Dbn young;   // every layer trained for one epoch
    Dbn mature;  // every layer trained for hyper.epochs epochs
    std::vector<EpochLog> log;  // mature branch
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Greedy layer-wise training on images (visible x N, entries in {0, 1}).
/// Layer k+1 trains on the hidden probabilities of the trained layer k.
/// The young and mature branches share initial weights and random streams,
/// so with epochs == 1 they are identical.
TrainResult train_dbn(const Matrix& images, const DbnConfig& config, const EpochCallback& on_epoch = {});

}  // namespace numsense::dbn
