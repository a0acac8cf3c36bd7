#pragma once

// Small fully connected networks over a flat parameter vector. Samples are
// stored as columns.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace dem::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// ReLU hidden layers, linear output. Parameters per layer: W (out x in,
/// column-major) followed by b (out).
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<int> sizes);

    const std::vector<int>& sizes() const { return sizes_; }
    std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }

    Vector& params() { return params_; }
    const Vector& params() const { return params_; }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases; the
    /// output layer is scaled by `output_scale` (0 gives an all-zero head).
    void init(std::mt19937_64& rng, double output_scale = 1.0);

    struct Cache {
        std::vector<Matrix> activations;  // inputs of each layer, then the output
    };

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, Cache& cache) const;

    /// Accumulates dL/dparams into `grad` (resized and zeroed if empty).
    void backward(const Cache& cache, const Matrix& d_out, Vector& grad) const;

private:
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

    std::vector<int> sizes_;
    std::vector<std::size_t> offsets_;
    Vector params_;
};

class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(Vector& params, const Vector& grad);
    void reset();
    double learning_rate() const { return lr_; }

private:
    double lr_ = 3e-4;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::int64_t t_ = 0;
    Vector m_;
    Vector v_;
};

/// Column-wise log-softmax.
Matrix log_softmax(const Matrix& logits);

}  // namespace dem::nn
