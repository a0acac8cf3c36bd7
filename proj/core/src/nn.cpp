#include "dem/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace dem::nn {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");
        offsets_.push_back(total);
        total += static_cast<std::size_t>(sizes_[l + 1]) * static_cast<std::size_t>(sizes_[l] + 1);
    }
    params_ = Vector::Zero(static_cast<Eigen::Index>(total));
}

void Mlp::init(std::mt19937_64& rng, double output_scale) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
        const double scale = (l + 1 == layers) ? output_scale : 1.0;
        const std::size_t count = static_cast<std::size_t>(sizes_[l + 1]) * static_cast<std::size_t>(sizes_[l] + 1);
        for (std::size_t i = 0; i < count; ++i)
            params_[static_cast<Eigen::Index>(offsets_[l] + i)] = scale * bound * unit(rng);
    }
}

Matrix Mlp::forward(const Matrix& x) const {
    Cache cache;
    return forward(x, cache);
}

Matrix Mlp::forward(const Matrix& x, Cache& cache) const {
    if (x.rows() != sizes_.front()) throw std::invalid_argument("Mlp input dimension mismatch");
    const std::size_t layers = sizes_.size() - 1;
    cache.activations.clear();
    cache.activations.reserve(layers + 1);
    cache.activations.push_back(x);
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l];
        const int out = sizes_[l + 1];
        Eigen::Map<const Matrix> w(params_.data() + offsets_[l], out, in);
        Eigen::Map<const Vector> b(params_.data() + offsets_[l] + static_cast<std::size_t>(out) * in, out);
        Matrix z = w * cache.activations.back();
        z.colwise() += b;
        if (l + 1 < layers) z = z.cwiseMax(0.0);
        cache.activations.push_back(std::move(z));
    }
    return cache.activations.back();
}

void Mlp::backward(const Cache& cache, const Matrix& d_out, Vector& grad) const {
    if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
    const std::size_t layers = sizes_.size() - 1;
    Matrix delta = d_out;
    for (std::size_t li = layers; li-- > 0;) {
        const int in = sizes_[li];
        const int out = sizes_[li + 1];
        const Matrix& input = cache.activations[li];
        Eigen::Map<Matrix> gw(grad.data() + offsets_[li], out, in);
        Eigen::Map<Vector> gb(grad.data() + offsets_[li] + static_cast<std::size_t>(out) * in, out);
        gw.noalias() += delta * input.transpose();
        gb += delta.rowwise().sum();
        if (li == 0) break;
        Eigen::Map<const Matrix> w(params_.data() + offsets_[li], out, in);
        Matrix prev = w.transpose() * delta;
        // ReLU derivative, taken as 0 at the kink
        delta = prev.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    }
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(static_cast<Eigen::Index>(n))),
      v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(Vector& params, const Vector& grad) {
    if (grad.size() != params.size() || m_.size() != params.size()) throw std::invalid_argument("Adam size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

void Adam::reset() {
    t_ = 0;
    m_.setZero();
    v_.setZero();
}

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double mx = logits.col(c).maxCoeff();
        const double lse = mx + std::log((logits.col(c).array() - mx).exp().sum());
        out.col(c) = logits.col(c).array() - lse;
    }
    return out;
}

}  // namespace dem::nn
