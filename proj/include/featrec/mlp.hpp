#pragma once

// Fully connected feed-forward network trained with mini-batch Adam.
// Hidden layers use relu or tanh; the output layer is either linear
// (regression, squared error) or a sigmoid (binary cross-entropy).

#include <cmath>
#include <string>
#include <vector>

#include "featrec/dataset.hpp"
#include "featrec/rng.hpp"

namespace featrec {

enum class Activation { relu, tanh };
enum class MlpOutput { linear, sigmoid };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

struct MlpParams {
  std::vector<std::size_t> hidden{64};
  Activation activation = Activation::relu;
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double l2 = 1e-4;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct Mlp {
  std::vector<Matrix> weights;  // layer l: fan_in x fan_out
  std::vector<Vector> biases;
  Activation activation = Activation::relu;
  MlpOutput output = MlpOutput::linear;

  std::size_t n_inputs() const { return weights.empty() ? 0 : static_cast<std::size_t>(weights.front().rows()); }
  std::size_t n_outputs() const { return weights.empty() ? 0 : static_cast<std::size_t>(weights.back().cols()); }

  Matrix forward(const Matrix& x) const {
    Matrix h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      Matrix z = h * weights[l];
      z.rowwise() += biases[l].transpose();
      if (l + 1 < weights.size()) {
        activate(z);
      } else if (output == MlpOutput::sigmoid) {
        z = z.unaryExpr([](double v) {
          return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        });
      }
      h = std::move(z);
    }
    return h;
  }

  void activate(Matrix& z) const {
    if (activation == Activation::relu) {
      z = z.cwiseMax(0.0);
    } else {
      z = z.array().tanh().matrix();
    }
  }
};

// y has one column per output. Throws Error if training diverges.
inline Mlp fit_mlp(const Matrix& x, const Matrix& y, const MlpParams& params, MlpOutput output,
                   std::uint64_t seed) {
  if (x.rows() != y.rows()) throw InvalidArgument("mlp: row mismatch");
  if (x.rows() < 1 || y.cols() < 1) throw InvalidArgument("mlp: empty training data");
  if (params.hidden.empty()) throw InvalidArgument("mlp: at least one hidden layer is required");
  if (params.epochs < 1 || params.batch_size < 1) throw InvalidArgument("mlp: bad schedule");

  Rng rng(derive_seed(seed, "mlp"));
  Mlp net;
  net.activation = params.activation;
  net.output = output;

  std::vector<std::size_t> sizes;
  sizes.push_back(static_cast<std::size_t>(x.cols()));
  sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
  sizes.push_back(static_cast<std::size_t>(y.cols()));
  const std::size_t n_layers = sizes.size() - 1;

  // Glorot uniform initialisation.
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto fan_in = static_cast<Eigen::Index>(sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double factor = (output == MlpOutput::sigmoid && l + 1 == n_layers) ? 2.0 : 6.0;
    const double limit = std::sqrt(factor / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    Vector b(fan_out);
    for (Eigen::Index j = 0; j < fan_out; ++j) {
      for (Eigen::Index i = 0; i < fan_in; ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    for (Eigen::Index j = 0; j < fan_out; ++j) b(j) = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }

  // Adam state.
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  for (std::size_t l = 0; l < n_layers; ++l) {
    mw.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
    vw.push_back(mw.back());
    mb.push_back(Vector::Zero(net.biases[l].size()));
    vb.push_back(mb.back());
  }
  double beta1_t = 1.0, beta2_t = 1.0;

  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t batch = std::min(params.batch_size, n);
  IndexList order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<Matrix> acts(n_layers + 1);
  std::vector<Matrix> pre(n_layers);
  Matrix xb, yb;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const auto m = static_cast<Eigen::Index>(stop - start);
      xb.resize(m, x.cols());
      yb.resize(m, y.cols());
      for (Eigen::Index r = 0; r < m; ++r) {
        const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
        xb.row(r) = x.row(src);
        yb.row(r) = y.row(src);
      }

      acts[0] = xb;
      for (std::size_t l = 0; l < n_layers; ++l) {
        pre[l] = acts[l] * net.weights[l];
        pre[l].rowwise() += net.biases[l].transpose();
        Matrix a = pre[l];
        if (l + 1 < n_layers) {
          net.activate(a);
        } else if (output == MlpOutput::sigmoid) {
          a = a.unaryExpr([](double v) {
            return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
          });
        }
        acts[l + 1] = std::move(a);
      }

      // Both losses give (prediction - target) at the output pre-activation.
      Matrix delta = (acts[n_layers] - yb) / static_cast<double>(m);
      beta1_t *= beta1;
      beta2_t *= beta2;
      const double lr_t = params.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      for (std::size_t li = n_layers; li-- > 0;) {
        Matrix gw = acts[li].transpose() * delta;
        gw += (params.l2 / static_cast<double>(m)) * net.weights[li];
        const Vector gb = delta.colwise().sum().transpose();
        if (li > 0) {
          Matrix back = delta * net.weights[li].transpose();
          if (net.activation == Activation::relu) {
            back = back.cwiseProduct((pre[li - 1].array() > 0.0).cast<double>().matrix());
          } else {
            back = back.cwiseProduct((1.0 - acts[li].array().square()).matrix());
          }
          delta = std::move(back);
        }
        mw[li] = beta1 * mw[li] + (1 - beta1) * gw;
        vw[li] = beta2 * vw[li] + (1 - beta2) * gw.cwiseProduct(gw);
        mb[li] = beta1 * mb[li] + (1 - beta1) * gb;
        vb[li] = beta2 * vb[li] + (1 - beta2) * gb.cwiseProduct(gb);
        net.weights[li].array() -= lr_t * mw[li].array() / (vw[li].array().sqrt() + eps);
        net.biases[li].array() -= lr_t * mb[li].array() / (vb[li].array().sqrt() + eps);
      }
    }
    if (!net.weights.back().allFinite()) {
      throw Error("mlp: training diverged at epoch " + std::to_string(epoch));
    }
  }
  return net;
}

}  // namespace featrec
