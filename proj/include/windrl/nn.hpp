#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "windrl/rng.hpp"

namespace windrl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ReLU on every hidden layer, identity on the output.
struct NetSpec {
    int input_dim = 7;
    std::vector<int> hidden{256, 128, 64};
    int output_dim = 1;

    bool operator==(const NetSpec&) const = default;
};

struct Layer {
    Matrix w;  // out x in
    Vector b;
};

struct NetParams {
    std::vector<Layer> layers;

    NetSpec spec() const;
    std::size_t parameter_count() const;
    static NetParams zeros(const NetSpec& spec);
};

// He-uniform on hidden layers, U(-1e-3, 1e-3) on the output layer, zero biases.
NetParams init_params(const NetSpec& spec, Rng& rng);

// Column-per-sample batch: x is input_dim x n; returns output_dim x n.
Matrix forward(const NetParams& p, const Matrix& x);
double forward_one(const NetParams& p, const Vector& x);

// mean_i w_i (f(x_i) - y_i)^2 + l2 * sum ||W||^2 over weight matrices only.
// `grad` may be null; `weights` may be null (all ones).
double loss_and_grad(const NetParams& p, const Matrix& x, const Vector& y, double l2, NetParams* grad,
                     const Vector* weights = nullptr);

struct AdamState {
    std::vector<Layer> m, v;
    std::int64_t step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const NetParams& p, double learning_rate);
};

void adam_step(NetParams& p, const NetParams& grad, AdamState& adam);

// target <- tau * online + (1 - tau) * target
void soft_update(NetParams& target, const NetParams& online, double tau);

// Binary checkpoint: "WRNN", u32 version, u32 layer count, per layer u32
// rows and cols, then every W (row-major) and b as little-endian f64.
void save_params(const NetParams& p, std::ostream& out);
NetParams load_params(std::istream& in);
void save_params(const NetParams& p, const std::string& path);
NetParams load_params(const std::string& path);

}  // namespace windrl::nn
