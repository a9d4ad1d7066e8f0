#include "windrl/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "windrl/error.hpp"

namespace windrl::nn {

NetSpec NetParams::spec() const {
    NetSpec s;
    s.hidden.clear();
    if (layers.empty()) return s;
    s.input_dim = static_cast<int>(layers.front().w.cols());
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) s.hidden.push_back(static_cast<int>(layers[i].w.rows()));
    s.output_dim = static_cast<int>(layers.back().w.rows());
    return s;
}

std::size_t NetParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
}

NetParams NetParams::zeros(const NetSpec& spec) {
    require(spec.input_dim > 0 && spec.output_dim > 0, ErrorCode::InvalidArgument, "layer widths must be positive");
    NetParams p;
    int in = spec.input_dim;
    std::vector<int> widths = spec.hidden;
    widths.push_back(spec.output_dim);
    for (int out : widths) {
        require(out > 0, ErrorCode::InvalidArgument, "layer widths must be positive");
        p.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
        in = out;
    }
    return p;
}

NetParams init_params(const NetSpec& spec, Rng& rng) {
    NetParams p = NetParams::zeros(spec);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& w = p.layers[l].w;
        const bool output = l + 1 == p.layers.size();
        const double limit = output ? 1e-3 : std::sqrt(6.0 / static_cast<double>(w.cols()));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
        }
    }
    return p;
}

Matrix forward(const NetParams& p, const Matrix& x) {
    require(!p.layers.empty(), ErrorCode::ShapeMismatch, "network has no layers");
    if (x.rows() != p.layers.front().w.cols()) throw Error(ErrorCode::ShapeMismatch, "input width does not match network");
    Matrix h = x;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        Matrix z = p.layers[l].w * h;
        z.colwise() += p.layers[l].b;
        if (l + 1 < p.layers.size()) z = z.cwiseMax(0.0);
        h = std::move(z);
    }
    return h;
}

double forward_one(const NetParams& p, const Vector& x) { return forward(p, x)(0, 0); }

double loss_and_grad(const NetParams& p, const Matrix& x, const Vector& y, double l2, NetParams* grad,
                     const Vector* weights) {
    require(!p.layers.empty(), ErrorCode::ShapeMismatch, "network has no layers");
    const Eigen::Index n = x.cols();
    require(n > 0, ErrorCode::InvalidArgument, "empty batch");
    if (x.rows() != p.layers.front().w.cols() || y.size() != n || p.layers.back().w.rows() != 1 ||
        (weights && weights->size() != n)) {
        throw Error(ErrorCode::ShapeMismatch, "batch shape does not match network");
    }
    // Keep every layer input for the backward pass.
    std::vector<Matrix> acts;
    acts.reserve(p.layers.size() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        Matrix z = p.layers[l].w * acts.back();
        z.colwise() += p.layers[l].b;
        if (l + 1 < p.layers.size()) z = z.cwiseMax(0.0);
        acts.push_back(std::move(z));
    }
    const Eigen::RowVectorXd err = acts.back().row(0) - y.transpose();
    Eigen::RowVectorXd werr = err;
    if (weights) werr = err.cwiseProduct(weights->transpose());
    double reg = 0.0;
    for (const auto& l : p.layers) reg += l.w.squaredNorm();
    const double loss = werr.dot(err) / static_cast<double>(n) + l2 * reg;
    if (!grad) return loss;

    *grad = NetParams::zeros(p.spec());
    Matrix delta = (2.0 / static_cast<double>(n)) * werr;  // 1 x n
    for (std::size_t l = p.layers.size(); l-- > 0;) {
        grad->layers[l].w = delta * acts[l].transpose() + 2.0 * l2 * p.layers[l].w;
        grad->layers[l].b = delta.rowwise().sum();
        if (l == 0) break;
        Matrix back = p.layers[l].w.transpose() * delta;
        // ReLU derivative taken as 0 at exactly 0.
        delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
    return loss;
}

AdamState AdamState::for_params(const NetParams& p, double learning_rate) {
    AdamState a;
    a.learning_rate = learning_rate;
    for (const auto& l : p.layers) {
        a.m.push_back({Matrix::Zero(l.w.rows(), l.w.cols()), Vector::Zero(l.b.size())});
        a.v.push_back({Matrix::Zero(l.w.rows(), l.w.cols()), Vector::Zero(l.b.size())});
    }
    return a;
}

void adam_step(NetParams& p, const NetParams& grad, AdamState& adam) {
    require(grad.layers.size() == p.layers.size() && adam.m.size() == p.layers.size(), ErrorCode::ShapeMismatch,
            "adam state does not match parameters");
    ++adam.step;
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        m = adam.beta1 * m + (1.0 - adam.beta1) * g;
        v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
        param.array() -= adam.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.eps);
    };
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        update(p.layers[l].w, grad.layers[l].w, adam.m[l].w, adam.v[l].w);
        update(p.layers[l].b, grad.layers[l].b, adam.m[l].b, adam.v[l].b);
    }
}

void soft_update(NetParams& target, const NetParams& online, double tau) {
    require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "tau must be in [0, 1]");
    if (!(target.spec() == online.spec())) throw Error(ErrorCode::ShapeMismatch, "target and online shapes differ");
    for (std::size_t l = 0; l < target.layers.size(); ++l) {
        target.layers[l].w = tau * online.layers[l].w + (1.0 - tau) * target.layers[l].w;
        target.layers[l].b = tau * online.layers[l].b + (1.0 - tau) * target.layers[l].b;
    }
}

namespace {

constexpr char kMagic[4] = {'W', 'R', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) fail(ErrorCode::ParseError, "truncated checkpoint");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

}  // namespace

void save_params(const NetParams& p, std::ostream& out) {
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.layers.size()));
    for (const auto& l : p.layers) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.w.rows()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.w.cols()));
    }
    for (const auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
            for (Eigen::Index j = 0; j < l.w.cols(); ++j) put_le<double>(out, l.w(i, j));
        }
        for (Eigen::Index i = 0; i < l.b.size(); ++i) put_le<double>(out, l.b(i));
    }
    require(static_cast<bool>(out), ErrorCode::Io, "checkpoint write failed");
}

NetParams load_params(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(ErrorCode::ParseError, "not a network checkpoint");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kVersion) fail(ErrorCode::ParseError, "unsupported checkpoint version");
    const auto n = get_le<std::uint32_t>(in);
    if (n == 0 || n > 64) fail(ErrorCode::ParseError, "implausible layer count");
    NetParams p;
    std::uint32_t prev_out = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto rows = get_le<std::uint32_t>(in);
        const auto cols = get_le<std::uint32_t>(in);
        if (rows == 0 || cols == 0 || rows > 1u << 16 || cols > 1u << 16 || (i > 0 && cols != prev_out)) {
            fail(ErrorCode::ShapeMismatch, "inconsistent checkpoint layer shapes");
        }
        prev_out = rows;
        p.layers.push_back({Matrix(rows, cols), Vector(rows)});
    }
    for (auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
            for (Eigen::Index j = 0; j < l.w.cols(); ++j) l.w(i, j) = get_le<double>(in);
        }
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = get_le<double>(in);
    }
    return p;
}

void save_params(const NetParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open checkpoint for writing");
    save_params(p, out);
}

NetParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open checkpoint");
    return load_params(in);
}

}  // namespace windrl::nn
