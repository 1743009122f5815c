#ifndef MTOCT_LSTM_HPP
#define MTOCT_LSTM_HPP

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mtoct/dataio.hpp"

namespace mtoct {

/// Flattened predictor parameters; the unit of knowledge exchanged between tasks.
using ParamVector = Eigen::VectorXd;

/// Window-input LSTM: `horizon` chained cells, each fed the same n_f-value
/// window, cell t emitting the t-step-ahead prediction.
struct ModelShape {
    std::size_t n_f = 24;
    std::size_t n_h = 10;
    std::size_t horizon = 1;

    std::size_t concat() const noexcept { return n_h + n_f; }
    std::size_t dim() const noexcept { return 4 * n_h * concat() + 4 * n_h + n_h + 1; }

    void validate() const {
        if (n_f == 0 || n_h == 0 || horizon == 0)
            throw std::invalid_argument("model shape: n_f, n_h and horizon must all be >= 1");
    }
    bool operator==(const ModelShape&) const = default;
};

// Layout, in order: W_f, W_i, W_c, W_o (each n_h x (n_h+n_f), row-major),
// b_f, b_i, b_c, b_o, W_y (1 x n_h), b_y. The four gate matrices are therefore
// one contiguous row-major (4 n_h) x (n_h+n_f) block.
struct ParamLayout {
    Eigen::Index n_h, n_f, concat;
    Eigen::Index gate_weights, gate_biases, out_weights, out_bias;

    explicit ParamLayout(const ModelShape& s)
        : n_h(static_cast<Eigen::Index>(s.n_h)),
          n_f(static_cast<Eigen::Index>(s.n_f)),
          concat(static_cast<Eigen::Index>(s.concat())),
          gate_weights(0),
          gate_biases(4 * n_h * concat),
          out_weights(gate_biases + 4 * n_h),
          out_bias(out_weights + n_h) {}
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unpacked parameter blocks, mainly for inspection and tests.
struct LstmBlocks {
    RowMajorMatrix W_f, W_i, W_c, W_o;
    Eigen::VectorXd b_f, b_i, b_c, b_o;
    Eigen::RowVectorXd W_y;
    double b_y = 0.0;

    bool operator==(const LstmBlocks& o) const {
        return W_f == o.W_f && W_i == o.W_i && W_c == o.W_c && W_o == o.W_o && b_f == o.b_f && b_i == o.b_i &&
               b_c == o.b_c && b_o == o.b_o && W_y == o.W_y && b_y == o.b_y;
    }
};

inline void check_dim(const ParamVector& params, const ModelShape& shape) {
    if (static_cast<std::size_t>(params.size()) != shape.dim())
        throw std::invalid_argument("parameter vector has length " + std::to_string(params.size()) +
                                    ", expected " + std::to_string(shape.dim()));
}

inline LstmBlocks unpack(const ParamVector& params, const ModelShape& shape) {
    check_dim(params, shape);
    const ParamLayout L(shape);
    const double* p = params.data();
    auto mat = [&](Eigen::Index gate) {
        return RowMajorMatrix(Eigen::Map<const RowMajorMatrix>(p + gate * L.n_h * L.concat, L.n_h, L.concat));
    };
    auto vec = [&](Eigen::Index gate) { return Eigen::VectorXd(params.segment(L.gate_biases + gate * L.n_h, L.n_h)); };
    LstmBlocks b;
    b.W_f = mat(0), b.W_i = mat(1), b.W_c = mat(2), b.W_o = mat(3);
    b.b_f = vec(0), b.b_i = vec(1), b.b_c = vec(2), b.b_o = vec(3);
    b.W_y = params.segment(L.out_weights, L.n_h).transpose();
    b.b_y = params(L.out_bias);
    return b;
}

inline ParamVector pack(const LstmBlocks& b, const ModelShape& shape) {
    const ParamLayout L(shape);
    ParamVector params(static_cast<Eigen::Index>(shape.dim()));
    const RowMajorMatrix* mats[] = {&b.W_f, &b.W_i, &b.W_c, &b.W_o};
    const Eigen::VectorXd* vecs[] = {&b.b_f, &b.b_i, &b.b_c, &b.b_o};
    for (Eigen::Index g = 0; g < 4; ++g) {
        if (mats[g]->rows() != L.n_h || mats[g]->cols() != L.concat || vecs[g]->size() != L.n_h)
            throw std::invalid_argument("pack: block shape does not match model shape");
        Eigen::Map<RowMajorMatrix>(params.data() + g * L.n_h * L.concat, L.n_h, L.concat) = *mats[g];
        params.segment(L.gate_biases + g * L.n_h, L.n_h) = *vecs[g];
    }
    if (b.W_y.size() != L.n_h) throw std::invalid_argument("pack: W_y shape does not match model shape");
    params.segment(L.out_weights, L.n_h) = b.W_y.transpose();
    params(L.out_bias) = b.b_y;
    return params;
}

/// D independent standard-normal draws.
template <typename Urbg>
ParamVector init_params(const ModelShape& shape, Urbg& rng) {
    shape.validate();
    std::normal_distribution<double> normal(0.0, 1.0);
    ParamVector params(static_cast<Eigen::Index>(shape.dim()));
    for (Eigen::Index d = 0; d < params.size(); ++d) params(d) = normal(rng);
    return params;
}

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace detail

/// Activations of a batched forward pass; column s belongs to sample s.
struct ForwardCache {
    Eigen::MatrixXd window;                 // n_f x N
    std::vector<Eigen::MatrixXd> gates;     // per cell: 4 n_h x N, rows [f; i; c~; o] post-activation
    std::vector<Eigen::MatrixXd> cell;      // per cell: C_t
    std::vector<Eigen::MatrixXd> cell_tanh; // per cell: tanh(C_t)
    std::vector<Eigen::MatrixXd> hidden;    // per cell: H_t
    Eigen::MatrixXd predictions;            // horizon x N
};

/// Runs every window (rows of `inputs`, N x n_f) through the chained cells.
/// H_0 = C_0 = 0 and each cell sees [H_{t-1}, window].
inline ForwardCache forward_batch(const ParamVector& params, const ModelShape& shape,
                                  const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
    check_dim(params, shape);
    if (static_cast<std::size_t>(inputs.cols()) != shape.n_f)
        throw std::invalid_argument("input window length does not match model shape");
    const ParamLayout L(shape);
    const Eigen::Index n = inputs.rows();
    const auto T = static_cast<std::size_t>(shape.horizon);

    const Eigen::Map<const RowMajorMatrix> W(params.data(), 4 * L.n_h, L.concat);
    const auto U = W.leftCols(L.n_h);
    const auto V = W.rightCols(L.n_f);
    const auto b = params.segment(L.gate_biases, 4 * L.n_h);
    const auto w_y = params.segment(L.out_weights, L.n_h);
    const double b_y = params(L.out_bias);

    ForwardCache c;
    c.window = inputs.transpose();
    const Eigen::MatrixXd window_term = (V * c.window).colwise() + b;
    c.gates.reserve(T), c.cell.reserve(T), c.cell_tanh.reserve(T), c.hidden.reserve(T);
    c.predictions.resize(static_cast<Eigen::Index>(T), n);

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L.n_h, n);
    Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(L.n_h, n);
    for (std::size_t t = 0; t < T; ++t) {
        Eigen::MatrixXd z = window_term;
        z.noalias() += U * h;
        z.topRows(2 * L.n_h) = z.topRows(2 * L.n_h).unaryExpr(&detail::sigmoid);
        z.middleRows(2 * L.n_h, L.n_h) = z.middleRows(2 * L.n_h, L.n_h).array().tanh();
        z.bottomRows(L.n_h) = z.bottomRows(L.n_h).unaryExpr(&detail::sigmoid);

        cs = (cs.array() * z.topRows(L.n_h).array() +
              z.middleRows(L.n_h, L.n_h).array() * z.middleRows(2 * L.n_h, L.n_h).array())
                 .matrix();
        Eigen::MatrixXd tc = cs.array().tanh().matrix();
        h = (z.bottomRows(L.n_h).array() * tc.array()).matrix();
        c.predictions.row(static_cast<Eigen::Index>(t)) =
            ((w_y.transpose() * h).array() + b_y).matrix().unaryExpr(&detail::sigmoid);

        c.gates.push_back(std::move(z));
        c.cell.push_back(cs);
        c.cell_tanh.push_back(std::move(tc));
        c.hidden.push_back(h);
    }
    return c;
}

/// Predictions for one window: element t-1 is the t-step-ahead forecast.
inline Eigen::VectorXd forward(const ParamVector& params, const ModelShape& shape,
                               const Eigen::Ref<const Eigen::VectorXd>& window) {
    const Eigen::MatrixXd row = window.transpose();
    return forward_batch(params, shape, row).predictions.col(0);
}

/// N x horizon matrix of predictions, each entry in (0, 1).
inline Eigen::MatrixXd predict(const ParamVector& params, const ModelShape& shape,
                               const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
    return forward_batch(params, shape, inputs).predictions.transpose();
}

namespace detail {
inline void check_view(const SampleView& view, const ModelShape& shape) {
    if (view.size() == 0) throw std::invalid_argument("sample view is empty");
    if (static_cast<std::size_t>(view.targets.cols()) != shape.horizon)
        throw std::invalid_argument("target horizon does not match model shape");
    if (view.targets.rows() != view.inputs.rows()) throw std::invalid_argument("inputs/targets row mismatch");
}

inline double rmse_from(const ForwardCache& c, const SampleView& view) {
    const double sse = (c.predictions - view.targets.transpose()).squaredNorm();
    return std::sqrt(sse / static_cast<double>(c.predictions.size()));
}
}  // namespace detail

inline double rmse(const Eigen::Ref<const Eigen::MatrixXd>& predictions,
                   const Eigen::Ref<const Eigen::MatrixXd>& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols() || predictions.size() == 0)
        throw std::invalid_argument("rmse: shape mismatch or empty input");
    return std::sqrt((predictions - targets).squaredNorm() / static_cast<double>(predictions.size()));
}

/// Root mean squared error over every sample and every horizon step.
inline double loss_rmse(const ParamVector& params, const ModelShape& shape, const SampleView& view) {
    detail::check_view(view, shape);
    return detail::rmse_from(forward_batch(params, shape, view.inputs), view);
}

struct LossAndGradient {
    double loss = 0.0;
    ParamVector gradient;
};

/// RMSE and its analytic gradient by backpropagation through the chained
/// cells, over the whole view. Below an RMSE of 1e-12 the gradient is zero.
inline LossAndGradient loss_and_gradient(const ParamVector& params, const ModelShape& shape, const SampleView& view) {
    detail::check_view(view, shape);
    const ForwardCache c = forward_batch(params, shape, view.inputs);
    const ParamLayout L(shape);
    const Eigen::Index n = view.size();
    const auto T = static_cast<Eigen::Index>(shape.horizon);

    LossAndGradient out;
    out.loss = detail::rmse_from(c, view);
    out.gradient = ParamVector::Zero(params.size());
    if (out.loss < 1e-12) return out;

    const Eigen::Map<const RowMajorMatrix> W(params.data(), 4 * L.n_h, L.concat);
    const auto U = W.leftCols(L.n_h);
    const auto w_y = params.segment(L.out_weights, L.n_h);

    Eigen::Map<RowMajorMatrix> dW(out.gradient.data(), 4 * L.n_h, L.concat);
    auto db = out.gradient.segment(L.gate_biases, 4 * L.n_h);
    auto dw_y = out.gradient.segment(L.out_weights, L.n_h);
    double& db_y = out.gradient(L.out_bias);

    // dL/dyhat = (yhat - y) / (N T L) for L = sqrt(SSE / (N T)).
    const double scale = 1.0 / (static_cast<double>(n * T) * out.loss);
    const Eigen::MatrixXd residual = c.predictions - view.targets.transpose();
    const Eigen::MatrixXd dz_y =
        (residual.array() * scale * c.predictions.array() * (1.0 - c.predictions.array())).matrix();

    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(L.n_h, n);
    Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(L.n_h, n);
    Eigen::MatrixXd dz_sum = Eigen::MatrixXd::Zero(4 * L.n_h, n);
    Eigen::MatrixXd dz(4 * L.n_h, n);
    const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(L.n_h, n);

    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const auto tt = static_cast<std::size_t>(t);
        const auto& g = c.gates[tt];
        const auto& h = c.hidden[tt];
        const auto& tc = c.cell_tanh[tt];
        const Eigen::MatrixXd& h_prev = t > 0 ? c.hidden[tt - 1] : zeros;
        const Eigen::MatrixXd& c_prev = t > 0 ? c.cell[tt - 1] : zeros;

        const auto dzy_t = dz_y.row(t);
        dw_y.noalias() += h * dzy_t.transpose();
        db_y += dzy_t.sum();

        const Eigen::ArrayXXd dh = (dh_next + w_y * dzy_t).array();
        const auto f = g.topRows(L.n_h).array();
        const auto i = g.middleRows(L.n_h, L.n_h).array();
        const auto cand = g.middleRows(2 * L.n_h, L.n_h).array();
        const auto o = g.bottomRows(L.n_h).array();

        const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tc.array().square());
        dz.topRows(L.n_h) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
        dz.middleRows(L.n_h, L.n_h) = (dc * cand * i * (1.0 - i)).matrix();
        dz.middleRows(2 * L.n_h, L.n_h) = (dc * i * (1.0 - cand.square())).matrix();
        dz.bottomRows(L.n_h) = (dh * tc.array() * o * (1.0 - o)).matrix();

        if (t > 0) dW.leftCols(L.n_h).noalias() += dz * h_prev.transpose();
        dz_sum += dz;
        dh_next.noalias() = U.transpose() * dz;
        dc_next = (dc * f).matrix();
    }
    dW.rightCols(L.n_f).noalias() += dz_sum * c.window.transpose();
    db = dz_sum.rowwise().sum();
    return out;
}

inline ParamVector gradient(const ParamVector& params, const ModelShape& shape, const SampleView& view) {
    return loss_and_gradient(params, shape, view).gradient;
}

}  // namespace mtoct

#endif
