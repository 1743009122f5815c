#ifndef MTOCT_ADAM_HPP
#define MTOCT_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mtoct {

struct AdamHyper {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam moments for one parameter vector.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::uint64_t step_count = 0;
    AdamHyper hyper;
};

inline AdamState adam_init(Eigen::Index dim, const AdamHyper& hyper = {}) {
    if (dim < 1) throw std::invalid_argument("adam: dimension must be >= 1");
    if (!(hyper.lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
    if (!(hyper.beta1 >= 0.0 && hyper.beta1 < 1.0) || !(hyper.beta2 >= 0.0 && hyper.beta2 < 1.0))
        throw std::invalid_argument("adam: beta1 and beta2 must lie in [0, 1)");
    if (!(hyper.eps > 0.0)) throw std::invalid_argument("adam: eps must be positive");
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim), 0, hyper};
}

inline void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad) {
    if (params.size() != state.m.size() || grad.size() != state.m.size())
        throw std::invalid_argument("adam: dimension mismatch (state " + std::to_string(state.m.size()) +
                                    ", params " + std::to_string(params.size()) + ", grad " +
                                    std::to_string(grad.size()) + ")");
    const auto& h = state.hyper;
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
    state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);
    params.array() -= h.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + h.eps);
}

}  // namespace mtoct

#endif
