#include "pearl/adam.hpp"

#include <cmath>

#include "pearl/error.hpp"

namespace pearl {

AdamState AdamState::for_params(const Matrix& params, double lr) {
    AdamState s;
    s.first_moment = Matrix(params.rows(), params.cols());
    s.second_moment = Matrix(params.rows(), params.cols());
    s.lr = lr;
    return s;
}

void adam_step(AdamState& state, Matrix& params, const Matrix& grad) {
    require(params.same_shape(grad) && params.same_shape(state.first_moment),
            ErrorKind::invalid_parameter, "adam_step shape mismatch");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    double* p = params.data();
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / corr1;
        const double vhat = v[i] / corr2;
        p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace pearl
