#pragma once

#include "pearl/matrix.hpp"

namespace pearl {

// Bias-corrected Adam with the canonical defaults; both the generator descent
// and the critic ascent run through the same update (the ascent feeds a
// negated gradient).
struct AdamState {
    std::size_t step = 0;
    Matrix first_moment;
    Matrix second_moment;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const Matrix& params, double lr);
};

void adam_step(AdamState& state, Matrix& params, const Matrix& grad);

}  // namespace pearl
