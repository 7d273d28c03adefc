#pragma once

#include "pssmp/levy_model.hpp"

namespace pssmp::reference {

/// Unit drift minus compound Poisson with unit intensity and exponential(1) jumps:
/// psi(lambda) = lambda - lambda / (lambda + 1). Finite variation, Phi(1) is the golden ratio.
inline PssmpModel model_F(double p = 1.0, double alpha = 2.0) {
    return {LevyModel(0.0, 1.0, JumpSpec{1.0, ExponentialJumps{1.0}}), p, alpha};
}

/// Brownian motion with variance rate 2 and no drift: psi(lambda) = lambda^2. Infinite variation.
inline PssmpModel model_B(double p = 1.0, double alpha = 2.0) {
    return {LevyModel(2.0, 0.0, JumpSpec{}), p, alpha};
}

}  // namespace pssmp::reference
