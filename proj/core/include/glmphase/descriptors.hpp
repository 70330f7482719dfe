#pragma once

// Text descriptors for priors and channels, the inverse of describe():
//   gaussian(variance=1)  rademacher(p_plus=0.5)  gauss_bernoulli(sparsity=0.2)
//   two_point(a=1, b=0, prob_a=0.3)
//   linear(delta=0.1)  sign(delta=0)  abs(delta=0)  relu(delta=1e-8)
//   door(K=0.67449, delta=0)  sigmoid(slope=2)
// Omitted keys take their defaults; a bare name without parentheses is allowed.

#include <string>

#include "glmphase/channels.hpp"
#include "glmphase/priors.hpp"

namespace glmphase {

/// Throws DomainError on an unknown name, unknown key or malformed number.
Prior parse_prior(const std::string& text);
Channel parse_channel(const std::string& text);

}  // namespace glmphase
