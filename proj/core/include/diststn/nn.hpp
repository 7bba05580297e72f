#pragma once

#include <vector>

#include "diststn/tape.hpp"
#include "diststn/tensor.hpp"

namespace diststn {

// weights [M x N] . x [N] + bias [M] -> [M]
Tensor dense(Tape& tape, const Tensor& x, const Tensor& weights, const Tensor& bias);

// Max-shifted softmax of a logit vector.
std::vector<double> softmax(std::span<const double> logits);

// -log softmax(logits)[label], as a scalar tensor. Throws LabelOutOfRange.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::size_t label);

// mean |a - b|; the subgradient at a tie is 0.
Tensor mae_loss(Tape& tape, const Tensor& a, const Tensor& b);

}  // namespace diststn
