#pragma once

#include "bgc/nn/tensor.hpp"

namespace bgc::nn {

// Stride-1 convolution with odd kernel and zero same-padding, so H and W are
// preserved.  Weights are [out_c][in_c][k][k] flat, then out_c biases.
void conv_forward(const Tensor3& in, const double* weights, const double* bias,
                  int out_c, int k, Tensor3& out);

// Accumulates into d_weights/d_bias; overwrites d_in.
void conv_backward(const Tensor3& in, const double* weights, int out_c, int k,
                   const Tensor3& d_out, Tensor3& d_in, double* d_weights,
                   double* d_bias);

void relu_forward(const Tensor3& in, Tensor3& out);
void relu_backward(const Tensor3& in, const Tensor3& d_out, Tensor3& d_in);

void tanh_forward(const Tensor3& in, Tensor3& out);
// Takes the forward output (not the input): d/dx tanh = 1 - tanh^2.
void tanh_backward(const Tensor3& out, const Tensor3& d_out, Tensor3& d_in);

}  // namespace bgc::nn
