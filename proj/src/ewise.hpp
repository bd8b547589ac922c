#pragma once

#include <vector>

#include "btrnn/tensor.hpp"

// Elementwise pieces of the recurrent step, defined once in ewise.cpp. The
// dense cells and the packed inference engine both call these, so the two
// paths share one compiled rounding behavior and can be compared bit for bit.
namespace btrnn::detail {

void scale_inplace(Tensor2D& t, double a);
void sigmoid_inplace(Tensor2D& t);
void tanh_inplace(Tensor2D& t);
void check_range(const Tensor2D& t, double lo, double hi, const char* name);

// out = a + b + bias, row by row
void add_bias_sum(const Tensor2D& a, const Tensor2D& b, const std::vector<double>& bias,
                  Tensor2D& out);

// c_new = f .* c_prev + i .* g
void cell_blend(const Tensor2D& f, const Tensor2D& i, const Tensor2D& g, const Tensor2D& c_prev,
                Tensor2D& c_new);

// out = a .* b
void hadamard(const Tensor2D& a, const Tensor2D& b, Tensor2D& out);

}  // namespace btrnn::detail
