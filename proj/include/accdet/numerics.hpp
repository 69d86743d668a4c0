#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Minimal dense linear algebra, activations and the Adam optimizer that the
// recurrent cells and the training loop are built on. Everything is double
// precision; gradient checks at 1e-5 relative error leave no room for floats.

namespace accdet {

using Vector = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

enum class ActivationKind { Sigmoid, Tanh };

// Overflow-safe sigmoid: separate branches for x >= 0 and x < 0.
double sigmoid(double x);
double activate(ActivationKind kind, double x);
// Derivative expressed through the activation's own output value
// (sigmoid' = s(1-s), tanh' = 1-v^2).
double activation_deriv(ActivationKind kind, double value);

Vector matvec(const Matrix& m, const Vector& v);
Vector hadamard(const Vector& a, const Vector& b);
Vector apply_activation(ActivationKind kind, const Vector& v);

// Unchecked hot-path kernels used by the recurrent forward/backward passes.
// `out` is accumulated into, not overwritten.
void matvec_add(const Matrix& m, const double* v, double* out);
void matvec_t_add(const Matrix& m, const double* v, double* out);  // out += m^T v
void outer_add(Matrix& m, const double* a, const double* b);       // m += a b^T

struct AdamState {
    Vector first_moment;
    Vector second_moment;
    std::uint64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 0.001;
};

AdamState make_adam_state(std::size_t n_params, double learning_rate = 0.001,
                          double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

// One Adam update with bias correction; mutates params and state in place.
void adam_step(AdamState& state, Vector& params, const Vector& grads);

double global_norm(const Vector& v);
// Scales grads so the global L2 norm does not exceed max_norm.
void clip_by_global_norm(Vector& grads, double max_norm);

}  // namespace accdet
