#include "accdet/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "accdet/rng.hpp"

namespace accdet {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double activate(ActivationKind kind, double x) {
    return kind == ActivationKind::Sigmoid ? sigmoid(x) : std::tanh(x);
}

double activation_deriv(ActivationKind kind, double value) {
    return kind == ActivationKind::Sigmoid ? value * (1.0 - value) : 1.0 - value * value;
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.size()) {
        throw std::invalid_argument("matvec: matrix is " + std::to_string(m.rows) + "x" +
                                    std::to_string(m.cols) + " but vector has length " +
                                    std::to_string(v.size()));
    }
    Vector out(m.rows, 0.0);
    matvec_add(m, v.data(), out.data());
    return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hadamard: length mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    }
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Vector apply_activation(ActivationKind kind, const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = activate(kind, v[i]);
    return out;
}

void matvec_add(const Matrix& m, const double* v, double* out) {
    const double* row = m.values.data();
    for (std::size_t i = 0; i < m.rows; ++i, row += m.cols) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
        out[i] += acc;
    }
}

void matvec_t_add(const Matrix& m, const double* v, double* out) {
    const double* row = m.values.data();
    for (std::size_t i = 0; i < m.rows; ++i, row += m.cols) {
        double vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j] * vi;
    }
}

void outer_add(Matrix& m, const double* a, const double* b) {
    double* row = m.values.data();
    for (std::size_t i = 0; i < m.rows; ++i, row += m.cols) {
        double ai = a[i];
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += ai * b[j];
    }
}

AdamState make_adam_state(std::size_t n_params, double learning_rate, double beta1,
                          double beta2, double epsilon) {
    AdamState s;
    s.first_moment.assign(n_params, 0.0);
    s.second_moment.assign(n_params, 0.0);
    s.step_count = 0;
    s.learning_rate = learning_rate;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

void adam_step(AdamState& state, Vector& params, const Vector& grads) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
        throw std::invalid_argument("adam_step: length mismatch (params " + std::to_string(n) +
                                    ", grads " + std::to_string(grads.size()) + ", moments " +
                                    std::to_string(state.first_moment.size()) + ")");
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        double g = grads[i];
        double m = state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        double v = state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        double m_hat = m / bc1;
        double v_hat = v / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

double global_norm(const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

void clip_by_global_norm(Vector& grads, double max_norm) {
    double norm = global_norm(grads);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
}

double Rng::normal() {
    // Box-Muller; draws two uniforms per value, u1 shifted away from zero.
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace accdet
