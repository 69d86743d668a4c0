#pragma once

#include <cstddef>
#include <vector>

#include "accdet/numerics.hpp"
#include "accdet/rng.hpp"

// LSTM and GRU cells, stacked sequence-to-sequence networks with a single
// sigmoid output neuron, and exact backpropagation through time.

namespace accdet {

enum class CellKind { Lstm, Gru };

// One gate: a weight matrix for each of the two incoming signals plus a bias.
struct GateParams {
    Matrix input_weights;
    Matrix recurrent_weights;
    Vector bias;
};

// Gate order follows the cell equations: forget, candidate, input, output.
// Gates read W.x[t] + R.y[t-1]; the cell state h and the output y are carried
// separately (the gates recur on the previous *output*, the state update on
// the previous *cell state*).
struct LstmCellParams {
    GateParams forget;
    GateParams candidate;
    GateParams input_gate;
    GateParams output_gate;
    ActivationKind g1 = ActivationKind::Tanh;  // candidate nonlinearity
    ActivationKind g2 = ActivationKind::Tanh;  // cell-to-output nonlinearity
};

// Gate order: reset, candidate, update. Convention differs from the LSTM:
// here input_weights (W) multiply the state-side signal and recurrent_weights
// (R) multiply the step input x[t]. The candidate gate's W acts on the reset
// state h'[t] = h[t-1] (.) r[t].
struct GruCellParams {
    GateParams reset;
    GateParams candidate;
    GateParams update;
    ActivationKind g = ActivationKind::Tanh;   // candidate nonlinearity
};

struct LstmState {
    Vector cell;    // h[t]
    Vector output;  // y[t]
};

// Stacked recurrent layers, all of cell_kind, each feeding its full hidden
// sequence to the layer above; the last layer's final hidden vector feeds a
// width-1 sigmoid head.
struct NetworkSpec {
    CellKind cell_kind = CellKind::Lstm;
    std::vector<std::size_t> layer_widths;
    std::size_t input_dim = 0;
    ActivationKind activation = ActivationKind::Tanh;  // g1/g2/g for every cell
};

struct NetworkParams {
    std::vector<LstmCellParams> lstm_layers;  // populated when cell_kind == Lstm
    std::vector<GruCellParams> gru_layers;    // populated when cell_kind == Gru
    Matrix head_weights;                      // 1 x last layer width
    double head_bias = 0.0;
};

LstmState lstm_step(const LstmCellParams& p, const Vector& x_t, const LstmState& prev);
Vector gru_step(const GruCellParams& p, const Vector& x_t, const Vector& h_prev);

void validate_spec(const NetworkSpec& spec);
void validate_params(const NetworkSpec& spec, const NetworkParams& params);

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
NetworkParams init_params(const NetworkSpec& spec, Rng& rng);

std::size_t param_count(const NetworkSpec& spec);

// Canonical flat layout: per layer, per gate in declaration order,
// input_weights row-major, then recurrent_weights row-major, then bias;
// head weights last, head bias at the very end. flatten/unflatten round-trip
// is the identity.
Vector flatten_params(const NetworkSpec& spec, const NetworkParams& params);
NetworkParams unflatten_params(const NetworkSpec& spec, const Vector& flat);

// Probability in (0,1) for one input sequence (each vector of length
// spec.input_dim, sequence non-empty).
double forward_sequence(const NetworkSpec& spec, const NetworkParams& params,
                        const std::vector<Vector>& seq);

// Exact gradient of the binary cross-entropy loss at this sample with respect
// to every parameter, in flatten_params layout.
Vector bptt_gradients(const NetworkSpec& spec, const NetworkParams& params,
                      const std::vector<Vector>& seq, int label);

// Reusable per-sample scratch for the hot training path. One instance per
// thread; contents are overwritten by each call.
struct BpttWorkspace {
    // Per-layer forward caches, flat [t * width + i].
    struct LayerCache {
        Vector gate_f, cand, gate_u, gate_o, state, state_act, out;  // LSTM
        Vector gate_r, reset_state, cand_g, gate_z, state_g;         // GRU
    };
    std::vector<LayerCache> layers;
    std::vector<Vector> d_hidden;  // per layer: gradient wrt hidden sequence
    Vector t0, t1, t2, t3, t4, t5, t6, t7, zeros;
    double probability = 0.0;  // head output of the last forward pass
};

// Forward pass that fills the workspace caches; returns the head probability.
// Used by forward_sequence, the batch kernels and the scorers.
double forward_cached(const NetworkSpec& spec, const NetworkParams& params,
                      const std::vector<Vector>& seq, BpttWorkspace& ws);

// Adds this sample's gradient into grad_accum (flatten layout) and returns
// its binary cross-entropy loss. Behind bptt_gradients and the batch kernels.
double bptt_accumulate(const NetworkSpec& spec, const NetworkParams& params,
                       const std::vector<Vector>& seq, int label,
                       Vector& grad_accum, BpttWorkspace& ws);

}  // namespace accdet
