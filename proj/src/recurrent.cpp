#include "accdet/recurrent.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace accdet {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void check_gate(const char* cell, const char* gate, const GateParams& g,
                std::size_t width, std::size_t in_cols, std::size_t rec_cols) {
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument(std::string(cell) + " " + gate + ": " + what);
    };
    if (g.input_weights.rows != width || g.input_weights.cols != in_cols)
        fail("input_weights is " + shape_str(g.input_weights) + ", expected " +
             std::to_string(width) + "x" + std::to_string(in_cols));
    if (g.recurrent_weights.rows != width || g.recurrent_weights.cols != rec_cols)
        fail("recurrent_weights is " + shape_str(g.recurrent_weights) + ", expected " +
             std::to_string(width) + "x" + std::to_string(rec_cols));
    if (g.bias.size() != width)
        fail("bias has length " + std::to_string(g.bias.size()) + ", expected " +
             std::to_string(width));
    if (g.input_weights.values.size() != g.input_weights.rows * g.input_weights.cols ||
        g.recurrent_weights.values.size() != g.recurrent_weights.rows * g.recurrent_weights.cols)
        fail("matrix storage does not match its declared shape");
}

// out = act(bias + input_weights . a + recurrent_weights . b)
void gate_forward(const GateParams& g, const double* a, const double* b, double* out,
                  ActivationKind act) {
    const std::size_t w = g.bias.size();
    std::memcpy(out, g.bias.data(), w * sizeof(double));
    matvec_add(g.input_weights, a, out);
    matvec_add(g.recurrent_weights, b, out);
    for (std::size_t i = 0; i < w; ++i) out[i] = activate(act, out[i]);
}

// Flat-parameter layout bookkeeping shared by flatten/unflatten/backward.
struct GateOffsets {
    std::size_t w = 0, r = 0, b = 0;
};
struct LayerOffsets {
    GateOffsets gate[4];
};
struct Layout {
    std::vector<LayerOffsets> layers;
    std::size_t head_w = 0;
    std::size_t head_b = 0;
    std::size_t total = 0;
    std::size_t gates_per_layer = 0;
};

// Gate shapes at layer l: width x in_cols for input_weights, width x rec_cols
// for recurrent_weights. LSTM: in = layer input, rec = previous output (both
// signals of length input dim and width). GRU as written: input_weights act on
// the state side (width) and recurrent_weights on the step input.
void gate_dims(CellKind kind, std::size_t width, std::size_t input_dim,
               std::size_t& in_cols, std::size_t& rec_cols) {
    if (kind == CellKind::Lstm) {
        in_cols = input_dim;
        rec_cols = width;
    } else {
        in_cols = width;
        rec_cols = input_dim;
    }
}

Layout param_layout(const NetworkSpec& spec) {
    Layout lay;
    lay.gates_per_layer = spec.cell_kind == CellKind::Lstm ? 4 : 3;
    std::size_t off = 0;
    std::size_t in_dim = spec.input_dim;
    for (std::size_t w : spec.layer_widths) {
        std::size_t in_cols, rec_cols;
        gate_dims(spec.cell_kind, w, in_dim, in_cols, rec_cols);
        LayerOffsets lo;
        for (std::size_t g = 0; g < lay.gates_per_layer; ++g) {
            lo.gate[g].w = off;
            off += w * in_cols;
            lo.gate[g].r = off;
            off += w * rec_cols;
            lo.gate[g].b = off;
            off += w;
        }
        lay.layers.push_back(lo);
        in_dim = w;
    }
    lay.head_w = off;
    off += spec.layer_widths.back();
    lay.head_b = off;
    off += 1;
    lay.total = off;
    return lay;
}

// Gate access in canonical order. LSTM: forget, candidate, input, output.
// GRU: reset, candidate, update.
const GateParams* gate_at(const NetworkParams& p, CellKind kind, std::size_t layer,
                          std::size_t g) {
    if (kind == CellKind::Lstm) {
        const LstmCellParams& c = p.lstm_layers[layer];
        const GateParams* gates[4] = {&c.forget, &c.candidate, &c.input_gate, &c.output_gate};
        return gates[g];
    }
    const GruCellParams& c = p.gru_layers[layer];
    const GateParams* gates[3] = {&c.reset, &c.candidate, &c.update};
    return gates[g];
}

GateParams* gate_at(NetworkParams& p, CellKind kind, std::size_t layer, std::size_t g) {
    return const_cast<GateParams*>(gate_at(const_cast<const NetworkParams&>(p), kind, layer, g));
}

void axpy(double* y, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

// grad_flat block += da (x) vec, row-major width x cols.
void outer_add_flat(double* block, const double* da, std::size_t width, const double* vec,
                    std::size_t cols) {
    for (std::size_t i = 0; i < width; ++i) {
        double d = da[i];
        double* row = block + i * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += d * vec[j];
    }
}

constexpr double kProbClamp = 1e-12;

double clamped_bce(double p, int label) {
    double q = p;
    if (q < kProbClamp) q = kProbClamp;
    if (q > 1.0 - kProbClamp) q = 1.0 - kProbClamp;
    return label == 1 ? -std::log(q) : -std::log(1.0 - q);
}

}  // namespace

LstmState lstm_step(const LstmCellParams& p, const Vector& x_t, const LstmState& prev) {
    const std::size_t w = p.forget.bias.size();
    const std::size_t d = p.forget.input_weights.cols;
    check_gate("lstm", "forget", p.forget, w, d, w);
    check_gate("lstm", "candidate", p.candidate, w, d, w);
    check_gate("lstm", "input", p.input_gate, w, d, w);
    check_gate("lstm", "output", p.output_gate, w, d, w);
    if (x_t.size() != d)
        throw std::invalid_argument("lstm_step: input has length " + std::to_string(x_t.size()) +
                                    ", expected " + std::to_string(d));
    if (prev.cell.size() != w || prev.output.size() != w)
        throw std::invalid_argument("lstm_step: previous state has lengths " +
                                    std::to_string(prev.cell.size()) + "/" +
                                    std::to_string(prev.output.size()) + ", expected " +
                                    std::to_string(w));

    Vector f(w), cand(w), u(w), o(w);
    gate_forward(p.forget, x_t.data(), prev.output.data(), f.data(), ActivationKind::Sigmoid);
    gate_forward(p.candidate, x_t.data(), prev.output.data(), cand.data(), p.g1);
    gate_forward(p.input_gate, x_t.data(), prev.output.data(), u.data(), ActivationKind::Sigmoid);

    LstmState next;
    next.cell.resize(w);
    for (std::size_t i = 0; i < w; ++i) next.cell[i] = u[i] * cand[i] + f[i] * prev.cell[i];

    gate_forward(p.output_gate, x_t.data(), prev.output.data(), o.data(), ActivationKind::Sigmoid);
    next.output.resize(w);
    for (std::size_t i = 0; i < w; ++i) next.output[i] = o[i] * activate(p.g2, next.cell[i]);
    return next;
}

Vector gru_step(const GruCellParams& p, const Vector& x_t, const Vector& h_prev) {
    const std::size_t w = p.reset.bias.size();
    const std::size_t d = p.reset.recurrent_weights.cols;
    check_gate("gru", "reset", p.reset, w, w, d);
    check_gate("gru", "candidate", p.candidate, w, w, d);
    check_gate("gru", "update", p.update, w, w, d);
    if (x_t.size() != d)
        throw std::invalid_argument("gru_step: input has length " + std::to_string(x_t.size()) +
                                    ", expected " + std::to_string(d));
    if (h_prev.size() != w)
        throw std::invalid_argument("gru_step: state has length " + std::to_string(h_prev.size()) +
                                    ", expected " + std::to_string(w));

    Vector r(w), hp(w), z(w), u(w);
    gate_forward(p.reset, h_prev.data(), x_t.data(), r.data(), ActivationKind::Sigmoid);
    for (std::size_t i = 0; i < w; ++i) hp[i] = h_prev[i] * r[i];
    gate_forward(p.candidate, hp.data(), x_t.data(), z.data(), p.g);
    gate_forward(p.update, h_prev.data(), x_t.data(), u.data(), ActivationKind::Sigmoid);

    Vector h(w);
    for (std::size_t i = 0; i < w; ++i) h[i] = (1.0 - u[i]) * h_prev[i] + u[i] * z[i];
    return h;
}

void validate_spec(const NetworkSpec& spec) {
    if (spec.layer_widths.empty())
        throw std::invalid_argument("network spec: layer_widths must be non-empty");
    for (std::size_t w : spec.layer_widths)
        if (w == 0) throw std::invalid_argument("network spec: zero layer width");
    if (spec.input_dim == 0) throw std::invalid_argument("network spec: input_dim must be positive");
}

void validate_params(const NetworkSpec& spec, const NetworkParams& params) {
    validate_spec(spec);
    const std::size_t L = spec.layer_widths.size();
    if (spec.cell_kind == CellKind::Lstm) {
        if (params.lstm_layers.size() != L)
            throw std::invalid_argument("params have " + std::to_string(params.lstm_layers.size()) +
                                        " lstm layers, spec has " + std::to_string(L));
    } else {
        if (params.gru_layers.size() != L)
            throw std::invalid_argument("params have " + std::to_string(params.gru_layers.size()) +
                                        " gru layers, spec has " + std::to_string(L));
    }
    std::size_t in_dim = spec.input_dim;
    for (std::size_t l = 0; l < L; ++l) {
        std::size_t w = spec.layer_widths[l];
        std::size_t in_cols, rec_cols;
        gate_dims(spec.cell_kind, w, in_dim, in_cols, rec_cols);
        const std::size_t n_gates = spec.cell_kind == CellKind::Lstm ? 4 : 3;
        static const char* lstm_names[4] = {"forget", "candidate", "input", "output"};
        static const char* gru_names[3] = {"reset", "candidate", "update"};
        for (std::size_t g = 0; g < n_gates; ++g) {
            const char* name =
                spec.cell_kind == CellKind::Lstm ? lstm_names[g] : gru_names[g];
            check_gate(spec.cell_kind == CellKind::Lstm ? "lstm" : "gru", name,
                       *gate_at(params, spec.cell_kind, l, g), w, in_cols, rec_cols);
        }
        in_dim = w;
    }
    const std::size_t last = spec.layer_widths.back();
    if (params.head_weights.rows != 1 || params.head_weights.cols != last)
        throw std::invalid_argument("head weights are " + shape_str(params.head_weights) +
                                    ", expected 1x" + std::to_string(last));
}

NetworkParams init_params(const NetworkSpec& spec, Rng& rng) {
    validate_spec(spec);
    auto fill_uniform = [&rng](Matrix& m) {
        double bound = 1.0 / std::sqrt(static_cast<double>(m.cols));
        for (double& v : m.values) v = (2.0 * rng.uniform01() - 1.0) * bound;
    };
    NetworkParams p;
    std::size_t in_dim = spec.input_dim;
    for (std::size_t w : spec.layer_widths) {
        std::size_t in_cols, rec_cols;
        gate_dims(spec.cell_kind, w, in_dim, in_cols, rec_cols);
        auto make_gate = [&]() {
            GateParams g;
            g.input_weights = Matrix(w, in_cols);
            g.recurrent_weights = Matrix(w, rec_cols);
            g.bias.assign(w, 0.0);
            fill_uniform(g.input_weights);
            fill_uniform(g.recurrent_weights);
            return g;
        };
        if (spec.cell_kind == CellKind::Lstm) {
            LstmCellParams c;
            c.forget = make_gate();
            c.candidate = make_gate();
            c.input_gate = make_gate();
            c.output_gate = make_gate();
            c.g1 = c.g2 = spec.activation;
            p.lstm_layers.push_back(std::move(c));
        } else {
            GruCellParams c;
            c.reset = make_gate();
            c.candidate = make_gate();
            c.update = make_gate();
            c.g = spec.activation;
            p.gru_layers.push_back(std::move(c));
        }
        in_dim = w;
    }
    p.head_weights = Matrix(1, spec.layer_widths.back());
    fill_uniform(p.head_weights);
    p.head_bias = 0.0;
    return p;
}

std::size_t param_count(const NetworkSpec& spec) {
    return param_layout(spec).total;
}

Vector flatten_params(const NetworkSpec& spec, const NetworkParams& params) {
    validate_params(spec, params);
    Layout lay = param_layout(spec);
    Vector flat(lay.total, 0.0);
    for (std::size_t l = 0; l < spec.layer_widths.size(); ++l) {
        for (std::size_t g = 0; g < lay.gates_per_layer; ++g) {
            const GateParams& gp = *gate_at(params, spec.cell_kind, l, g);
            const GateOffsets& go = lay.layers[l].gate[g];
            std::copy(gp.input_weights.values.begin(), gp.input_weights.values.end(),
                      flat.begin() + static_cast<std::ptrdiff_t>(go.w));
            std::copy(gp.recurrent_weights.values.begin(), gp.recurrent_weights.values.end(),
                      flat.begin() + static_cast<std::ptrdiff_t>(go.r));
            std::copy(gp.bias.begin(), gp.bias.end(),
                      flat.begin() + static_cast<std::ptrdiff_t>(go.b));
        }
    }
    std::copy(params.head_weights.values.begin(), params.head_weights.values.end(),
              flat.begin() + static_cast<std::ptrdiff_t>(lay.head_w));
    flat[lay.head_b] = params.head_bias;
    return flat;
}

NetworkParams unflatten_params(const NetworkSpec& spec, const Vector& flat) {
    validate_spec(spec);
    Layout lay = param_layout(spec);
    if (flat.size() != lay.total)
        throw std::invalid_argument("unflatten_params: got " + std::to_string(flat.size()) +
                                    " values, layout needs " + std::to_string(lay.total));
    NetworkParams p;
    std::size_t in_dim = spec.input_dim;
    for (std::size_t l = 0; l < spec.layer_widths.size(); ++l) {
        std::size_t w = spec.layer_widths[l];
        std::size_t in_cols, rec_cols;
        gate_dims(spec.cell_kind, w, in_dim, in_cols, rec_cols);
        if (spec.cell_kind == CellKind::Lstm)
            p.lstm_layers.emplace_back();
        else
            p.gru_layers.emplace_back();
        for (std::size_t g = 0; g < lay.gates_per_layer; ++g) {
            GateParams& gp = *gate_at(p, spec.cell_kind, l, g);
            const GateOffsets& go = lay.layers[l].gate[g];
            gp.input_weights = Matrix(w, in_cols);
            gp.recurrent_weights = Matrix(w, rec_cols);
            gp.bias.assign(w, 0.0);
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(go.w), w * in_cols,
                        gp.input_weights.values.begin());
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(go.r), w * rec_cols,
                        gp.recurrent_weights.values.begin());
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(go.b), w, gp.bias.begin());
        }
        if (spec.cell_kind == CellKind::Lstm) {
            p.lstm_layers[l].g1 = p.lstm_layers[l].g2 = spec.activation;
        } else {
            p.gru_layers[l].g = spec.activation;
        }
        in_dim = w;
    }
    const std::size_t last = spec.layer_widths.back();
    p.head_weights = Matrix(1, last);
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(lay.head_w), last,
                p.head_weights.values.begin());
    p.head_bias = flat[lay.head_b];
    return p;
}

namespace {

void prepare_workspace(const NetworkSpec& spec, std::size_t steps, BpttWorkspace& ws) {
    const std::size_t L = spec.layer_widths.size();
    ws.layers.resize(L);
    ws.d_hidden.resize(L);
    std::size_t max_dim = spec.input_dim;
    for (std::size_t l = 0; l < L; ++l) {
        std::size_t w = spec.layer_widths[l];
        max_dim = std::max(max_dim, w);
        std::size_t n = steps * w;
        BpttWorkspace::LayerCache& c = ws.layers[l];
        if (spec.cell_kind == CellKind::Lstm) {
            c.gate_f.resize(n);
            c.cand.resize(n);
            c.gate_u.resize(n);
            c.gate_o.resize(n);
            c.state.resize(n);
            c.state_act.resize(n);
            c.out.resize(n);
        } else {
            c.gate_r.resize(n);
            c.reset_state.resize(n);
            c.cand_g.resize(n);
            c.gate_z.resize(n);
            c.state_g.resize(n);
        }
        ws.d_hidden[l].resize(n);
    }
    for (Vector* t : {&ws.t0, &ws.t1, &ws.t2, &ws.t3, &ws.t4, &ws.t5, &ws.t6, &ws.t7, &ws.zeros})
        t->assign(max_dim, 0.0);
}

}  // namespace

double forward_cached(const NetworkSpec& spec, const NetworkParams& params,
                      const std::vector<Vector>& seq, BpttWorkspace& ws) {
    const std::size_t T = seq.size();
    const std::size_t L = spec.layer_widths.size();
    prepare_workspace(spec, T, ws);

    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t w = spec.layer_widths[l];
        const std::size_t prev_w = l == 0 ? spec.input_dim : spec.layer_widths[l - 1];
        BpttWorkspace::LayerCache& c = ws.layers[l];
        auto input_at = [&](std::size_t t) -> const double* {
            if (l == 0) return seq[t].data();
            const BpttWorkspace::LayerCache& below = ws.layers[l - 1];
            return spec.cell_kind == CellKind::Lstm ? &below.out[t * prev_w]
                                                    : &below.state_g[t * prev_w];
        };
        if (spec.cell_kind == CellKind::Lstm) {
            const LstmCellParams& p = params.lstm_layers[l];
            for (std::size_t t = 0; t < T; ++t) {
                const double* x = input_at(t);
                const double* y_prev = t == 0 ? ws.zeros.data() : &c.out[(t - 1) * w];
                const double* h_prev = t == 0 ? ws.zeros.data() : &c.state[(t - 1) * w];
                double* f = &c.gate_f[t * w];
                double* cd = &c.cand[t * w];
                double* u = &c.gate_u[t * w];
                double* o = &c.gate_o[t * w];
                double* h = &c.state[t * w];
                double* a = &c.state_act[t * w];
                double* y = &c.out[t * w];
                gate_forward(p.forget, x, y_prev, f, ActivationKind::Sigmoid);
                gate_forward(p.candidate, x, y_prev, cd, p.g1);
                gate_forward(p.input_gate, x, y_prev, u, ActivationKind::Sigmoid);
                for (std::size_t i = 0; i < w; ++i) h[i] = u[i] * cd[i] + f[i] * h_prev[i];
                gate_forward(p.output_gate, x, y_prev, o, ActivationKind::Sigmoid);
                for (std::size_t i = 0; i < w; ++i) {
                    a[i] = activate(p.g2, h[i]);
                    y[i] = o[i] * a[i];
                }
            }
        } else {
            const GruCellParams& p = params.gru_layers[l];
            for (std::size_t t = 0; t < T; ++t) {
                const double* x = input_at(t);
                const double* h_prev = t == 0 ? ws.zeros.data() : &c.state_g[(t - 1) * w];
                double* r = &c.gate_r[t * w];
                double* hp = &c.reset_state[t * w];
                double* z = &c.cand_g[t * w];
                double* u = &c.gate_z[t * w];
                double* h = &c.state_g[t * w];
                gate_forward(p.reset, h_prev, x, r, ActivationKind::Sigmoid);
                for (std::size_t i = 0; i < w; ++i) hp[i] = h_prev[i] * r[i];
                gate_forward(p.candidate, hp, x, z, p.g);
                gate_forward(p.update, h_prev, x, u, ActivationKind::Sigmoid);
                for (std::size_t i = 0; i < w; ++i)
                    h[i] = (1.0 - u[i]) * h_prev[i] + u[i] * z[i];
            }
        }
    }

    const std::size_t w_top = spec.layer_widths.back();
    const BpttWorkspace::LayerCache& top = ws.layers[L - 1];
    const double* last = spec.cell_kind == CellKind::Lstm ? &top.out[(T - 1) * w_top]
                                                          : &top.state_g[(T - 1) * w_top];
    double logit = params.head_bias;
    for (std::size_t i = 0; i < w_top; ++i) logit += params.head_weights.values[i] * last[i];
    ws.probability = sigmoid(logit);
    return ws.probability;
}

double forward_sequence(const NetworkSpec& spec, const NetworkParams& params,
                        const std::vector<Vector>& seq) {
    validate_params(spec, params);
    if (seq.empty()) throw std::invalid_argument("forward_sequence: empty input sequence");
    for (const Vector& x : seq)
        if (x.size() != spec.input_dim)
            throw std::invalid_argument("forward_sequence: input vector has length " +
                                        std::to_string(x.size()) + ", spec.input_dim is " +
                                        std::to_string(spec.input_dim));
    BpttWorkspace ws;
    return forward_cached(spec, params, seq, ws);
}

double bptt_accumulate(const NetworkSpec& spec, const NetworkParams& params,
                       const std::vector<Vector>& seq, int label, Vector& grad_accum,
                       BpttWorkspace& ws) {
    const std::size_t T = seq.size();
    const std::size_t L = spec.layer_widths.size();
    const Layout lay = param_layout(spec);
    const double p = forward_cached(spec, params, seq, ws);
    const double loss = clamped_bce(p, label);

    for (Vector& d : ws.d_hidden) std::fill(d.begin(), d.end(), 0.0);

    // Head: logit gradient of sigmoid + cross-entropy is (p - label).
    const double dlogit = p - static_cast<double>(label);
    const std::size_t w_top = spec.layer_widths.back();
    const BpttWorkspace::LayerCache& top = ws.layers[L - 1];
    const double* top_last = spec.cell_kind == CellKind::Lstm ? &top.out[(T - 1) * w_top]
                                                              : &top.state_g[(T - 1) * w_top];
    double* head_w_grad = grad_accum.data() + lay.head_w;
    for (std::size_t i = 0; i < w_top; ++i) head_w_grad[i] += dlogit * top_last[i];
    grad_accum[lay.head_b] += dlogit;
    {
        double* d_top = &ws.d_hidden[L - 1][(T - 1) * w_top];
        for (std::size_t i = 0; i < w_top; ++i)
            d_top[i] += params.head_weights.values[i] * dlogit;
    }

    for (std::size_t li = L; li-- > 0;) {
        const std::size_t w = spec.layer_widths[li];
        const std::size_t in_dim = li == 0 ? spec.input_dim : spec.layer_widths[li - 1];
        BpttWorkspace::LayerCache& c = ws.layers[li];
        const LayerOffsets& lo = lay.layers[li];
        auto input_at = [&](std::size_t t) -> const double* {
            if (li == 0) return seq[t].data();
            const BpttWorkspace::LayerCache& below = ws.layers[li - 1];
            return spec.cell_kind == CellKind::Lstm ? &below.out[t * in_dim]
                                                    : &below.state_g[t * in_dim];
        };
        double* d_below = li == 0 ? nullptr : ws.d_hidden[li - 1].data();

        if (spec.cell_kind == CellKind::Lstm) {
            const LstmCellParams& pr = params.lstm_layers[li];
            double* dy_carry = ws.t0.data();
            double* dh_carry = ws.t1.data();
            double* dy_total = ws.t2.data();
            double* dh_total = ws.t3.data();
            double* daf = ws.t4.data();
            double* dac = ws.t5.data();
            double* dau = ws.t6.data();
            double* dao = ws.t7.data();
            std::fill_n(dy_carry, w, 0.0);
            std::fill_n(dh_carry, w, 0.0);
            for (std::size_t t = T; t-- > 0;) {
                const double* f = &c.gate_f[t * w];
                const double* cd = &c.cand[t * w];
                const double* u = &c.gate_u[t * w];
                const double* o = &c.gate_o[t * w];
                const double* a = &c.state_act[t * w];
                const double* h_prev = t == 0 ? ws.zeros.data() : &c.state[(t - 1) * w];
                const double* y_prev = t == 0 ? ws.zeros.data() : &c.out[(t - 1) * w];
                const double* d_ext = &ws.d_hidden[li][t * w];
                for (std::size_t i = 0; i < w; ++i) {
                    double dy = d_ext[i] + dy_carry[i];
                    double dh = dh_carry[i] + o[i] * activation_deriv(pr.g2, a[i]) * dy;
                    dy_total[i] = dy;
                    dh_total[i] = dh;
                    dao[i] = a[i] * dy * o[i] * (1.0 - o[i]);
                    daf[i] = h_prev[i] * dh * f[i] * (1.0 - f[i]);
                    dac[i] = u[i] * dh * activation_deriv(pr.g1, cd[i]);
                    dau[i] = cd[i] * dh * u[i] * (1.0 - u[i]);
                    dh_carry[i] = f[i] * dh;
                }
                std::fill_n(dy_carry, w, 0.0);
                const double* das[4] = {daf, dac, dau, dao};
                const GateParams* gates[4] = {&pr.forget, &pr.candidate, &pr.input_gate,
                                              &pr.output_gate};
                const double* x = input_at(t);
                for (std::size_t g = 0; g < 4; ++g) {
                    matvec_t_add(gates[g]->recurrent_weights, das[g], dy_carry);
                    if (d_below != nullptr)
                        matvec_t_add(gates[g]->input_weights, das[g], d_below + t * in_dim);
                    const GateOffsets& go = lo.gate[g];
                    outer_add_flat(grad_accum.data() + go.w, das[g], w, x, in_dim);
                    outer_add_flat(grad_accum.data() + go.r, das[g], w, y_prev, w);
                    axpy(grad_accum.data() + go.b, das[g], w);
                }
            }
        } else {
            const GruCellParams& pr = params.gru_layers[li];
            double* dh_carry = ws.t0.data();
            double* dh_total = ws.t1.data();
            double* dar = ws.t2.data();
            double* daz = ws.t3.data();
            double* dau = ws.t4.data();
            double* dhp = ws.t5.data();
            std::fill_n(dh_carry, w, 0.0);
            for (std::size_t t = T; t-- > 0;) {
                const double* r = &c.gate_r[t * w];
                const double* hp = &c.reset_state[t * w];
                const double* z = &c.cand_g[t * w];
                const double* u = &c.gate_z[t * w];
                const double* h_prev = t == 0 ? ws.zeros.data() : &c.state_g[(t - 1) * w];
                const double* d_ext = &ws.d_hidden[li][t * w];
                for (std::size_t i = 0; i < w; ++i) {
                    double dh = d_ext[i] + dh_carry[i];
                    dh_total[i] = dh;
                    daz[i] = u[i] * dh * activation_deriv(pr.g, z[i]);
                    dau[i] = (z[i] - h_prev[i]) * dh * u[i] * (1.0 - u[i]);
                }
                std::fill_n(dhp, w, 0.0);
                matvec_t_add(pr.candidate.input_weights, daz, dhp);
                for (std::size_t i = 0; i < w; ++i) {
                    dar[i] = h_prev[i] * dhp[i] * r[i] * (1.0 - r[i]);
                    dh_carry[i] = (1.0 - u[i]) * dh_total[i] + r[i] * dhp[i];
                }
                matvec_t_add(pr.reset.input_weights, dar, dh_carry);
                matvec_t_add(pr.update.input_weights, dau, dh_carry);

                const double* x = input_at(t);
                if (d_below != nullptr) {
                    double* dx = d_below + t * in_dim;
                    matvec_t_add(pr.reset.recurrent_weights, dar, dx);
                    matvec_t_add(pr.candidate.recurrent_weights, daz, dx);
                    matvec_t_add(pr.update.recurrent_weights, dau, dx);
                }
                // reset and update read h_prev through W; the candidate reads h'.
                const double* das[3] = {dar, daz, dau};
                const double* sig[3] = {h_prev, hp, h_prev};
                for (std::size_t g = 0; g < 3; ++g) {
                    const GateOffsets& go = lo.gate[g];
                    outer_add_flat(grad_accum.data() + go.w, das[g], w, sig[g], w);
                    outer_add_flat(grad_accum.data() + go.r, das[g], w, x, in_dim);
                    axpy(grad_accum.data() + go.b, das[g], w);
                }
            }
        }
    }
    return loss;
}

Vector bptt_gradients(const NetworkSpec& spec, const NetworkParams& params,
                      const std::vector<Vector>& seq, int label) {
    validate_params(spec, params);
    if (seq.empty()) throw std::invalid_argument("bptt_gradients: empty input sequence");
    for (const Vector& x : seq)
        if (x.size() != spec.input_dim)
            throw std::invalid_argument("bptt_gradients: input vector has length " +
                                        std::to_string(x.size()) + ", spec.input_dim is " +
                                        std::to_string(spec.input_dim));
    if (label != 0 && label != 1)
        throw std::invalid_argument("bptt_gradients: label must be 0 or 1");
    Vector grad(param_count(spec), 0.0);
    BpttWorkspace ws;
    bptt_accumulate(spec, params, seq, label, grad, ws);
    return grad;
}

}  // namespace accdet
