#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tlforecast/errors.hpp"
#include "tlforecast/numkernel.hpp"

namespace tlf {

using Vector = std::vector<double>;

// ============================================================================
// Parameters
// ============================================================================

/// One LSTM layer: four gate weight matrices (hidden x input), four
/// recurrent matrices (hidden x hidden) and four bias vectors (hidden).
/// Gate order throughout the library is i, f, o, g.
struct LstmLayerParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;

    Matrix w_i, w_f, w_o, w_g;
    Matrix u_i, u_f, u_o, u_g;
    Vector b_i, b_f, b_o, b_g;

    LstmLayerParams() = default;
    LstmLayerParams(std::size_t in, std::size_t hidden)
        : input_dim(in),
          hidden_dim(hidden),
          w_i(hidden, in), w_f(hidden, in), w_o(hidden, in), w_g(hidden, in),
          u_i(hidden, hidden), u_f(hidden, hidden), u_o(hidden, hidden), u_g(hidden, hidden),
          b_i(hidden, 0.0), b_f(hidden, 0.0), b_o(hidden, 0.0), b_g(hidden, 0.0) {}

    bool same_shape(const LstmLayerParams& o) const {
        return input_dim == o.input_dim && hidden_dim == o.hidden_dim;
    }

    friend bool operator==(const LstmLayerParams& a, const LstmLayerParams& b) {
        return a.input_dim == b.input_dim && a.hidden_dim == b.hidden_dim &&
               a.w_i == b.w_i && a.w_f == b.w_f && a.w_o == b.w_o && a.w_g == b.w_g &&
               a.u_i == b.u_i && a.u_f == b.u_f && a.u_o == b.u_o && a.u_g == b.u_g &&
               a.b_i == b.b_i && a.b_f == b.b_f && a.b_o == b.b_o && a.b_g == b.b_g;
    }
};

/// Linear output head: scalar = weight . h + bias. No output activation, so
/// predictions may extrapolate outside the [0,1] training range.
struct DenseParams {
    std::size_t input_dim = 0;
    Vector weight;
    double bias = 0.0;

    DenseParams() = default;
    explicit DenseParams(std::size_t in) : input_dim(in), weight(in, 0.0) {}

    friend bool operator==(const DenseParams& a, const DenseParams& b) {
        return a.input_dim == b.input_dim && a.weight == b.weight && a.bias == b.bias;
    }
};

/// Layer stack description: one or more LSTM layers followed by exactly one
/// Dense(last_hidden -> 1) head. Consecutive dimensions must chain.
struct NetworkArchitecture {
    struct LstmSpec {
        std::size_t input_dim = 0;
        std::size_t hidden_dim = 0;
        friend bool operator==(const LstmSpec&, const LstmSpec&) = default;
    };

    std::vector<LstmSpec> lstm_layers;

    friend bool operator==(const NetworkArchitecture&, const NetworkArchitecture&) = default;

    std::size_t input_dim() const { return lstm_layers.empty() ? 0 : lstm_layers.front().input_dim; }
    std::size_t top_hidden_dim() const {
        return lstm_layers.empty() ? 0 : lstm_layers.back().hidden_dim;
    }
    /// LSTM layers + the Dense head.
    std::size_t layer_count() const { return lstm_layers.size() + 1; }

    void validate() const {
        if (lstm_layers.empty())
            throw ShapeError("architecture: needs at least one LSTM layer plus the Dense head");
        for (std::size_t k = 0; k + 1 < lstm_layers.size(); ++k) {
            if (lstm_layers[k].hidden_dim != lstm_layers[k + 1].input_dim)
                throw ShapeError("architecture: layer " + std::to_string(k) +
                                 " hidden_dim does not chain into layer " + std::to_string(k + 1));
        }
        for (const auto& l : lstm_layers)
            if (l.input_dim < 1 || l.hidden_dim < 1)
                throw ShapeError("architecture: layer dimensions must be >= 1");
    }

    /// Convenience builder: F -> hidden[0] -> hidden[1] -> ... -> Dense(1).
    static NetworkArchitecture stacked(std::size_t input_dim,
                                       const std::vector<std::size_t>& hidden_dims) {
        NetworkArchitecture arch;
        std::size_t in = input_dim;
        for (std::size_t h : hidden_dims) {
            arch.lstm_layers.push_back({in, h});
            in = h;
        }
        arch.validate();
        return arch;
    }
};

/// The full model p(.): LSTM stack plus Dense head, with a per-layer
/// trainable mask (entry layer_count()-1 is the head). Mutable while owned
/// by a trainer; safe for concurrent read-only forward passes afterwards.
struct Network {
    NetworkArchitecture arch;
    std::vector<LstmLayerParams> layers;
    DenseParams head;
    std::vector<bool> trainable;   // size layer_count()
    std::uint64_t param_version = 0;  // bumped by mutators; used for cache validity

    std::size_t input_dim() const { return arch.input_dim(); }
    std::size_t layer_count() const { return arch.layer_count(); }

    void bump_version() { ++param_version; }

    bool all_finite() const {
        for (const auto& l : layers) {
            for (const Matrix* m : {&l.w_i, &l.w_f, &l.w_o, &l.w_g,
                                    &l.u_i, &l.u_f, &l.u_o, &l.u_g})
                if (!m->all_finite()) return false;
            for (const Vector* v : {&l.b_i, &l.b_f, &l.b_o, &l.b_g})
                for (double x : *v)
                    if (!std::isfinite(x)) return false;
        }
        for (double x : head.weight)
            if (!std::isfinite(x)) return false;
        return std::isfinite(head.bias);
    }
};

/// Gradients with the same shapes as a network's parameters. Values; safe
/// to move between threads.
struct GradientSet {
    std::vector<LstmLayerParams> layers;  // reused as shape-congruent tensors
    DenseParams head;

    void scale(double s) {
        for (auto& l : layers) {
            for (Matrix* m : {&l.w_i, &l.w_f, &l.w_o, &l.w_g, &l.u_i, &l.u_f, &l.u_o, &l.u_g})
                for (double& v : m->data) v *= s;
            for (Vector* b : {&l.b_i, &l.b_f, &l.b_o, &l.b_g})
                for (double& v : *b) v *= s;
        }
        for (double& v : head.weight) v *= s;
        head.bias *= s;
    }

    void accumulate(const GradientSet& other) {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            auto& a = layers[k];
            const auto& b = other.layers[k];
            const Matrix* bm[] = {&b.w_i, &b.w_f, &b.w_o, &b.w_g, &b.u_i, &b.u_f, &b.u_o, &b.u_g};
            Matrix* am[] = {&a.w_i, &a.w_f, &a.w_o, &a.w_g, &a.u_i, &a.u_f, &a.u_o, &a.u_g};
            for (int t = 0; t < 8; ++t)
                for (std::size_t i = 0; i < am[t]->data.size(); ++i)
                    am[t]->data[i] += bm[t]->data[i];
            const Vector* bv[] = {&b.b_i, &b.b_f, &b.b_o, &b.b_g};
            Vector* av[] = {&a.b_i, &a.b_f, &a.b_o, &a.b_g};
            for (int t = 0; t < 4; ++t)
                for (std::size_t i = 0; i < av[t]->size(); ++i)
                    (*av[t])[i] += (*bv[t])[i];
        }
        for (std::size_t i = 0; i < head.weight.size(); ++i) head.weight[i] += other.head.weight[i];
        head.bias += other.head.bias;
    }
};

inline GradientSet make_zero_gradients(const Network& net) {
    GradientSet g;
    for (const auto& spec : net.arch.lstm_layers)
        g.layers.emplace_back(spec.input_dim, spec.hidden_dim);
    g.head = DenseParams(net.arch.top_hidden_dim());
    return g;
}

// ============================================================================
// Parameter traversal
// ============================================================================

/// Visits every parameter tensor in a fixed order:
/// per layer w_i,w_f,w_o,w_g,u_i,u_f,u_o,u_g,b_i,b_f,b_o,b_g, then
/// dense.weight, dense.bias. fn(name, data, len, layer_index) where
/// layer_index of the head equals lstm layer count. The same order is used
/// for Adam state, checkpoints and finite differences.
template <class Params, class F>
void for_each_tensor(Params& net, F&& fn) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& l = net.layers[k];
        const std::string p = "lstm" + std::to_string(k) + ".";
        const std::pair<std::string, Matrix*> mats[] = {
            {p + "w_i", &l.w_i}, {p + "w_f", &l.w_f}, {p + "w_o", &l.w_o}, {p + "w_g", &l.w_g},
            {p + "u_i", &l.u_i}, {p + "u_f", &l.u_f}, {p + "u_o", &l.u_o}, {p + "u_g", &l.u_g}};
        for (const auto& [name, m] : mats) fn(name, m->data.data(), m->data.size(), k);
        const std::pair<std::string, Vector*> vecs[] = {
            {p + "b_i", &l.b_i}, {p + "b_f", &l.b_f}, {p + "b_o", &l.b_o}, {p + "b_g", &l.b_g}};
        for (const auto& [name, v] : vecs) fn(name, v->data(), v->size(), k);
    }
    const std::size_t head_idx = net.layers.size();
    fn(std::string("dense.weight"), net.head.weight.data(), net.head.weight.size(), head_idx);
    fn(std::string("dense.bias"), &net.head.bias, std::size_t{1}, head_idx);
}

inline std::size_t parameter_count(const Network& net) {
    std::size_t n = 0;
    for_each_tensor(const_cast<Network&>(net),
                    [&](const std::string&, double*, std::size_t len, std::size_t) { n += len; });
    return n;
}

// ============================================================================
// Initialization
// ============================================================================

/// Glorot-uniform weights, zero biases except the forget-gate bias which
/// starts at +1. Draw order is fixed so equal seeds give equal networks.
inline Network make_network(const NetworkArchitecture& arch, SeededRng& rng) {
    arch.validate();
    Network net;
    net.arch = arch;
    for (const auto& spec : arch.lstm_layers) {
        LstmLayerParams l(spec.input_dim, spec.hidden_dim);
        const std::size_t fi = spec.input_dim, fh = spec.hidden_dim;
        l.w_i = uniform_init(rng, fh, fi, fi, fh);
        l.w_f = uniform_init(rng, fh, fi, fi, fh);
        l.w_o = uniform_init(rng, fh, fi, fi, fh);
        l.w_g = uniform_init(rng, fh, fi, fi, fh);
        l.u_i = uniform_init(rng, fh, fh, fh, fh);
        l.u_f = uniform_init(rng, fh, fh, fh, fh);
        l.u_o = uniform_init(rng, fh, fh, fh, fh);
        l.u_g = uniform_init(rng, fh, fh, fh, fh);
        std::fill(l.b_f.begin(), l.b_f.end(), 1.0);
        net.layers.push_back(std::move(l));
    }
    const std::size_t top = arch.top_hidden_dim();
    net.head = DenseParams(top);
    Matrix hw = uniform_init(rng, 1, top, top, 1);
    net.head.weight = hw.data;
    net.head.bias = 0.0;
    net.trainable.assign(net.layer_count(), true);
    net.param_version = 1;
    return net;
}

inline Network make_network(const NetworkArchitecture& arch, std::uint64_t seed) {
    SeededRng rng(seed);
    return make_network(arch, rng);
}

// ============================================================================
// Cell step
// ============================================================================

namespace detail {

/// y += M x  (M is hidden x n, x has length n)
inline void matvec_acc(const Matrix& m, const double* x, double* y) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

/// y += M^T a  (a has length rows, y length cols)
inline void matvec_transpose_acc(const Matrix& m, const double* a, double* y) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double ar = a[r];
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += ar * row[c];
    }
}

/// M += a x^T (outer product)
inline void outer_acc(Matrix& m, const double* a, const double* x) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double ar = a[r];
        double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * x[c];
    }
}

inline void gate_preact(const LstmLayerParams& l, const Matrix& w, const Matrix& u,
                        const Vector& b, const double* x, const double* h_prev, Vector& out) {
    out.assign(l.hidden_dim, 0.0);
    matvec_acc(w, x, out.data());
    matvec_acc(u, h_prev, out.data());
    for (std::size_t r = 0; r < l.hidden_dim; ++r) out[r] += b[r];
}

}  // namespace detail

/// Activations of one LSTM time step, kept for backpropagation.
struct StepActivations {
    Vector x;        // layer input at this step
    Vector h_prev, c_prev;
    Vector i, f, o, g;
    Vector c, h, tanh_c;
};

namespace detail {

inline StepActivations cell_step_impl(const LstmLayerParams& layer, const double* x,
                                      const double* h_prev, const double* c_prev) {
    const std::size_t H = layer.hidden_dim;
    StepActivations s;
    s.x.assign(x, x + layer.input_dim);
    s.h_prev.assign(h_prev, h_prev + H);
    s.c_prev.assign(c_prev, c_prev + H);

    gate_preact(layer, layer.w_i, layer.u_i, layer.b_i, x, h_prev, s.i);
    gate_preact(layer, layer.w_f, layer.u_f, layer.b_f, x, h_prev, s.f);
    gate_preact(layer, layer.w_o, layer.u_o, layer.b_o, x, h_prev, s.o);
    gate_preact(layer, layer.w_g, layer.u_g, layer.b_g, x, h_prev, s.g);
    for (std::size_t r = 0; r < H; ++r) {
        s.i[r] = sigmoid(s.i[r]);
        s.f[r] = sigmoid(s.f[r]);
        s.o[r] = sigmoid(s.o[r]);
        s.g[r] = std::tanh(s.g[r]);
    }
    s.c.resize(H);
    s.h.resize(H);
    s.tanh_c.resize(H);
    for (std::size_t r = 0; r < H; ++r) {
        s.c[r] = s.f[r] * c_prev[r] + s.i[r] * s.g[r];
        s.tanh_c[r] = std::tanh(s.c[r]);
        s.h[r] = s.o[r] * s.tanh_c[r];
    }
    return s;
}

}  // namespace detail

/// One LSTM cell update:
///   i = sigmoid(W_i x + U_i h + b_i)     f = sigmoid(W_f x + U_f h + b_f)
///   o = sigmoid(W_o x + U_o h + b_o)     g = tanh   (W_g x + U_g h + b_g)
///   c_t = f . c_prev + i . g             h_t = o . tanh(c_t)
inline std::pair<Vector, Vector> cell_step(const LstmLayerParams& layer, const Vector& x_t,
                                           const Vector& h_prev, const Vector& c_prev) {
    if (x_t.size() != layer.input_dim)
        throw ShapeError("cell_step: input has length " + std::to_string(x_t.size()) +
                         ", layer expects " + std::to_string(layer.input_dim));
    if (h_prev.size() != layer.hidden_dim || c_prev.size() != layer.hidden_dim)
        throw ShapeError("cell_step: state length does not match hidden_dim");
    auto s = detail::cell_step_impl(layer, x_t.data(), h_prev.data(), c_prev.data());
    return {std::move(s.h), std::move(s.c)};
}

// ============================================================================
// Forward
// ============================================================================

/// Everything backward() needs: per-layer, per-step activations plus the
/// identity of the network state the pass ran against.
struct ForwardCache {
    const Network* net = nullptr;
    std::uint64_t param_version = 0;
    std::size_t steps = 0;
    std::vector<std::vector<StepActivations>> acts;  // [layer][t]
    Vector top_h;                                     // top hidden at last step
    double prediction = 0.0;
};

/// Runs the window (rows = time steps, oldest first) through the LSTM stack
/// with zero initial states; the Dense head reads the top hidden state of
/// the final step only.
inline ForwardCache forward(const Network& net, const Matrix& window) {
    if (window.cols != net.input_dim())
        throw ShapeError("forward: window has " + std::to_string(window.cols) +
                         " features, network expects " + std::to_string(net.input_dim()));
    if (window.rows < 1) throw ShapeError("forward: window needs at least one time step");

    const std::size_t B = window.rows;
    ForwardCache cache;
    cache.net = &net;
    cache.param_version = net.param_version;
    cache.steps = B;
    cache.acts.resize(net.layers.size());

    std::vector<Vector> inputs(B);
    for (std::size_t t = 0; t < B; ++t)
        inputs[t].assign(window.row(t), window.row(t) + window.cols);

    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& layer = net.layers[k];
        Vector h(layer.hidden_dim, 0.0), c(layer.hidden_dim, 0.0);
        cache.acts[k].reserve(B);
        for (std::size_t t = 0; t < B; ++t) {
            auto s = detail::cell_step_impl(layer, inputs[t].data(), h.data(), c.data());
            h = s.h;
            c = s.c;
            inputs[t] = s.h;  // becomes next layer's input
            cache.acts[k].push_back(std::move(s));
        }
    }
    cache.top_h = inputs[B - 1];

    double y = net.head.bias;
    for (std::size_t r = 0; r < net.head.weight.size(); ++r)
        y += net.head.weight[r] * cache.top_h[r];
    cache.prediction = y;
    return cache;
}

/// Cache-free forward pass for evaluation loops. Same arithmetic as
/// forward(); the two paths are cross-checked in the tests.
inline double predict(const Network& net, const Matrix& window) {
    if (window.cols != net.input_dim())
        throw ShapeError("predict: window has " + std::to_string(window.cols) +
                         " features, network expects " + std::to_string(net.input_dim()));
    if (window.rows < 1) throw ShapeError("predict: window needs at least one time step");

    const std::size_t B = window.rows;
    std::vector<Vector> inputs(B);
    for (std::size_t t = 0; t < B; ++t)
        inputs[t].assign(window.row(t), window.row(t) + window.cols);

    Vector pre, h, c;
    for (const auto& layer : net.layers) {
        const std::size_t H = layer.hidden_dim;
        h.assign(H, 0.0);
        c.assign(H, 0.0);
        Vector gi(H), gf(H), go(H), gg(H);
        for (std::size_t t = 0; t < B; ++t) {
            const double* x = inputs[t].data();
            detail::gate_preact(layer, layer.w_i, layer.u_i, layer.b_i, x, h.data(), gi);
            detail::gate_preact(layer, layer.w_f, layer.u_f, layer.b_f, x, h.data(), gf);
            detail::gate_preact(layer, layer.w_o, layer.u_o, layer.b_o, x, h.data(), go);
            detail::gate_preact(layer, layer.w_g, layer.u_g, layer.b_g, x, h.data(), gg);
            for (std::size_t r = 0; r < H; ++r) {
                const double i = sigmoid(gi[r]);
                const double f = sigmoid(gf[r]);
                const double o = sigmoid(go[r]);
                const double g = std::tanh(gg[r]);
                c[r] = f * c[r] + i * g;
                h[r] = o * std::tanh(c[r]);
            }
            inputs[t] = h;
        }
    }
    double y = net.head.bias;
    for (std::size_t r = 0; r < net.head.weight.size(); ++r)
        y += net.head.weight[r] * inputs[B - 1][r];
    return y;
}

// ============================================================================
// Backward (BPTT)
// ============================================================================

/// Exact gradients of the sample loss with respect to every parameter,
/// given d(loss)/d(prediction). Gradients are produced for frozen layers
/// too; masking them out is the trainer's job.
inline GradientSet backward(const Network& net, const ForwardCache& cache, double loss_grad) {
    if (cache.net != &net)
        throw ContractError("backward: cache was produced by a different network");
    if (cache.param_version != net.param_version)
        throw ContractError("backward: cache is stale (parameters changed since forward)");

    const std::size_t B = cache.steps;
    const std::size_t L = net.layers.size();
    GradientSet grads = make_zero_gradients(net);

    // Dense head.
    grads.head.bias = loss_grad;
    for (std::size_t r = 0; r < net.head.weight.size(); ++r)
        grads.head.weight[r] = loss_grad * cache.top_h[r];

    // d(loss)/d(h_t) flowing into each layer from above; top layer only
    // receives a contribution at the final step.
    std::vector<std::vector<Vector>> dh_in(L);
    for (std::size_t k = 0; k < L; ++k)
        dh_in[k].assign(B, Vector(net.layers[k].hidden_dim, 0.0));
    for (std::size_t r = 0; r < net.head.weight.size(); ++r)
        dh_in[L - 1][B - 1][r] = loss_grad * net.head.weight[r];

    for (std::size_t k = L; k-- > 0;) {
        const auto& layer = net.layers[k];
        auto& g = grads.layers[k];
        const std::size_t H = layer.hidden_dim;

        Vector dh_next(H, 0.0), dc_next(H, 0.0);
        Vector dc(H), da_i(H), da_f(H), da_o(H), da_g(H);

        for (std::size_t t = B; t-- > 0;) {
            const StepActivations& s = cache.acts[k][t];
            for (std::size_t r = 0; r < H; ++r) {
                const double dh = dh_in[k][t][r] + dh_next[r];
                const double tc = s.tanh_c[r];
                dc[r] = dc_next[r] + dh * s.o[r] * (1.0 - tc * tc);
                da_o[r] = dh * tc * s.o[r] * (1.0 - s.o[r]);
                da_i[r] = dc[r] * s.g[r] * s.i[r] * (1.0 - s.i[r]);
                da_f[r] = dc[r] * s.c_prev[r] * s.f[r] * (1.0 - s.f[r]);
                da_g[r] = dc[r] * s.i[r] * (1.0 - s.g[r] * s.g[r]);
                dc_next[r] = dc[r] * s.f[r];
            }

            detail::outer_acc(g.w_i, da_i.data(), s.x.data());
            detail::outer_acc(g.w_f, da_f.data(), s.x.data());
            detail::outer_acc(g.w_o, da_o.data(), s.x.data());
            detail::outer_acc(g.w_g, da_g.data(), s.x.data());
            detail::outer_acc(g.u_i, da_i.data(), s.h_prev.data());
            detail::outer_acc(g.u_f, da_f.data(), s.h_prev.data());
            detail::outer_acc(g.u_o, da_o.data(), s.h_prev.data());
            detail::outer_acc(g.u_g, da_g.data(), s.h_prev.data());
            for (std::size_t r = 0; r < H; ++r) {
                g.b_i[r] += da_i[r];
                g.b_f[r] += da_f[r];
                g.b_o[r] += da_o[r];
                g.b_g[r] += da_g[r];
            }

            if (k > 0) {
                Vector& dx = dh_in[k - 1][t];
                detail::matvec_transpose_acc(layer.w_i, da_i.data(), dx.data());
                detail::matvec_transpose_acc(layer.w_f, da_f.data(), dx.data());
                detail::matvec_transpose_acc(layer.w_o, da_o.data(), dx.data());
                detail::matvec_transpose_acc(layer.w_g, da_g.data(), dx.data());
            }
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            detail::matvec_transpose_acc(layer.u_i, da_i.data(), dh_next.data());
            detail::matvec_transpose_acc(layer.u_f, da_f.data(), dh_next.data());
            detail::matvec_transpose_acc(layer.u_o, da_o.data(), dh_next.data());
            detail::matvec_transpose_acc(layer.u_g, da_g.data(), dh_next.data());
        }
    }
    return grads;
}

// ============================================================================
// Finite-difference oracle
// ============================================================================

/// Central finite differences of the single-sample MSE loss
/// L = (predict(window) - target)^2 through every parameter. Independent of
/// backward(); used to verify it.
inline GradientSet finite_difference_gradients(const Network& net, const Matrix& window,
                                               double target, double eps) {
    if (eps <= 0.0) throw ConfigError("finite_difference_gradients: eps must be positive");
    Network probe = net;  // deep copy; original untouched
    GradientSet grads = make_zero_gradients(net);

    std::vector<std::pair<double*, std::size_t>> param_tensors, grad_tensors;
    for_each_tensor(probe, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        param_tensors.emplace_back(p, n);
    });
    for_each_tensor(grads, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        grad_tensors.emplace_back(p, n);
    });

    auto loss = [&]() {
        const double d = predict(probe, window) - target;
        return d * d;
    };

    for (std::size_t t = 0; t < param_tensors.size(); ++t) {
        auto [pp, n] = param_tensors[t];
        double* gp = grad_tensors[t].first;
        for (std::size_t idx = 0; idx < n; ++idx) {
            const double saved = pp[idx];
            pp[idx] = saved + eps;
            const double up = loss();
            pp[idx] = saved - eps;
            const double down = loss();
            pp[idx] = saved;
            gp[idx] = (up - down) / (2.0 * eps);
        }
    }
    return grads;
}

/// Max over parameters of |a-b| / max(|a|,|b|,1e-8); the gradient-check metric.
inline double max_relative_gradient_error(const GradientSet& a, const GradientSet& b) {
    double worst = 0.0;
    auto& am = const_cast<GradientSet&>(a);
    auto& bm = const_cast<GradientSet&>(b);
    std::vector<std::pair<double*, std::size_t>> at, bt;
    for_each_tensor(am, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        at.emplace_back(p, n);
    });
    for_each_tensor(bm, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        bt.emplace_back(p, n);
    });
    for (std::size_t t = 0; t < at.size(); ++t)
        for (std::size_t i = 0; i < at[t].second; ++i) {
            const double x = at[t].first[i], y = bt[t].first[i];
            const double denom = std::max({std::fabs(x), std::fabs(y), 1e-8});
            worst = std::max(worst, std::fabs(x - y) / denom);
        }
    return worst;
}

// ============================================================================
// JSON (de)serialization of networks
// ============================================================================

inline nlohmann::json architecture_to_json(const NetworkArchitecture& arch) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : arch.lstm_layers)
        layers.push_back({{"type", "lstm"}, {"input_dim", l.input_dim}, {"hidden_dim", l.hidden_dim}});
    return {{"lstm_layers", layers},
            {"dense", {{"input_dim", arch.top_hidden_dim()}, {"output_dim", 1}}}};
}

inline NetworkArchitecture architecture_from_json(const nlohmann::json& j) {
    NetworkArchitecture arch;
    for (const auto& l : j.at("lstm_layers"))
        arch.lstm_layers.push_back({l.at("input_dim").get<std::size_t>(),
                                    l.at("hidden_dim").get<std::size_t>()});
    arch.validate();
    if (j.at("dense").at("input_dim").get<std::size_t>() != arch.top_hidden_dim())
        throw ShapeError("architecture: dense input_dim does not match top hidden_dim");
    return arch;
}

/// Weights as named flat row-major arrays with explicit shapes.
inline nlohmann::json weights_to_json(const Network& net) {
    nlohmann::json w = nlohmann::json::object();
    auto& mutnet = const_cast<Network&>(net);
    for_each_tensor(mutnet, [&](const std::string& name, double* p, std::size_t n, std::size_t) {
        w[name] = {{"len", n}, {"data", std::vector<double>(p, p + n)}};
    });
    // annotate matrix shapes for readability/validation
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& l = net.layers[k];
        const std::string pfx = "lstm" + std::to_string(k) + ".";
        const std::pair<const char*, const Matrix*> shaped[] = {
            {"w_i", &l.w_i}, {"w_f", &l.w_f}, {"w_o", &l.w_o}, {"w_g", &l.w_g},
            {"u_i", &l.u_i}, {"u_f", &l.u_f}, {"u_o", &l.u_o}, {"u_g", &l.u_g}};
        for (const auto& [suffix, m] : shaped) {
            w[pfx + suffix]["rows"] = m->rows;
            w[pfx + suffix]["cols"] = m->cols;
        }
    }
    return w;
}

inline nlohmann::json network_to_json(const Network& net) {
    return {{"architecture", architecture_to_json(net.arch)},
            {"trainable", net.trainable},
            {"weights", weights_to_json(net)}};
}

inline Network network_from_json(const nlohmann::json& j) {
    Network net;
    net.arch = architecture_from_json(j.at("architecture"));
    for (const auto& spec : net.arch.lstm_layers)
        net.layers.emplace_back(spec.input_dim, spec.hidden_dim);
    net.head = DenseParams(net.arch.top_hidden_dim());
    const auto& w = j.at("weights");
    for_each_tensor(net, [&](const std::string& name, double* p, std::size_t n, std::size_t) {
        const auto& entry = w.at(name);
        const auto& data = entry.at("data");
        if (entry.at("len").get<std::size_t>() != n || data.size() != n)
            throw ShapeError("network weights: tensor '" + name + "' has wrong length");
        for (std::size_t i = 0; i < n; ++i) p[i] = data[i].get<double>();
    });
    net.trainable = j.at("trainable").get<std::vector<bool>>();
    if (net.trainable.size() != net.layer_count())
        throw ShapeError("network: trainable mask length does not match layer count");
    net.param_version = 1;
    return net;
}

}  // namespace tlf
