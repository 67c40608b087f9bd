#include "tegdet/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tegdet/error.hpp"
#include "tegdet/rng.hpp"

namespace tegdet {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::time_coeff: return "time_coeff";
        case Variant::sum: return "sum";
        case Variant::mean_pool: return "mean_pool";
        case Variant::max_pool: return "max_pool";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "time_coeff") return Variant::time_coeff;
    if (name == "sum") return Variant::sum;
    if (name == "mean_pool") return Variant::mean_pool;
    if (name == "max_pool") return Variant::max_pool;
    fail("unknown model variant: " + name);
}

namespace {

bool uses_assignment_pooling(Variant v) {
    return v == Variant::time_coeff || v == Variant::sum;
}

}  // namespace

std::vector<std::size_t> ModelConfig::level_sizes(std::size_t n) const {
    std::vector<std::size_t> sizes{n};
    for (std::size_t l = 1; l < pool_levels; ++l) {
        if (uses_assignment_pooling(variant)) {
            auto next = static_cast<std::size_t>(
                std::llround(static_cast<double>(sizes.back()) * assign_ratio));
            sizes.push_back(std::max<std::size_t>(1, next));
        } else {
            sizes.push_back(1);
        }
    }
    sizes.push_back(1);  // the final level always reaches one cluster
    return sizes;
}

void ModelConfig::validate() const {
    if (hidden_dim < 1 || repr_dim < 1 || mlp_hidden < 1)
        fail("model config: dimensions must be >= 1");
    if (pool_levels < 1) fail("model config: pool_levels must be >= 1");
    if (assign_ratio <= 0.0 || assign_ratio > 1.0)
        fail("model config: assign_ratio must lie in (0, 1]");
    if (classes != 2) fail("model config: only binary classification is supported");
    if (t_slices < 1) fail("model config: t_slices must be >= 1");
    if (max_nodes < 1) fail("model config: max_nodes must be >= 1");
}

void ModelParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    for (std::size_t l = 0; l < ef.size(); ++l) {
        const std::string p = "ef" + std::to_string(l) + ".";
        fn(p + "w0", ef[l].w0);
        fn(p + "w1", ef[l].w1);
        fn(p + "wz", ef[l].wz);
        fn(p + "uz", ef[l].uz);
        fn(p + "wr", ef[l].wr);
        fn(p + "ur", ef[l].ur);
        fn(p + "w", ef[l].w);
        fn(p + "u", ef[l].u);
    }
    for (std::size_t l = 0; l < pool.size(); ++l) {
        const std::string p = "pool" + std::to_string(l) + ".";
        fn(p + "w0", pool[l].w0);
        fn(p + "w1", pool[l].w1);
    }
    fn("readout.logits", readout_logits);
    fn("mlp.w0", mlp_w0);
    fn("mlp.b0", mlp_b0);
    fn("mlp.w1", mlp_w1);
    fn("mlp.b1", mlp_b1);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

std::size_t ModelParams::count_scalars() const {
    std::size_t n = 0;
    for_each([&n](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t H = config.hidden_dim, d = config.repr_dim;

    ModelParams params;
    params.ef.resize(config.pool_levels);
    for (std::size_t l = 0; l < config.pool_levels; ++l) {
        const std::size_t in_dim = l == 0 ? 2 : d;
        auto& lvl = params.ef[l];
        lvl.w0 = Tensor(in_dim, H);
        lvl.w1 = Tensor(H, d);
        for (Tensor* g : {&lvl.wz, &lvl.uz, &lvl.wr, &lvl.ur, &lvl.w, &lvl.u}) *g = Tensor(d, d);
    }
    if (uses_assignment_pooling(config.variant)) {
        const auto widths = config.level_sizes(config.max_nodes);
        params.pool.resize(config.pool_levels);
        for (std::size_t l = 0; l < config.pool_levels; ++l) {
            params.pool[l].w0 = Tensor(d, H);
            params.pool[l].w1 = Tensor(H, widths[l + 1]);
        }
    }
    params.readout_logits = Tensor(1, config.t_slices);
    params.mlp_w0 = Tensor(d, config.mlp_hidden);
    params.mlp_b0 = Tensor(1, config.mlp_hidden);
    params.mlp_w1 = Tensor(config.mlp_hidden, config.classes);
    params.mlp_b1 = Tensor(1, config.classes);

    Rng rng(seed);
    params.for_each([&rng](const std::string& name, Tensor& t) {
        // Logits and biases start at zero; the softmax readout then begins
        // uniform over slices.
        if (name == "readout.logits" || name == "mlp.b0" || name == "mlp.b1") return;
        const double s =
            std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
        for (double& v : t.raw()) v = rng.uniform(-s, s);
    });
    return params;
}

namespace {

std::string hex_encode(const Tensor& t) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(t.size() * 16);
    for (double v : t.raw()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 15; i >= 0; --i) out.push_back(digits[(bits >> (i * 4)) & 0xF]);
    }
    return out;
}

void hex_decode(const std::string& hex, Tensor& t) {
    if (hex.size() != t.size() * 16) fail("checkpoint: payload length mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint64_t bits = 0;
        for (std::size_t j = 0; j < 16; ++j) {
            const char c = hex[i * 16 + j];
            std::uint64_t nib;
            if (c >= '0' && c <= '9')
                nib = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f')
                nib = static_cast<std::uint64_t>(c - 'a' + 10);
            else
                fail("checkpoint: bad hex digit");
            bits = (bits << 4) | nib;
        }
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        t.raw()[i] = v;
    }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    doc["format"] = "tegdet-checkpoint-v1";
    nlohmann::ordered_json body;
    params.for_each([&body](const std::string& name, const Tensor& t) {
        nlohmann::ordered_json entry;
        entry["shape"] = {t.rows(), t.cols()};
        entry["data"] = hex_encode(t);
        body[name] = std::move(entry);
    });
    doc["params"] = std::move(body);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write checkpoint: " + path.string());
    out << doc.dump(1) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read checkpoint: " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "tegdet-checkpoint-v1")
        fail("unrecognized checkpoint format in " + path.string());
    const auto& body = doc.at("params");

    ModelParams params = init_params(config, 0);
    std::size_t seen = 0;
    params.for_each([&](const std::string& name, Tensor& t) {
        if (!body.contains(name)) fail("checkpoint missing parameter " + name);
        const auto& entry = body.at(name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols())
            fail("checkpoint shape mismatch for " + name);
        hex_decode(entry.at("data").get<std::string>(), t);
        ++seen;
    });
    if (body.size() != seen) fail("checkpoint has unexpected extra parameters");
    return params;
}

namespace {

struct EfLevelVars {
    Var w0, w1, wz, uz, wr, ur, w, u;
};
struct PoolLevelVars {
    Var w0, w1;
};

struct ParamVars {
    std::vector<EfLevelVars> ef;
    std::vector<PoolLevelVars> pool;
    Var readout_logits, mlp_w0, mlp_b0, mlp_w1, mlp_b1;
    std::vector<Var> flat;  // for_each order
};

ParamVars make_param_vars(Tape& tape, const ModelParams& params, bool requires_grad) {
    ParamVars vars;
    vars.ef.resize(params.ef.size());
    vars.pool.resize(params.pool.size());
    const_cast<ModelParams&>(params).for_each([&](const std::string& name, Tensor& t) {
        Var v = tape.leaf(t, requires_grad);
        vars.flat.push_back(v);
        const auto dot = name.find('.');
        const std::string group = name.substr(0, dot), field = name.substr(dot + 1);
        if (group.rfind("ef", 0) == 0) {
            auto& lvl = vars.ef[static_cast<std::size_t>(std::stoul(group.substr(2)))];
            if (field == "w0") lvl.w0 = v;
            else if (field == "w1") lvl.w1 = v;
            else if (field == "wz") lvl.wz = v;
            else if (field == "uz") lvl.uz = v;
            else if (field == "wr") lvl.wr = v;
            else if (field == "ur") lvl.ur = v;
            else if (field == "w") lvl.w = v;
            else lvl.u = v;
        } else if (group.rfind("pool", 0) == 0) {
            auto& lvl = vars.pool[static_cast<std::size_t>(std::stoul(group.substr(4)))];
            if (field == "w0") lvl.w0 = v;
            else lvl.w1 = v;
        } else if (group == "readout") {
            vars.readout_logits = v;
        } else {
            if (field == "w0") vars.mlp_w0 = v;
            else if (field == "b0") vars.mlp_b0 = v;
            else if (field == "w1") vars.mlp_w1 = v;
            else vars.mlp_b1 = v;
        }
    });
    return vars;
}

// Two-layer graph convolution with a linear output layer:
// a_hat relu(a_hat x W0) W1.
Var gcn(Tape& tape, const Var& x, const Var& a_hat, const Var& w0, const Var& w1) {
    Var hidden = tape.relu(tape.matmul(tape.matmul(a_hat, x), w0));
    return tape.matmul(tape.matmul(a_hat, hidden), w1);
}

void check_finite(const Var& v, const char* what) {
    if (!v->value.all_finite()) fail(std::string("ef_extract: non-finite ") + what);
}

Var ef_extract_v(Tape& tape, const Var& x, const Var& state, const Var& a_hat,
                 const EfLevelVars& lvl) {
    Var z_struct = gcn(tape, x, a_hat, lvl.w0, lvl.w1);
    check_finite(z_struct, "structural features Z");
    Var update = tape.sigmoid(tape.add(tape.matmul(z_struct, lvl.wz), tape.matmul(state, lvl.uz)));
    check_finite(update, "update gate");
    Var reset = tape.sigmoid(tape.add(tape.matmul(z_struct, lvl.wr), tape.matmul(state, lvl.ur)));
    check_finite(reset, "reset gate");
    Var candidate = tape.tanh(tape.add(tape.matmul(z_struct, lvl.w),
                                       tape.matmul(tape.hadamard(reset, state), lvl.u)));
    check_finite(candidate, "candidate state");
    Var keep = tape.hadamard(tape.sub(tape.leaf(Tensor::constant(update->value.rows(),
                                                                 update->value.cols(), 1.0)),
                                      update),
                             state);
    Var out = tape.add(keep, tape.hadamard(update, candidate));
    check_finite(out, "evolution features");
    return out;
}

struct PoolResultV {
    Var h_pool, a_pool, assignment;
};

PoolResultV pool_v(Tape& tape, const Var& h, const Var& adj, const Var& a_hat,
                   const PoolLevelVars& lvl, std::size_t n_clusters) {
    Var logits = gcn(tape, h, a_hat, lvl.w0, tape.col_slice(lvl.w1, n_clusters));
    Var c = tape.softmax_rows(logits);
    Var ct = tape.transpose(c);
    PoolResultV out;
    out.assignment = c;
    out.h_pool = tape.matmul(ct, h);
    out.a_pool = tape.matmul(tape.matmul(ct, adj), c);
    return out;
}

ForwardGraph build_forward_impl(Tape& tape, const Teg& teg, const ParamVars& vars,
                                const ModelConfig& config, std::optional<bool> label,
                                bool adj_requires_grad) {
    const std::size_t N = teg.n(), T = config.t_slices, L = config.pool_levels;
    if (teg.t_slices != T)
        fail("forward: TEG has " + std::to_string(teg.t_slices) + " slices, model expects " +
             std::to_string(T));
    if (N > config.max_nodes)
        fail("forward: TEG has " + std::to_string(N) + " nodes, exceeding max_nodes " +
             std::to_string(config.max_nodes));
    if (N < 1) fail("forward: empty TEG");

    const bool assignment = uses_assignment_pooling(config.variant);
    const auto sizes = config.level_sizes(N);

    ForwardGraph out;
    Var attrs = tape.leaf(teg.attrs);

    std::vector<Var> states;
    for (std::size_t l = 0; l < L; ++l)
        states.push_back(tape.leaf(Tensor(sizes[l], config.repr_dim)));

    const auto adj_values = teg.adjacency();
    std::vector<Var> slice_features;
    slice_features.reserve(T);

    for (std::size_t t = 0; t < T; ++t) {
        Var x = attrs;
        Var adj = tape.leaf(adj_values[t], adj_requires_grad);
        out.adj_slices.push_back(adj);
        for (std::size_t l = 0; l < L; ++l) {
            // The slice adjacency is differentiated through only when someone
            // asked for its gradient; pooled adjacencies always depend on the
            // parameters, so they stay on the tape.
            Var a_hat = adj->requires_grad ? tape.normalize_adj(adj)
                                           : tape.leaf(normalize_adj(adj->value));
            Var h;
            try {
                h = ef_extract_v(tape, x, states[l], a_hat, vars.ef[l]);
            } catch (const Error& e) {
                fail(std::string(e.what()) + " at slice " + std::to_string(t) + ", level " +
                     std::to_string(l));
            }
            states[l] = h;
            if (assignment) {
                auto pooled = pool_v(tape, h, adj, a_hat, vars.pool[l], sizes[l + 1]);
                x = pooled.h_pool;
                adj = pooled.a_pool;
            } else if (config.variant == Variant::mean_pool) {
                x = tape.mean_rows(h);
                adj = tape.leaf(Tensor(1, 1));
            } else {
                x = tape.max_rows(h);
                adj = tape.leaf(Tensor(1, 1));
            }
        }
        slice_features.push_back(x);
    }

    Var stacked = tape.concat_rows(slice_features);  // T x d
    Var behavior;
    if (config.variant == Variant::sum) {
        behavior = tape.sum_rows(stacked);
    } else {
        Var alpha = tape.softmax_rows(vars.readout_logits);
        behavior = tape.matmul(alpha, stacked);
    }

    Var hidden = tape.relu(tape.add(tape.matmul(behavior, vars.mlp_w0), vars.mlp_b0));
    out.logits = tape.add(tape.matmul(hidden, vars.mlp_w1), vars.mlp_b1);
    out.probabilities = tape.softmax_rows(out.logits);

    if (label.has_value()) {
        Tensor q(1, 2);
        q(0, *label ? 1 : 0) = 1.0;
        Var log_probs = tape.log(tape.clamp_min(out.probabilities, 1e-12));
        out.loss = tape.scale(tape.sum_all(tape.hadamard(tape.leaf(q), log_probs)), -1.0);
    }
    return out;
}

}  // namespace

Var ef_extract(Tape& tape, const Var& x, const Var& state, const Var& adj,
               const ModelParams::EfLevel& level) {
    EfLevelVars vars{tape.leaf(level.w0), tape.leaf(level.w1), tape.leaf(level.wz),
                     tape.leaf(level.uz), tape.leaf(level.wr), tape.leaf(level.ur),
                     tape.leaf(level.w),  tape.leaf(level.u)};
    Var a_hat = adj->requires_grad ? tape.normalize_adj(adj) : tape.leaf(normalize_adj(adj->value));
    return ef_extract_v(tape, x, state, a_hat, vars);
}

PoolResult pool(Tape& tape, const Var& h, const Var& adj, const ModelParams::PoolLevel& level,
                std::size_t n_clusters) {
    PoolLevelVars vars{tape.leaf(level.w0), tape.leaf(level.w1)};
    Var a_hat = adj->requires_grad ? tape.normalize_adj(adj) : tape.leaf(normalize_adj(adj->value));
    auto r = pool_v(tape, h, adj, a_hat, vars, n_clusters);
    return {r.h_pool, r.a_pool, r.assignment};
}

ForwardGraph build_forward(Tape& tape, const Teg& teg, const ModelParams& params,
                           const ModelConfig& config, std::optional<bool> label,
                           bool adj_requires_grad) {
    config.validate();
    ParamVars vars = make_param_vars(tape, params, /*requires_grad=*/true);
    auto graph = build_forward_impl(tape, teg, vars, config, label, adj_requires_grad);
    graph.param_vars = std::move(vars.flat);
    return graph;
}

Prediction forward(const Teg& teg, const ModelParams& params, const ModelConfig& config) {
    config.validate();
    Tape tape;
    ParamVars vars = make_param_vars(tape, params, /*requires_grad=*/false);
    auto graph = build_forward_impl(tape, teg, vars, config, std::nullopt, false);
    if (!graph.probabilities->value.all_finite()) fail("forward: non-finite probabilities");
    return {graph.probabilities->value, graph.logits->value};
}

namespace {

double batch_loss_impl(const std::vector<const Teg*>& batch, const std::vector<bool>& labels,
                       const ModelParams& params, const ModelConfig& config,
                       std::vector<Tensor>* grads) {
    if (batch.empty()) fail("loss: empty batch");
    if (batch.size() != labels.size()) fail("loss: batch/label size mismatch");
    config.validate();

    Tape tape;
    ParamVars vars = make_param_vars(tape, params, grads != nullptr);
    Var total;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto graph = build_forward_impl(tape, *batch[i], vars, config, labels[i], false);
        total = total ? tape.add(total, graph.loss) : graph.loss;
    }
    Var mean = tape.scale(total, 1.0 / static_cast<double>(batch.size()));
    const double value = mean->value(0, 0);
    if (grads) {
        tape.backward(mean);
        grads->clear();
        for (const auto& v : vars.flat) {
            if (v->has_grad())
                grads->push_back(v->grad);
            else
                grads->push_back(Tensor(v->value.rows(), v->value.cols()));
        }
    }
    return value;
}

}  // namespace

double batch_loss(const std::vector<const Teg*>& batch, const std::vector<bool>& labels,
                  const ModelParams& params, const ModelConfig& config) {
    return batch_loss_impl(batch, labels, params, config, nullptr);
}

double batch_loss_grad(const std::vector<const Teg*>& batch, const std::vector<bool>& labels,
                       const ModelParams& params, const ModelConfig& config,
                       std::vector<Tensor>& grads) {
    return batch_loss_impl(batch, labels, params, config, &grads);
}

}  // namespace tegdet
