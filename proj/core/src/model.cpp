#include "deidkit/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "deidkit/errors.hpp"

namespace deidkit {

namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kInitStdDev = 0.02;

// Per-row LayerNorm. Writes the normalized activations and the reciprocal
// standard deviations, which the backward pass reuses.
template <typename T>
void layer_norm_forward(const Matrix<T>& x, const Vector<T>& gamma, const Vector<T>& beta,
                        Matrix<T>& normalized, Vector<T>& inv_std, Matrix<T>& out) {
    const Eigen::Index rows = x.rows();
    const Eigen::Index cols = x.cols();
    normalized.resize(rows, cols);
    out.resize(rows, cols);
    inv_std.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const T mu = x.row(r).mean();
        const T var = (x.row(r).array() - mu).square().sum() / static_cast<T>(cols);
        const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
        inv_std(r) = inv;
        normalized.row(r) = (x.row(r).array() - mu).matrix() * inv;
        out.row(r) = normalized.row(r).cwiseProduct(gamma.transpose()) + beta.transpose();
    }
}

// Gradient of LayerNorm. Accumulates parameter gradients, returns the input
// gradient.
template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& normalized,
                              const Vector<T>& inv_std, const Vector<T>& gamma,
                              Vector<T>& dgamma, Vector<T>& dbeta) {
    const Eigen::Index rows = dy.rows();
    const Eigen::Index cols = dy.cols();
    Matrix<T> dx(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        dgamma += dy.row(r).cwiseProduct(normalized.row(r)).transpose();
        dbeta += dy.row(r).transpose();
        const auto dxhat = dy.row(r).cwiseProduct(gamma.transpose());
        const T m1 = dxhat.mean();
        const T m2 = dxhat.cwiseProduct(normalized.row(r)).mean();
        dx.row(r) =
            (dxhat.array() - m1 - normalized.row(r).array() * m2).matrix() * inv_std(r);
    }
    return dx;
}

// Row-wise softmax over scores whose masked columns hold -infinity.
template <typename T>
void masked_softmax_rows(Matrix<T>& scores) {
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const T peak = scores.row(r).maxCoeff();
        if (!std::isfinite(static_cast<double>(peak))) {
            throw InputError("attention row has no unmasked key");
        }
        Eigen::Array<T, 1, Eigen::Dynamic> shifted = scores.row(r).array() - peak;
        // exp(-inf) underflows to zero, which is exactly the masking we want.
        Eigen::Array<T, 1, Eigen::Dynamic> weights = shifted.exp();
        scores.row(r) = (weights / weights.sum()).matrix();
    }
}

// Inverted-dropout mask: entries are 0 with probability rate, else
// 1/(1-rate). Draws in double so float and double models share streams.
template <typename T>
Matrix<T> make_drop_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    Matrix<T> mask(rows, cols);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            mask(r, c) = rng.uniform() < rate ? T(0) : static_cast<T>(scale);
        }
    }
    return mask;
}

template <typename T>
void fill_truncated_normal(T* data, Eigen::Index count, Rng& rng) {
    for (Eigen::Index i = 0; i < count; ++i) {
        data[i] = static_cast<T>(rng.truncated_normal(kInitStdDev, 2.0));
    }
}

void append_layer_entries(ParameterLedger& ledger, const std::string& prefix,
                          std::int64_t h, std::int64_t f) {
    const auto add = [&ledger](const std::string& path, std::int64_t count) {
        ledger.entries.push_back({path, count});
        ledger.total += count;
    };
    add(prefix + ".attention.query.weight", h * h);
    add(prefix + ".attention.query.bias", h);
    add(prefix + ".attention.key.weight", h * h);
    add(prefix + ".attention.key.bias", h);
    add(prefix + ".attention.value.weight", h * h);
    add(prefix + ".attention.value.bias", h);
    add(prefix + ".attention.output.weight", h * h);
    add(prefix + ".attention.output.bias", h);
    add(prefix + ".attention.layer_norm.gamma", h);
    add(prefix + ".attention.layer_norm.beta", h);
    add(prefix + ".ffn.in.weight", h * f);
    add(prefix + ".ffn.in.bias", f);
    add(prefix + ".ffn.out.weight", f * h);
    add(prefix + ".ffn.out.bias", h);
    add(prefix + ".ffn.layer_norm.gamma", h);
    add(prefix + ".ffn.layer_norm.beta", h);
}

}  // namespace

void ModelConfig::validate() const {
    if (vocab_size < 1 || max_positions < 1 || type_vocab < 1 || embedding_dim < 1 ||
        hidden_dim < 1 || num_layers < 1 || num_heads < 1 || ffn_dim < 1 || num_labels < 1) {
        throw ConfigError("all model dimensions must be at least 1");
    }
    if (hidden_dim % num_heads != 0) {
        throw ConfigError("hidden_dim " + std::to_string(hidden_dim) +
                          " is not divisible by num_heads " + std::to_string(num_heads));
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("dropout must lie in [0, 1)");
    }
    if (!factorized_embedding && embedding_dim != hidden_dim) {
        throw ConfigError(
            "embedding_dim must equal hidden_dim unless the embedding is factorized");
    }
}

ModelConfig ModelConfig::bert_base() {
    ModelConfig c;
    c.vocab_size = 30522;
    c.max_positions = 512;
    c.type_vocab = 2;
    c.embedding_dim = 768;
    c.hidden_dim = 768;
    c.num_layers = 12;
    c.num_heads = 12;
    c.ffn_dim = 3072;
    c.dropout = 0.1;
    return c;
}

ModelConfig ModelConfig::bert_large() {
    ModelConfig c = bert_base();
    c.embedding_dim = 1024;
    c.hidden_dim = 1024;
    c.num_layers = 24;
    c.num_heads = 16;
    c.ffn_dim = 4096;
    return c;
}

ModelConfig ModelConfig::roberta_base() {
    ModelConfig c = bert_base();
    c.vocab_size = 50265;
    c.max_positions = 514;
    c.type_vocab = 1;
    return c;
}

ModelConfig ModelConfig::roberta_large() {
    ModelConfig c = bert_large();
    c.vocab_size = 50265;
    c.max_positions = 514;
    c.type_vocab = 1;
    return c;
}

ModelConfig ModelConfig::albert_base() {
    ModelConfig c;
    c.vocab_size = 30000;
    c.max_positions = 512;
    c.type_vocab = 2;
    c.embedding_dim = 128;
    c.hidden_dim = 768;
    c.num_layers = 12;
    c.num_heads = 12;
    c.ffn_dim = 3072;
    c.dropout = 0.0;
    c.share_layers = true;
    c.factorized_embedding = true;
    return c;
}

ModelConfig ModelConfig::albert_xxlarge() {
    ModelConfig c = albert_base();
    c.hidden_dim = 4096;
    c.num_heads = 64;
    c.ffn_dim = 16384;
    return c;
}

ParameterLedger count_parameters(const ModelConfig& config) {
    config.validate();
    const auto v = static_cast<std::int64_t>(config.vocab_size);
    const auto p = static_cast<std::int64_t>(config.max_positions);
    const auto t = static_cast<std::int64_t>(config.type_vocab);
    const auto e = static_cast<std::int64_t>(config.embedding_dim);
    const auto h = static_cast<std::int64_t>(config.hidden_dim);
    const auto f = static_cast<std::int64_t>(config.ffn_dim);
    const auto c = static_cast<std::int64_t>(config.num_labels);

    ParameterLedger ledger;
    const auto add = [&ledger](const std::string& path, std::int64_t count) {
        ledger.entries.push_back({path, count});
        ledger.total += count;
    };
    add("embeddings.word.weight", v * e);
    add("embeddings.position.weight", p * e);
    add("embeddings.token_type.weight", t * e);
    add("embeddings.layer_norm.gamma", e);
    add("embeddings.layer_norm.beta", e);
    if (config.factorized_embedding) {
        add("embeddings.hidden_mapping.weight", e * h);
        add("embeddings.hidden_mapping.bias", h);
    }
    if (config.share_layers) {
        append_layer_entries(ledger, "encoder.shared", h, f);
    } else {
        for (int k = 0; k < config.num_layers; ++k) {
            append_layer_entries(ledger, "encoder.layer." + std::to_string(k), h, f);
        }
    }
    add("classifier.weight", h * c);
    add("classifier.bias", c);
    return ledger;
}

template <typename T>
std::vector<ParamRef<T>> parameter_refs(TaggerModel<T>& model) {
    std::vector<ParamRef<T>> refs;
    const auto mat = [&refs](std::string name, Matrix<T>& m, bool decay) {
        refs.push_back(ParamRef<T>{std::move(name), &m, nullptr, decay});
    };
    const auto vec = [&refs](std::string name, Vector<T>& v, bool decay) {
        refs.push_back(ParamRef<T>{std::move(name), nullptr, &v, decay});
    };
    mat("embeddings.word.weight", model.word_emb, true);
    mat("embeddings.position.weight", model.pos_emb, true);
    mat("embeddings.token_type.weight", model.type_emb, true);
    vec("embeddings.layer_norm.gamma", model.emb_ln_gamma, false);
    vec("embeddings.layer_norm.beta", model.emb_ln_beta, false);
    if (model.config.factorized_embedding) {
        mat("embeddings.hidden_mapping.weight", model.mapping_w, true);
        vec("embeddings.hidden_mapping.bias", model.mapping_b, false);
    }
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const std::string prefix = model.config.share_layers
                                       ? std::string("encoder.shared")
                                       : "encoder.layer." + std::to_string(k);
        LayerParams<T>& lp = model.layers[k];
        mat(prefix + ".attention.query.weight", lp.q_w, true);
        vec(prefix + ".attention.query.bias", lp.q_b, false);
        mat(prefix + ".attention.key.weight", lp.k_w, true);
        vec(prefix + ".attention.key.bias", lp.k_b, false);
        mat(prefix + ".attention.value.weight", lp.v_w, true);
        vec(prefix + ".attention.value.bias", lp.v_b, false);
        mat(prefix + ".attention.output.weight", lp.o_w, true);
        vec(prefix + ".attention.output.bias", lp.o_b, false);
        vec(prefix + ".attention.layer_norm.gamma", lp.attn_ln_gamma, false);
        vec(prefix + ".attention.layer_norm.beta", lp.attn_ln_beta, false);
        mat(prefix + ".ffn.in.weight", lp.ffn_in_w, true);
        vec(prefix + ".ffn.in.bias", lp.ffn_in_b, false);
        mat(prefix + ".ffn.out.weight", lp.ffn_out_w, true);
        vec(prefix + ".ffn.out.bias", lp.ffn_out_b, false);
        vec(prefix + ".ffn.layer_norm.gamma", lp.ffn_ln_gamma, false);
        vec(prefix + ".ffn.layer_norm.beta", lp.ffn_ln_beta, false);
    }
    mat("classifier.weight", model.cls_w, true);
    vec("classifier.bias", model.cls_b, false);
    return refs;
}

template <typename T>
TaggerModel<T> build_model(const ModelConfig& config) {
    config.validate();
    TaggerModel<T> model;
    model.config = config;
    const int e = config.embedding_dim;
    const int h = config.hidden_dim;
    const int f = config.ffn_dim;
    model.word_emb = Matrix<T>::Zero(config.vocab_size, e);
    model.pos_emb = Matrix<T>::Zero(config.max_positions, e);
    model.type_emb = Matrix<T>::Zero(config.type_vocab, e);
    model.emb_ln_gamma = Vector<T>::Zero(e);
    model.emb_ln_beta = Vector<T>::Zero(e);
    if (config.factorized_embedding) {
        model.mapping_w = Matrix<T>::Zero(e, h);
        model.mapping_b = Vector<T>::Zero(h);
    }
    const std::size_t stored_layers =
        config.share_layers ? 1 : static_cast<std::size_t>(config.num_layers);
    model.layers.resize(stored_layers);
    for (LayerParams<T>& lp : model.layers) {
        lp.q_w = Matrix<T>::Zero(h, h);
        lp.k_w = Matrix<T>::Zero(h, h);
        lp.v_w = Matrix<T>::Zero(h, h);
        lp.o_w = Matrix<T>::Zero(h, h);
        lp.q_b = Vector<T>::Zero(h);
        lp.k_b = Vector<T>::Zero(h);
        lp.v_b = Vector<T>::Zero(h);
        lp.o_b = Vector<T>::Zero(h);
        lp.attn_ln_gamma = Vector<T>::Zero(h);
        lp.attn_ln_beta = Vector<T>::Zero(h);
        lp.ffn_in_w = Matrix<T>::Zero(h, f);
        lp.ffn_in_b = Vector<T>::Zero(f);
        lp.ffn_out_w = Matrix<T>::Zero(f, h);
        lp.ffn_out_b = Vector<T>::Zero(h);
        lp.ffn_ln_gamma = Vector<T>::Zero(h);
        lp.ffn_ln_beta = Vector<T>::Zero(h);
    }
    model.cls_w = Matrix<T>::Zero(h, config.num_labels);
    model.cls_b = Vector<T>::Zero(config.num_labels);
    return model;
}

template <typename T>
TaggerModel<T> zeros_like(const TaggerModel<T>& model) {
    return build_model<T>(model.config);
}

template <typename T>
std::int64_t TaggerModel<T>::parameter_count() const {
    std::int64_t total = 0;
    auto& self = const_cast<TaggerModel<T>&>(*this);
    for (const ParamRef<T>& ref : parameter_refs(self)) total += ref.size();
    return total;
}

template <typename T>
TaggerModel<T> init_model_as(const ModelConfig& config, std::uint64_t seed) {
    TaggerModel<T> model = build_model<T>(config);
    Rng rng(seed);
    for (ParamRef<T>& ref : parameter_refs(model)) {
        const bool is_gamma = ref.name.size() > 6 &&
                              ref.name.compare(ref.name.size() - 6, 6, ".gamma") == 0;
        const bool is_weight = ref.name.size() > 7 &&
                               ref.name.compare(ref.name.size() - 7, 7, ".weight") == 0;
        if (is_weight) {
            T* data = ref.matrix != nullptr ? ref.matrix->data() : ref.vector->data();
            fill_truncated_normal(data, ref.size(), rng);
        } else if (is_gamma) {
            ref.vector->setOnes();
        }
        // biases and beta vectors stay zero
    }
    return model;
}

TaggerModel<float> init_model(const ModelConfig& config, std::uint64_t seed) {
    return init_model_as<float>(config, seed);
}

template <typename To, typename From>
TaggerModel<To> cast_model(const TaggerModel<From>& model) {
    TaggerModel<To> out = build_model<To>(model.config);
    auto& source = const_cast<TaggerModel<From>&>(model);
    auto src_refs = parameter_refs(source);
    auto dst_refs = parameter_refs(out);
    for (std::size_t i = 0; i < src_refs.size(); ++i) {
        if (src_refs[i].matrix != nullptr) {
            *dst_refs[i].matrix = src_refs[i].matrix->template cast<To>();
        } else {
            *dst_refs[i].vector = src_refs[i].vector->template cast<To>();
        }
    }
    return out;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

template <typename T>
AttentionResult<T> scaled_dot_attention(const Matrix<T>& q, const Matrix<T>& k,
                                        const Matrix<T>& v,
                                        const std::vector<int>& key_mask) {
    if (q.cols() != k.cols()) {
        throw InputError("query and key dimensions differ");
    }
    if (k.rows() != v.rows()) {
        throw InputError("key and value row counts differ");
    }
    if (static_cast<Eigen::Index>(key_mask.size()) != k.rows()) {
        throw InputError("key mask length does not match key rows");
    }
    const T scale = T(1) / std::sqrt(static_cast<T>(q.cols()));
    Matrix<T> scores = q * k.transpose() * scale;
    const T neg_inf = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        if (key_mask[static_cast<std::size_t>(j)] == 0) scores.col(j).setConstant(neg_inf);
    }
    masked_softmax_rows(scores);
    AttentionResult<T> result;
    result.output = scores * v;
    result.probs = std::move(scores);
    return result;
}

template <typename T>
ForwardTrace<T> forward(const TaggerModel<T>& model, const std::vector<int>& input_ids,
                        const std::vector<int>& attention_mask, RunMode mode, Rng* rng) {
    const ModelConfig& cfg = model.config;
    const auto s = static_cast<Eigen::Index>(input_ids.size());
    if (s == 0) throw InputError("empty input window");
    if (s > cfg.max_positions) {
        throw InputError("window length " + std::to_string(s) +
                         " exceeds max_positions " + std::to_string(cfg.max_positions));
    }
    if (attention_mask.size() != input_ids.size()) {
        throw InputError("attention mask length does not match input length");
    }
    for (int id : input_ids) {
        if (id < 0 || id >= cfg.vocab_size) {
            throw InputError("input id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(cfg.vocab_size));
        }
    }
    const bool use_dropout = mode == RunMode::train && cfg.dropout > 0.0;
    if (use_dropout && rng == nullptr) {
        throw RunError("training-mode forward with dropout requires an RNG");
    }

    ForwardTrace<T> trace;
    trace.input_ids = input_ids;
    trace.attention_mask = attention_mask;

    const int e = cfg.embedding_dim;
    const int h = cfg.hidden_dim;
    trace.emb_sum.resize(s, e);
    for (Eigen::Index p = 0; p < s; ++p) {
        trace.emb_sum.row(p) = model.word_emb.row(input_ids[static_cast<std::size_t>(p)]) +
                               model.pos_emb.row(p) + model.type_emb.row(0);
    }
    layer_norm_forward(trace.emb_sum, model.emb_ln_gamma, model.emb_ln_beta,
                       trace.emb_normalized, trace.emb_inv_std, trace.emb_out);

    Matrix<T> hidden;
    if (cfg.factorized_embedding) {
        hidden = trace.emb_out * model.mapping_w;
        hidden.rowwise() += model.mapping_b.transpose();
    } else {
        hidden = trace.emb_out;
    }
    if (use_dropout) {
        trace.emb_drop_mask = make_drop_mask<T>(s, h, cfg.dropout, *rng);
        hidden = hidden.cwiseProduct(trace.emb_drop_mask);
    }
    trace.hidden0 = hidden;

    const int n_heads = cfg.num_heads;
    const int d_k = cfg.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(d_k));
    const T neg_inf = -std::numeric_limits<T>::infinity();

    trace.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (int layer_idx = 0; layer_idx < cfg.num_layers; ++layer_idx) {
        const LayerParams<T>& lp = model.layer(layer_idx);
        LayerTrace<T>& lt = trace.layers[static_cast<std::size_t>(layer_idx)];
        lt.input = hidden;

        lt.q = hidden * lp.q_w;
        lt.q.rowwise() += lp.q_b.transpose();
        lt.k = hidden * lp.k_w;
        lt.k.rowwise() += lp.k_b.transpose();
        lt.v = hidden * lp.v_w;
        lt.v.rowwise() += lp.v_b.transpose();

        lt.context.resize(s, h);
        lt.probs.resize(static_cast<std::size_t>(n_heads));
        if (use_dropout) lt.probs_drop_mask.resize(static_cast<std::size_t>(n_heads));
        for (int a = 0; a < n_heads; ++a) {
            const Eigen::Index off = static_cast<Eigen::Index>(a) * d_k;
            Matrix<T> scores =
                lt.q.middleCols(off, d_k) * lt.k.middleCols(off, d_k).transpose() * scale;
            for (Eigen::Index j = 0; j < s; ++j) {
                if (attention_mask[static_cast<std::size_t>(j)] == 0) {
                    scores.col(j).setConstant(neg_inf);
                }
            }
            masked_softmax_rows(scores);
            Matrix<T>& probs = lt.probs[static_cast<std::size_t>(a)];
            probs = std::move(scores);
            if (use_dropout) {
                Matrix<T>& mask = lt.probs_drop_mask[static_cast<std::size_t>(a)];
                mask = make_drop_mask<T>(s, s, cfg.dropout, *rng);
                lt.context.middleCols(off, d_k) =
                    probs.cwiseProduct(mask) * lt.v.middleCols(off, d_k);
            } else {
                lt.context.middleCols(off, d_k) = probs * lt.v.middleCols(off, d_k);
            }
        }

        Matrix<T> attn_proj = lt.context * lp.o_w;
        attn_proj.rowwise() += lp.o_b.transpose();
        if (use_dropout) {
            lt.attn_drop_mask = make_drop_mask<T>(s, h, cfg.dropout, *rng);
            attn_proj = attn_proj.cwiseProduct(lt.attn_drop_mask);
        }
        Matrix<T> residual = lt.input + attn_proj;
        layer_norm_forward(residual, lp.attn_ln_gamma, lp.attn_ln_beta, lt.attn_normalized,
                           lt.attn_inv_std, lt.attn_output);

        lt.ffn_pre = lt.attn_output * lp.ffn_in_w;
        lt.ffn_pre.rowwise() += lp.ffn_in_b.transpose();
        lt.ffn_act = lt.ffn_pre.unaryExpr(
            [](T x) { return static_cast<T>(gelu(static_cast<double>(x))); });
        Matrix<T> ffn_proj = lt.ffn_act * lp.ffn_out_w;
        ffn_proj.rowwise() += lp.ffn_out_b.transpose();
        if (use_dropout) {
            lt.ffn_drop_mask = make_drop_mask<T>(s, h, cfg.dropout, *rng);
            ffn_proj = ffn_proj.cwiseProduct(lt.ffn_drop_mask);
        }
        Matrix<T> residual2 = lt.attn_output + ffn_proj;
        layer_norm_forward(residual2, lp.ffn_ln_gamma, lp.ffn_ln_beta, lt.ffn_normalized,
                           lt.ffn_inv_std, lt.output);
        hidden = lt.output;
    }

    trace.logits = hidden * model.cls_w;
    trace.logits.rowwise() += model.cls_b.transpose();
    return trace;
}

namespace {

// Accumulates parameter gradients for one traced window given the gradient
// at the logits. Shared-parameter models collect every layer's contribution
// into the single stored set because grads.layer(k) aliases it.
template <typename T>
void backward(const TaggerModel<T>& model, const ForwardTrace<T>& trace,
              const Matrix<T>& dlogits, TaggerModel<T>& grads) {
    const ModelConfig& cfg = model.config;
    const Eigen::Index s = trace.logits.rows();
    const int n_heads = cfg.num_heads;
    const int d_k = cfg.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(d_k));

    const Matrix<T>& h_final =
        cfg.num_layers > 0 ? trace.layers.back().output : trace.hidden0;
    grads.cls_w += h_final.transpose() * dlogits;
    grads.cls_b += dlogits.colwise().sum().transpose();
    Matrix<T> dh = dlogits * model.cls_w.transpose();

    for (int layer_idx = cfg.num_layers - 1; layer_idx >= 0; --layer_idx) {
        const LayerParams<T>& lp = model.layer(layer_idx);
        LayerParams<T>& lg = grads.layer(layer_idx);
        const LayerTrace<T>& lt = trace.layers[static_cast<std::size_t>(layer_idx)];
        const bool used_dropout = lt.attn_drop_mask.size() > 0;

        // FFN block, backwards through its LayerNorm first.
        Matrix<T> dresid2 = layer_norm_backward(dh, lt.ffn_normalized, lt.ffn_inv_std,
                                                lp.ffn_ln_gamma, lg.ffn_ln_gamma,
                                                lg.ffn_ln_beta);
        Matrix<T> dh_mid = dresid2;  // residual branch
        Matrix<T> dffn_proj =
            used_dropout ? dresid2.cwiseProduct(lt.ffn_drop_mask).eval() : dresid2;
        lg.ffn_out_w += lt.ffn_act.transpose() * dffn_proj;
        lg.ffn_out_b += dffn_proj.colwise().sum().transpose();
        Matrix<T> dact = dffn_proj * lp.ffn_out_w.transpose();
        Matrix<T> dpre = dact.cwiseProduct(lt.ffn_pre.unaryExpr(
            [](T x) { return static_cast<T>(gelu_derivative(static_cast<double>(x))); }));
        lg.ffn_in_w += lt.attn_output.transpose() * dpre;
        lg.ffn_in_b += dpre.colwise().sum().transpose();
        dh_mid += dpre * lp.ffn_in_w.transpose();

        // Attention block.
        Matrix<T> dresid1 = layer_norm_backward(dh_mid, lt.attn_normalized, lt.attn_inv_std,
                                                lp.attn_ln_gamma, lg.attn_ln_gamma,
                                                lg.attn_ln_beta);
        Matrix<T> dinput = dresid1;  // residual branch
        Matrix<T> dattn_proj =
            used_dropout ? dresid1.cwiseProduct(lt.attn_drop_mask).eval() : dresid1;
        lg.o_w += lt.context.transpose() * dattn_proj;
        lg.o_b += dattn_proj.colwise().sum().transpose();
        Matrix<T> dctx = dattn_proj * lp.o_w.transpose();

        Matrix<T> dq = Matrix<T>::Zero(s, cfg.hidden_dim);
        Matrix<T> dk = Matrix<T>::Zero(s, cfg.hidden_dim);
        Matrix<T> dv = Matrix<T>::Zero(s, cfg.hidden_dim);
        for (int a = 0; a < n_heads; ++a) {
            const Eigen::Index off = static_cast<Eigen::Index>(a) * d_k;
            const Matrix<T>& probs = lt.probs[static_cast<std::size_t>(a)];
            const auto dctx_a = dctx.middleCols(off, d_k);
            const auto v_a = lt.v.middleCols(off, d_k);
            Matrix<T> dprobs;
            if (used_dropout) {
                const Matrix<T>& mask = lt.probs_drop_mask[static_cast<std::size_t>(a)];
                dv.middleCols(off, d_k) += probs.cwiseProduct(mask).transpose() * dctx_a;
                dprobs = (dctx_a * v_a.transpose()).cwiseProduct(mask);
            } else {
                dv.middleCols(off, d_k) += probs.transpose() * dctx_a;
                dprobs = dctx_a * v_a.transpose();
            }
            // Softmax backward, row by row. Masked columns carry zero
            // probability, so their score gradient vanishes on its own.
            Matrix<T> dscores(s, s);
            for (Eigen::Index r = 0; r < s; ++r) {
                const T dot = dprobs.row(r).dot(probs.row(r));
                dscores.row(r) =
                    probs.row(r).cwiseProduct((dprobs.row(r).array() - dot).matrix());
            }
            dq.middleCols(off, d_k) += dscores * lt.k.middleCols(off, d_k) * scale;
            dk.middleCols(off, d_k) += dscores.transpose() * lt.q.middleCols(off, d_k) * scale;
        }

        lg.q_w += lt.input.transpose() * dq;
        lg.q_b += dq.colwise().sum().transpose();
        lg.k_w += lt.input.transpose() * dk;
        lg.k_b += dk.colwise().sum().transpose();
        lg.v_w += lt.input.transpose() * dv;
        lg.v_b += dv.colwise().sum().transpose();
        dinput += dq * lp.q_w.transpose();
        dinput += dk * lp.k_w.transpose();
        dinput += dv * lp.v_w.transpose();
        dh = std::move(dinput);
    }

    // Embedding block.
    Matrix<T> dhidden_pre =
        trace.emb_drop_mask.size() > 0 ? dh.cwiseProduct(trace.emb_drop_mask).eval() : dh;
    Matrix<T> demb_out;
    if (cfg.factorized_embedding) {
        grads.mapping_w += trace.emb_out.transpose() * dhidden_pre;
        grads.mapping_b += dhidden_pre.colwise().sum().transpose();
        demb_out = dhidden_pre * model.mapping_w.transpose();
    } else {
        demb_out = std::move(dhidden_pre);
    }
    Matrix<T> demb_sum =
        layer_norm_backward(demb_out, trace.emb_normalized, trace.emb_inv_std,
                            model.emb_ln_gamma, grads.emb_ln_gamma, grads.emb_ln_beta);
    for (Eigen::Index p = 0; p < s; ++p) {
        grads.word_emb.row(trace.input_ids[static_cast<std::size_t>(p)]) += demb_sum.row(p);
        grads.pos_emb.row(p) += demb_sum.row(p);
        grads.type_emb.row(0) += demb_sum.row(p);
    }
}

// Cross-entropy terms of one window: loss contributions and, when dlogits is
// non-null, the unscaled gradient softmax(logits) - onehot(label) at kept
// positions.
template <typename T>
std::pair<double, std::size_t> window_loss_terms(const Matrix<T>& logits,
                                                 const std::vector<int>& label_ids,
                                                 int num_labels, Matrix<T>* dlogits) {
    if (static_cast<Eigen::Index>(label_ids.size()) != logits.rows()) {
        throw InputError("label list length does not match window length");
    }
    double loss = 0.0;
    std::size_t kept = 0;
    if (dlogits != nullptr) *dlogits = Matrix<T>::Zero(logits.rows(), logits.cols());
    for (Eigen::Index p = 0; p < logits.rows(); ++p) {
        const int label = label_ids[static_cast<std::size_t>(p)];
        if (label == kIgnoreLabel) continue;
        if (label < 0 || label >= num_labels) {
            throw InputError("label id " + std::to_string(label) + " out of range");
        }
        // Softmax in double for stable logs regardless of the scalar type.
        Eigen::ArrayXd row = logits.row(p).template cast<double>().transpose().array();
        row -= row.maxCoeff();
        Eigen::ArrayXd probs = row.exp();
        probs /= probs.sum();
        loss += -std::log(probs(label));
        ++kept;
        if (dlogits != nullptr) {
            Eigen::ArrayXd grad = probs;
            grad(label) -= 1.0;
            dlogits->row(p) = grad.matrix().transpose().template cast<T>();
        }
    }
    return {loss, kept};
}

}  // namespace

template <typename T>
LossResult<T> loss_and_grad(const TaggerModel<T>& model,
                            const std::vector<SubwordEncoding>& batch, RunMode mode,
                            Rng* rng) {
    if (batch.empty()) throw InputError("empty batch");
    LossResult<T> result;
    result.grads = zeros_like(model);

    std::vector<ForwardTrace<T>> traces;
    std::vector<Matrix<T>> dlogits;
    traces.reserve(batch.size());
    dlogits.reserve(batch.size());
    double total_loss = 0.0;
    std::size_t total_kept = 0;
    for (const SubwordEncoding& enc : batch) {
        traces.push_back(forward(model, enc.input_ids, enc.attention_mask, mode, rng));
        Matrix<T> dl;
        const auto [loss, kept] = window_loss_terms(traces.back().logits, enc.label_ids,
                                                    model.config.num_labels, &dl);
        total_loss += loss;
        total_kept += kept;
        dlogits.push_back(std::move(dl));
    }
    if (total_kept == 0) {
        throw RunError("batch contains no labeled positions");
    }
    const T inv = T(1) / static_cast<T>(total_kept);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        dlogits[i] *= inv;
        backward(model, traces[i], dlogits[i], result.grads);
    }
    result.loss = total_loss / static_cast<double>(total_kept);
    result.labeled_positions = total_kept;
    return result;
}

template <typename T>
double batch_loss(const TaggerModel<T>& model, const std::vector<SubwordEncoding>& batch) {
    if (batch.empty()) throw InputError("empty batch");
    double total_loss = 0.0;
    std::size_t total_kept = 0;
    for (const SubwordEncoding& enc : batch) {
        const ForwardTrace<T> trace =
            forward(model, enc.input_ids, enc.attention_mask, RunMode::eval, nullptr);
        const auto [loss, kept] = window_loss_terms<T>(trace.logits, enc.label_ids,
                                                       model.config.num_labels, nullptr);
        total_loss += loss;
        total_kept += kept;
    }
    if (total_kept == 0) {
        throw RunError("batch contains no labeled positions");
    }
    return total_loss / static_cast<double>(total_kept);
}

// Explicit instantiations: training runs in float, oracles in double.
template std::vector<ParamRef<float>> parameter_refs(TaggerModel<float>&);
template std::vector<ParamRef<double>> parameter_refs(TaggerModel<double>&);
template TaggerModel<float> build_model<float>(const ModelConfig&);
template TaggerModel<double> build_model<double>(const ModelConfig&);
template TaggerModel<float> zeros_like(const TaggerModel<float>&);
template TaggerModel<double> zeros_like(const TaggerModel<double>&);
template std::int64_t TaggerModel<float>::parameter_count() const;
template std::int64_t TaggerModel<double>::parameter_count() const;
template TaggerModel<float> init_model_as<float>(const ModelConfig&, std::uint64_t);
template TaggerModel<double> init_model_as<double>(const ModelConfig&, std::uint64_t);
template TaggerModel<double> cast_model<double, float>(const TaggerModel<float>&);
template TaggerModel<float> cast_model<float, double>(const TaggerModel<double>&);
template AttentionResult<float> scaled_dot_attention(const Matrix<float>&,
                                                     const Matrix<float>&,
                                                     const Matrix<float>&,
                                                     const std::vector<int>&);
template AttentionResult<double> scaled_dot_attention(const Matrix<double>&,
                                                      const Matrix<double>&,
                                                      const Matrix<double>&,
                                                      const std::vector<int>&);
template ForwardTrace<float> forward(const TaggerModel<float>&, const std::vector<int>&,
                                     const std::vector<int>&, RunMode, Rng*);
template ForwardTrace<double> forward(const TaggerModel<double>&, const std::vector<int>&,
                                      const std::vector<int>&, RunMode, Rng*);
template LossResult<float> loss_and_grad(const TaggerModel<float>&,
                                         const std::vector<SubwordEncoding>&, RunMode, Rng*);
template LossResult<double> loss_and_grad(const TaggerModel<double>&,
                                          const std::vector<SubwordEncoding>&, RunMode,
                                          Rng*);
template double batch_loss(const TaggerModel<float>&, const std::vector<SubwordEncoding>&);
template double batch_loss(const TaggerModel<double>&, const std::vector<SubwordEncoding>&);

}  // namespace deidkit
