#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "deidkit/encoding.hpp"
#include "deidkit/rng.hpp"
#include "deidkit/tags.hpp"

// Encoder-only transformer token classifier, written directly against Eigen
// with a hand-derived backward pass for this fixed architecture. The scalar
// type is a template parameter: training runs in float, numeric oracles and
// finite-difference checks run in double.
//
// Architecture, per layer (post-layer-norm residual blocks):
//   h <- LayerNorm(h + MultiHead(h))
//   h <- LayerNorm(h + FFN(h)),  FFN(x) = GELU(x W1 + b1) W2 + b2
// with learned position embeddings, optional factorized embeddings (E != H
// with a trained E->H mapping), and optional cross-layer parameter sharing
// (all layers alias one parameter set). Logits are h W_cls + b_cls per token.

namespace deidkit {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ModelConfig {
    int vocab_size = 0;        // V
    int max_positions = 512;   // P
    int type_vocab = 2;        // number of segment types
    int embedding_dim = 0;     // E
    int hidden_dim = 0;        // H
    int num_layers = 0;        // L
    int num_heads = 0;         // A
    int ffn_dim = 0;           // F
    double dropout = 0.1;
    bool share_layers = false;
    bool factorized_embedding = false;
    int num_labels = kNumTags;  // C

    int head_dim() const { return hidden_dim / num_heads; }

    // Throws ConfigError unless: all dims >= 1, H divisible by A, dropout in
    // [0,1), and E == H when the embedding is not factorized.
    void validate() const;

    // The six published configurations this family covers.
    static ModelConfig bert_base();
    static ModelConfig bert_large();
    static ModelConfig roberta_base();
    static ModelConfig roberta_large();
    static ModelConfig albert_base();
    static ModelConfig albert_xxlarge();
};

struct LedgerEntry {
    std::string path;
    std::int64_t count = 0;
};

struct ParameterLedger {
    std::vector<LedgerEntry> entries;
    std::int64_t total = 0;
};

// Exact integer parameter accounting, one entry per named tensor.
ParameterLedger count_parameters(const ModelConfig& config);

template <typename T>
struct LayerParams {
    Matrix<T> q_w, k_w, v_w, o_w;  // H x H, applied as x * W
    Vector<T> q_b, k_b, v_b, o_b;  // H
    Vector<T> attn_ln_gamma, attn_ln_beta;  // H
    Matrix<T> ffn_in_w;            // H x F
    Vector<T> ffn_in_b;            // F
    Matrix<T> ffn_out_w;           // F x H
    Vector<T> ffn_out_b;           // H
    Vector<T> ffn_ln_gamma, ffn_ln_beta;    // H
};

template <typename T>
struct TaggerModel {
    ModelConfig config;
    Matrix<T> word_emb;   // V x E
    Matrix<T> pos_emb;    // P x E
    Matrix<T> type_emb;   // type_vocab x E
    Vector<T> emb_ln_gamma, emb_ln_beta;  // E
    Matrix<T> mapping_w;  // E x H when factorized, else empty
    Vector<T> mapping_b;  // H when factorized, else empty
    std::vector<LayerParams<T>> layers;  // one entry when share_layers
    Matrix<T> cls_w;      // H x C
    Vector<T> cls_b;      // C

    const LayerParams<T>& layer(int k) const {
        return layers[config.share_layers ? 0 : static_cast<std::size_t>(k)];
    }
    LayerParams<T>& layer(int k) {
        return layers[config.share_layers ? 0 : static_cast<std::size_t>(k)];
    }

    std::int64_t parameter_count() const;
};

// A view over one named parameter tensor, used by init, the optimizer, the
// checkpoint writer, and gradient bookkeeping. Exactly one of matrix/vector
// is non-null. decay is false for biases and LayerNorm parameters.
template <typename T>
struct ParamRef {
    std::string name;
    Matrix<T>* matrix = nullptr;
    Vector<T>* vector = nullptr;
    bool decay = true;

    Eigen::Index size() const {
        return matrix != nullptr ? matrix->size() : vector->size();
    }
};

// Stable, documented ordering: embeddings, mapping, layers in index order,
// classifier. Ledger entries follow the same order.
template <typename T>
std::vector<ParamRef<T>> parameter_refs(TaggerModel<T>& model);

// Allocates all tensors per the config, zero-filled.
template <typename T>
TaggerModel<T> build_model(const ModelConfig& config);

// Same shapes as an existing model, zero-filled (gradient accumulator).
template <typename T>
TaggerModel<T> zeros_like(const TaggerModel<T>& model);

// Deterministic initialization: weights from a truncated normal
// (sigma = 0.02, cut at two sigma), biases zero, LayerNorm gamma one, beta
// zero. The draw sequence is in double, then cast, so float and double
// models initialized from one seed agree to float precision.
template <typename T>
TaggerModel<T> init_model_as(const ModelConfig& config, std::uint64_t seed);
TaggerModel<float> init_model(const ModelConfig& config, std::uint64_t seed);

// Element-wise scalar conversion, e.g. float checkpoint to double oracle.
template <typename To, typename From>
TaggerModel<To> cast_model(const TaggerModel<From>& model);

// Exact GELU, x * Phi(x), and its derivative.
double gelu(double x);
double gelu_derivative(double x);

template <typename T>
struct AttentionResult {
    Matrix<T> output;  // rows x value-dim
    Matrix<T> probs;   // rows x keys, each row sums to 1 over unmasked keys
};

// The published attention equation on raw matrices: scores = Q K^T / sqrt(d_k)
// with masked key columns forced to probability zero. key_mask[j] == 0 marks
// a padded key. Throws InputError on inconsistent shapes.
template <typename T>
AttentionResult<T> scaled_dot_attention(const Matrix<T>& q, const Matrix<T>& k,
                                        const Matrix<T>& v,
                                        const std::vector<int>& key_mask);

enum class RunMode { train, eval };

// Everything the backward pass needs, recorded during forward.
template <typename T>
struct LayerTrace {
    Matrix<T> input;                        // S x H
    Matrix<T> q, k, v;                      // S x H, after bias
    std::vector<Matrix<T>> probs;           // per head, S x S
    std::vector<Matrix<T>> probs_drop_mask; // per head inverted-dropout scales, empty when unused
    Matrix<T> context;                      // S x H, heads concatenated
    Matrix<T> attn_drop_mask;              // S x H inverted-dropout scales, empty when unused
    Matrix<T> attn_normalized;             // x-hat of the attention LayerNorm
    Vector<T> attn_inv_std;                // per-row 1/sqrt(var+eps)
    Matrix<T> attn_output;                 // S x H, after LayerNorm
    Matrix<T> ffn_pre;                     // S x F, before GELU
    Matrix<T> ffn_act;                     // S x F, after GELU
    Matrix<T> ffn_drop_mask;               // S x H, empty when unused
    Matrix<T> ffn_normalized;              // x-hat of the FFN LayerNorm
    Vector<T> ffn_inv_std;                 // per-row 1/sqrt(var+eps)
    Matrix<T> output;                      // S x H
};

template <typename T>
struct ForwardTrace {
    std::vector<int> input_ids;
    std::vector<int> attention_mask;
    Matrix<T> emb_sum;         // S x E, before the embedding LayerNorm
    Matrix<T> emb_normalized;  // x-hat of the embedding LayerNorm
    Vector<T> emb_inv_std;
    Matrix<T> emb_out;         // S x E, after LayerNorm
    Matrix<T> emb_drop_mask;   // S x H, empty when unused
    Matrix<T> hidden0;         // S x H, input to layer 0 (after mapping/dropout)
    std::vector<LayerTrace<T>> layers;  // L entries (even when parameters are shared)
    Matrix<T> logits;          // S x C
};

// Runs the full stack on one window. In train mode with dropout > 0 an RNG
// must be supplied; eval mode never touches it. Throws InputError on an id
// outside the vocabulary or a window longer than max_positions.
template <typename T>
ForwardTrace<T> forward(const TaggerModel<T>& model, const std::vector<int>& input_ids,
                        const std::vector<int>& attention_mask,
                        RunMode mode = RunMode::eval, Rng* rng = nullptr);

template <typename T>
struct LossResult {
    double loss = 0.0;
    std::size_t labeled_positions = 0;
    TaggerModel<T> grads;  // same shapes as the model
};

// Mean cross-entropy over the non-ignored label positions of the batch, plus
// the gradient of that loss for every parameter tensor. Shared-layer models
// accumulate all layers' contributions into the single stored set. Throws
// RunError when the batch has no labeled positions.
template <typename T>
LossResult<T> loss_and_grad(const TaggerModel<T>& model,
                            const std::vector<SubwordEncoding>& batch,
                            RunMode mode = RunMode::train, Rng* rng = nullptr);

// Forward-only loss with the same averaging, for finite differences.
template <typename T>
double batch_loss(const TaggerModel<T>& model, const std::vector<SubwordEncoding>& batch);

}  // namespace deidkit
