#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "packetlm/codec.hpp"
#include "packetlm/embedding.hpp"
#include "packetlm/rng.hpp"
#include "packetlm/tensor.hpp"

namespace packetlm {

struct ModelConfig {
    int n_layers = 0;
    int n_heads = 0;
    int emb_size = 0; // d
    int seq_len = 0;  // L
    double mlp_ratio = 8.0 / 3.0;
    int vocab_size = 0;      // V
    int max_numeric_len = 0; // M

    // round(mlp_ratio * d), rounded up to a multiple of 8
    int hidden_size() const;

    void validate() const; // throws Errc::config_error

    // Fill seq_len / vocab_size / max_numeric_len from a schema.
    void bind(const PacketSchema& schema);

    bool operator==(const ModelConfig&) const = default;
};

// Named presets: base(6,8,128,256), small(8,16,256,256), middle(10,32,512,256).
// Sequence geometry still comes from the schema via bind().
ModelConfig named_model_config(const std::string& name);
// Learning rate the preset was tuned with (middle runs cooler).
double named_model_default_lr(const std::string& name);

template <typename T>
struct LayerParamsT {
    Mat<T> wq, wk, wv, wo;      // d x d
    Mat<T> w_gate, w_up;        // d x hidden
    Mat<T> w_down;              // hidden x d
    std::vector<T> attn_norm_gain, mlp_norm_gain; // d

    bool operator==(const LayerParamsT&) const = default;
};

// Reference to one parameter tensor; params, gradients and optimizer moments
// all share the same manifest order.
template <typename T>
struct TensorRef {
    std::string name;
    T* data;
    size_t count;
    std::vector<int> shape;
};

template <typename T>
struct ModelParamsT {
    EmbeddingTablesT<T> emb;
    std::vector<LayerParamsT<T>> layers;
    std::vector<T> final_norm_gain; // d
    Mat<T> out_proj;                // d x V

    static ModelParamsT zeros(const ModelConfig& cfg);
    // Weights ~ normal(0, 0.02), normalization gains at 1.
    static ModelParamsT init(const ModelConfig& cfg, Rng& rng);

    std::vector<TensorRef<T>> tensor_refs();
    std::vector<TensorRef<const T>> tensor_refs() const;

    size_t parameter_count() const;

    bool operator==(const ModelParamsT&) const = default;
};

using ModelParams = ModelParamsT<float>;

template <typename T>
struct ForwardTraceT {
    Mat<T> logits; // L x V
    // post-softmax attention, indexed [layer * n_heads + head], each L x L,
    // zero above the diagonal; empty unless capture was requested
    std::vector<Mat<T>> attention;
    int n_layers = 0;
    int n_heads = 0;

    const Mat<T>& attn(int layer, int head) const {
        return attention[static_cast<size_t>(layer) * n_heads + head];
    }
};

using ForwardTrace = ForwardTraceT<float>;

// Full-sequence forward pass. Row t of the logits depends only on tokens at
// positions <= t.
template <typename T>
ForwardTraceT<T> forward(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                         const ModelConfig& cfg, bool capture_attention = false);

// Mean next-token negative log-likelihood over positions whose target is not
// padding. The label token is a word like any other.
template <typename T>
T sequence_nll(const ForwardTraceT<T>& trace, const TokenizedPacket& tp);

// Reverse-mode gradients of sequence_nll with respect to every parameter.
template <typename T>
ModelParamsT<T> gradients(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                          const ModelConfig& cfg);

// Restricted argmax over the label token ids at the label position; ties go
// to the lowest class id. Reads nothing at or after label_pos, so the label
// slot may hold anything.
template <typename T>
std::pair<int, std::vector<T>> predict_label(const TokenizedPacket& tp,
                                             const ModelParamsT<T>& params,
                                             const ModelConfig& cfg,
                                             const Vocabulary& vocab);

namespace detail {

// Reusable forward/backward workspace. Heavy paths (trainer, eval) keep one
// alive to avoid reallocating activations per sequence; scratch is sized for
// cfg.seq_len and runs may use any prefix length.
template <typename T>
class Engine {
public:
    Engine(const ModelConfig& cfg);

    // Forward over the first n_tokens positions; activations stay in the
    // workspace for a following backward(). capture stores post-softmax
    // attention as full seq_len x seq_len matrices.
    void forward(const TokenizedPacket& tp, const ModelParamsT<T>& params, int n_tokens,
                 bool capture);

    // NLL of the run recorded by the last forward (targets from tp).
    T nll(const TokenizedPacket& tp) const;

    // Accumulate scale * d(nll)/d(params) into grads. Requires a preceding
    // forward with keep_activations.
    void backward(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                  ModelParamsT<T>& grads, T scale);

    const Mat<T>& logits() const { return logits_; }
    const std::vector<Mat<T>>& attention() const { return attn_; }
    int tokens() const { return n_tokens_; }

private:
    ModelConfig cfg_;
    int n_tokens_ = 0;

    // per-layer saved activations
    struct LayerActs {
        Mat<T> x_in;    // residual stream entering the block
        Mat<T> x_norm;  // rmsnorm(x_in) * gain
        std::vector<T> attn_rms, mlp_rms;
        Mat<T> q, k, v; // n x d
        std::vector<Mat<T>> attn; // per head, n x n
        Mat<T> ctx;     // n x d (heads concatenated)
        Mat<T> x_mid;   // stream entering the mlp half
        Mat<T> mid_norm;
        Mat<T> gate, up, act; // n x hidden
    };
    std::vector<LayerActs> acts_;
    Mat<T> embedded_;
    Mat<T> x_final_, final_norm_out_;
    std::vector<T> final_rms_;
    Mat<T> logits_;
    std::vector<Mat<T>> attn_;

    // backward scratch
    Mat<T> dx_, dnorm_, dq_, dk_, dv_, dctx_, dgate_, dup_, dact_, dlogits_;
};

} // namespace detail

// Wraps an Engine so bulk evaluation does not reallocate activations per
// packet. Runs only up to the label position.
template <typename T>
class Predictor {
public:
    Predictor(const ModelParamsT<T>& params, const ModelConfig& cfg,
              const Vocabulary& vocab)
        : params_(params), vocab_(vocab), engine_(cfg) {}

    std::pair<int, std::vector<T>> predict(const TokenizedPacket& tp);

private:
    const ModelParamsT<T>& params_;
    Vocabulary vocab_;
    detail::Engine<T> engine_;
};

} // namespace packetlm
