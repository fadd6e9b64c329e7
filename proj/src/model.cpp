#include "packetlm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "packetlm/error.hpp"

namespace packetlm {

namespace {
constexpr double kRmsEps = 1e-5;
} // namespace

int ModelConfig::hidden_size() const {
    int h = static_cast<int>(std::llround(mlp_ratio * emb_size));
    if (h < 1) h = 1;
    return ((h + 7) / 8) * 8;
}

void ModelConfig::validate() const {
    if (n_layers < 1) fail(Errc::config_error, "n_layers must be positive");
    if (n_heads < 1) fail(Errc::config_error, "n_heads must be positive");
    if (emb_size < 1) fail(Errc::config_error, "emb_size must be positive");
    if (emb_size % n_heads != 0)
        fail(Errc::config_error, "emb_size must be divisible by n_heads");
    if (!(mlp_ratio > 0.0)) fail(Errc::config_error, "mlp_ratio must be positive");
    if (seq_len < 1) fail(Errc::config_error, "seq_len must be positive");
    if (vocab_size < 1) fail(Errc::config_error, "vocab_size must be positive");
    if (max_numeric_len < 1)
        fail(Errc::config_error, "max_numeric_len must be positive");
}

void ModelConfig::bind(const PacketSchema& schema) {
    Vocabulary vocab = build_vocabulary(schema);
    seq_len = schema.seq_len;
    vocab_size = vocab.size;
    max_numeric_len = schema.max_numeric_len;
}

ModelConfig named_model_config(const std::string& name) {
    ModelConfig cfg;
    cfg.seq_len = 256;
    if (name == "base") {
        cfg.n_layers = 6;
        cfg.n_heads = 8;
        cfg.emb_size = 128;
    } else if (name == "small") {
        cfg.n_layers = 8;
        cfg.n_heads = 16;
        cfg.emb_size = 256;
    } else if (name == "middle") {
        cfg.n_layers = 10;
        cfg.n_heads = 32;
        cfg.emb_size = 512;
    } else {
        fail(Errc::config_error, "unknown model preset '" + name + "'");
    }
    return cfg;
}

double named_model_default_lr(const std::string& name) {
    return name == "middle" ? 3e-5 : 1e-4;
}

template <typename T>
ModelParamsT<T> ModelParamsT<T>::zeros(const ModelConfig& cfg) {
    cfg.validate();
    const int d = cfg.emb_size;
    const int h = cfg.hidden_size();
    ModelParamsT<T> p;
    p.emb.word = Mat<T>(cfg.vocab_size, d);
    p.emb.numeric_pos = Mat<T>(cfg.max_numeric_len, d);
    p.emb.field_pos = Mat<T>(cfg.seq_len, d);
    p.layers.resize(cfg.n_layers);
    for (auto& l : p.layers) {
        l.wq = Mat<T>(d, d);
        l.wk = Mat<T>(d, d);
        l.wv = Mat<T>(d, d);
        l.wo = Mat<T>(d, d);
        l.w_gate = Mat<T>(d, h);
        l.w_up = Mat<T>(d, h);
        l.w_down = Mat<T>(h, d);
        l.attn_norm_gain.assign(d, T(0));
        l.mlp_norm_gain.assign(d, T(0));
    }
    p.final_norm_gain.assign(d, T(0));
    p.out_proj = Mat<T>(d, cfg.vocab_size);
    return p;
}

template <typename T>
ModelParamsT<T> ModelParamsT<T>::init(const ModelConfig& cfg, Rng& rng) {
    ModelParamsT<T> p = zeros(cfg);
    constexpr double std_dev = 0.02;
    auto fill_gauss = [&](Mat<T>& m) {
        for (auto& v : m.a) v = static_cast<T>(gaussian(rng) * std_dev);
    };
    // draw order matches the tensor manifest order
    fill_gauss(p.emb.word);
    fill_gauss(p.emb.numeric_pos);
    fill_gauss(p.emb.field_pos);
    for (auto& l : p.layers) {
        std::fill(l.attn_norm_gain.begin(), l.attn_norm_gain.end(), T(1));
        fill_gauss(l.wq);
        fill_gauss(l.wk);
        fill_gauss(l.wv);
        fill_gauss(l.wo);
        std::fill(l.mlp_norm_gain.begin(), l.mlp_norm_gain.end(), T(1));
        fill_gauss(l.w_gate);
        fill_gauss(l.w_up);
        fill_gauss(l.w_down);
    }
    std::fill(p.final_norm_gain.begin(), p.final_norm_gain.end(), T(1));
    fill_gauss(p.out_proj);
    return p;
}

template <typename T, typename Self, typename Ref>
static std::vector<Ref> collect_refs(Self& p) {
    std::vector<Ref> refs;
    auto add_mat = [&](const std::string& name, auto& m) {
        refs.push_back({name, m.a.data(), m.a.size(), {m.rows, m.cols}});
    };
    auto add_vec = [&](const std::string& name, auto& v) {
        refs.push_back({name, v.data(), v.size(), {static_cast<int>(v.size())}});
    };
    add_mat("emb.word", p.emb.word);
    add_mat("emb.numeric_pos", p.emb.numeric_pos);
    add_mat("emb.field_pos", p.emb.field_pos);
    for (size_t i = 0; i < p.layers.size(); ++i) {
        auto& l = p.layers[i];
        const std::string base = "layers." + std::to_string(i) + ".";
        add_vec(base + "attn_norm_gain", l.attn_norm_gain);
        add_mat(base + "wq", l.wq);
        add_mat(base + "wk", l.wk);
        add_mat(base + "wv", l.wv);
        add_mat(base + "wo", l.wo);
        add_vec(base + "mlp_norm_gain", l.mlp_norm_gain);
        add_mat(base + "w_gate", l.w_gate);
        add_mat(base + "w_up", l.w_up);
        add_mat(base + "w_down", l.w_down);
    }
    add_vec("final_norm_gain", p.final_norm_gain);
    add_mat("out_proj", p.out_proj);
    return refs;
}

template <typename T>
std::vector<TensorRef<T>> ModelParamsT<T>::tensor_refs() {
    return collect_refs<T, ModelParamsT<T>, TensorRef<T>>(*this);
}

template <typename T>
std::vector<TensorRef<const T>> ModelParamsT<T>::tensor_refs() const {
    return collect_refs<T, const ModelParamsT<T>, TensorRef<const T>>(*this);
}

template <typename T>
size_t ModelParamsT<T>::parameter_count() const {
    size_t n = 0;
    for (const auto& r : tensor_refs()) n += r.count;
    return n;
}

namespace {

template <typename T>
void validate_packet(const TokenizedPacket& tp, const ModelConfig& cfg) {
    if (tp.length() != cfg.seq_len)
        fail(Errc::shape_mismatch, "packet length " + std::to_string(tp.length()) +
                                       " != seq_len " + std::to_string(cfg.seq_len));
    if (tp.numeric_pos.size() != tp.token_ids.size() ||
        tp.field_pos.size() != tp.token_ids.size() ||
        tp.loss_mask.size() != tp.token_ids.size())
        fail(Errc::shape_mismatch, "packet index sequences disagree on length");
    if (tp.label_pos < 0 || tp.label_pos >= tp.length())
        fail(Errc::shape_mismatch, "label_pos outside the sequence");
    for (int t = 0; t < tp.length(); ++t) {
        if (tp.token_ids[t] < 0 || tp.token_ids[t] >= cfg.vocab_size)
            fail(Errc::shape_mismatch, "token id out of range at " + std::to_string(t));
        if (tp.numeric_pos[t] != kNoNumericPos &&
            (tp.numeric_pos[t] < 0 || tp.numeric_pos[t] >= cfg.max_numeric_len))
            fail(Errc::shape_mismatch,
                 "numeric position out of range at " + std::to_string(t));
        if (tp.field_pos[t] < 0 || tp.field_pos[t] >= cfg.seq_len)
            fail(Errc::shape_mismatch,
                 "field position out of range at " + std::to_string(t));
    }
}

// y[t] = x[t] / rms(x[t]) * gain, rms saved per row.
template <typename T>
void rmsnorm_rows(const Mat<T>& x, const std::vector<T>& gain, int n, Mat<T>& y,
                  std::vector<T>& rms) {
    const int d = x.cols;
    for (int t = 0; t < n; ++t) {
        const T* xt = x.row(t);
        double ss = 0.0;
        for (int j = 0; j < d; ++j) ss += static_cast<double>(xt[j]) * xt[j];
        T r = static_cast<T>(std::sqrt(ss / d + kRmsEps));
        rms[t] = r;
        T inv = T(1) / r;
        T* yt = y.row(t);
        for (int j = 0; j < d; ++j) yt[j] = xt[j] * inv * gain[j];
    }
}

// Given dy for y = x / rms * gain: accumulates into dx and dgain.
template <typename T>
void rmsnorm_backward(const Mat<T>& x, const std::vector<T>& gain,
                      const std::vector<T>& rms, const Mat<T>& dy, int n, Mat<T>& dx,
                      T* dgain) {
    const int d = x.cols;
    for (int t = 0; t < n; ++t) {
        const T* xt = x.row(t);
        const T* dyt = dy.row(t);
        T* dxt = dx.row(t);
        const T r = rms[t];
        const T inv = T(1) / r;
        T s = T(0);
        for (int j = 0; j < d; ++j) s += dyt[j] * gain[j] * xt[j];
        const T coef = s * inv * inv * inv / static_cast<T>(d);
        for (int j = 0; j < d; ++j) {
            dgain[j] += dyt[j] * xt[j] * inv;
            dxt[j] += dyt[j] * gain[j] * inv - xt[j] * coef;
        }
    }
}

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

} // namespace

namespace detail {

template <typename T>
Engine<T>::Engine(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int L = cfg_.seq_len;
    const int d = cfg_.emb_size;
    const int h = cfg_.hidden_size();
    const int V = cfg_.vocab_size;

    embedded_ = Mat<T>(L, d);
    acts_.resize(cfg_.n_layers);
    for (auto& a : acts_) {
        a.x_in = Mat<T>(L, d);
        a.x_norm = Mat<T>(L, d);
        a.attn_rms.assign(L, T(0));
        a.mlp_rms.assign(L, T(0));
        a.q = Mat<T>(L, d);
        a.k = Mat<T>(L, d);
        a.v = Mat<T>(L, d);
        a.attn.assign(cfg_.n_heads, Mat<T>(L, L));
        a.ctx = Mat<T>(L, d);
        a.x_mid = Mat<T>(L, d);
        a.mid_norm = Mat<T>(L, d);
        a.gate = Mat<T>(L, h);
        a.up = Mat<T>(L, h);
        a.act = Mat<T>(L, h);
    }
    x_final_ = Mat<T>(L, d);
    final_norm_out_ = Mat<T>(L, d);
    final_rms_.assign(L, T(0));
    logits_ = Mat<T>(L, V);

    dx_ = Mat<T>(L, d);
    dnorm_ = Mat<T>(L, d);
    dq_ = Mat<T>(L, d);
    dk_ = Mat<T>(L, d);
    dv_ = Mat<T>(L, d);
    dctx_ = Mat<T>(L, d);
    dgate_ = Mat<T>(L, h);
    dup_ = Mat<T>(L, h);
    dact_ = Mat<T>(L, h);
    dlogits_ = Mat<T>(L, V);
}

template <typename T>
void Engine<T>::forward(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                        int n_tokens, bool capture) {
    validate_packet<T>(tp, cfg_);
    if (n_tokens < 1 || n_tokens > cfg_.seq_len)
        fail(Errc::shape_mismatch, "bad forward token count");
    n_tokens_ = n_tokens;
    const int n = n_tokens;
    const int d = cfg_.emb_size;
    const int h = cfg_.hidden_size();
    const int nh = cfg_.n_heads;
    const int dh = d / nh;
    const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    for (int t = 0; t < n; ++t)
        embed_token(params.emb, tp.token_ids[t], tp.numeric_pos[t], tp.field_pos[t],
                    embedded_.row(t));

    // x lives in acts_[l].x_in on the way up; scratch dx_ holds the running
    // stream so forward can run without keep_activations too.
    Mat<T>& x = dx_;
    for (int t = 0; t < n; ++t)
        std::copy(embedded_.row(t), embedded_.row(t) + d, x.row(t));

    if (capture) {
        attn_.assign(static_cast<size_t>(cfg_.n_layers) * nh, Mat<T>());
    } else {
        attn_.clear();
    }

    for (int l = 0; l < cfg_.n_layers; ++l) {
        auto& a = acts_[l];
        const auto& lp = params.layers[l];
        for (int t = 0; t < n; ++t)
            std::copy(x.row(t), x.row(t) + d, a.x_in.row(t));

        rmsnorm_rows(a.x_in, lp.attn_norm_gain, n, a.x_norm, a.attn_rms);

        for (int t = 0; t < n; ++t) {
            std::fill(a.q.row(t), a.q.row(t) + d, T(0));
            std::fill(a.k.row(t), a.k.row(t) + d, T(0));
            std::fill(a.v.row(t), a.v.row(t) + d, T(0));
        }
        matmul_acc(a.x_norm.row(0), lp.wq.row(0), a.q.row(0), n, d, d);
        matmul_acc(a.x_norm.row(0), lp.wk.row(0), a.k.row(0), n, d, d);
        matmul_acc(a.x_norm.row(0), lp.wv.row(0), a.v.row(0), n, d, d);

        for (int head = 0; head < nh; ++head) {
            const int off = head * dh;
            Mat<T>& aw = a.attn[head];
            for (int t = 0; t < n; ++t) {
                T* wrow = aw.row(t);
                const T* qt = a.q.row(t) + off;
                T maxs = -std::numeric_limits<T>::infinity();
                for (int s = 0; s <= t; ++s) {
                    const T* ks = a.k.row(s) + off;
                    T sc = T(0);
                    for (int j = 0; j < dh; ++j) sc += qt[j] * ks[j];
                    sc *= inv_sqrt_dh;
                    wrow[s] = sc;
                    if (sc > maxs) maxs = sc;
                }
                T denom = T(0);
                for (int s = 0; s <= t; ++s) {
                    wrow[s] = std::exp(wrow[s] - maxs);
                    denom += wrow[s];
                }
                const T inv_denom = T(1) / denom;
                T* ct = a.ctx.row(t) + off;
                std::fill(ct, ct + dh, T(0));
                for (int s = 0; s <= t; ++s) {
                    wrow[s] *= inv_denom;
                    const T* vs = a.v.row(s) + off;
                    const T w = wrow[s];
                    for (int j = 0; j < dh; ++j) ct[j] += w * vs[j];
                }
            }
            if (capture) {
                Mat<T> full(cfg_.seq_len, cfg_.seq_len);
                for (int t = 0; t < n; ++t)
                    std::copy(aw.row(t), aw.row(t) + t + 1, full.row(t));
                attn_[static_cast<size_t>(l) * nh + head] = std::move(full);
            }
        }

        // residual add of the attention output
        matmul_acc(a.ctx.row(0), lp.wo.row(0), x.row(0), n, d, d);
        for (int t = 0; t < n; ++t)
            std::copy(x.row(t), x.row(t) + d, a.x_mid.row(t));

        rmsnorm_rows(a.x_mid, lp.mlp_norm_gain, n, a.mid_norm, a.mlp_rms);

        for (int t = 0; t < n; ++t) {
            std::fill(a.gate.row(t), a.gate.row(t) + h, T(0));
            std::fill(a.up.row(t), a.up.row(t) + h, T(0));
        }
        matmul_acc(a.mid_norm.row(0), lp.w_gate.row(0), a.gate.row(0), n, d, h);
        matmul_acc(a.mid_norm.row(0), lp.w_up.row(0), a.up.row(0), n, d, h);
        for (int t = 0; t < n; ++t) {
            const T* g = a.gate.row(t);
            const T* u = a.up.row(t);
            T* o = a.act.row(t);
            for (int j = 0; j < h; ++j) o[j] = g[j] * sigmoid(g[j]) * u[j];
        }
        // residual add of the mlp output
        matmul_acc(a.act.row(0), lp.w_down.row(0), x.row(0), n, h, d);
    }

    for (int t = 0; t < n; ++t)
        std::copy(x.row(t), x.row(t) + d, x_final_.row(t));
    rmsnorm_rows(x_final_, params.final_norm_gain, n, final_norm_out_, final_rms_);
    for (int t = 0; t < n; ++t)
        std::fill(logits_.row(t), logits_.row(t) + cfg_.vocab_size, T(0));
    matmul_acc(final_norm_out_.row(0), params.out_proj.row(0), logits_.row(0), n, d,
               cfg_.vocab_size);
}

template <typename T>
T Engine<T>::nll(const TokenizedPacket& tp) const {
    const int V = cfg_.vocab_size;
    double total = 0.0;
    int count = 0;
    for (int t = 0; t + 1 < n_tokens_; ++t) {
        if (!tp.loss_mask[t + 1]) continue;
        const T* row = logits_.row(t);
        double m = row[0];
        for (int j = 1; j < V; ++j) m = std::max(m, static_cast<double>(row[j]));
        double denom = 0.0;
        for (int j = 0; j < V; ++j) denom += std::exp(static_cast<double>(row[j]) - m);
        total += m + std::log(denom) - static_cast<double>(row[tp.token_ids[t + 1]]);
        ++count;
    }
    if (count == 0) fail(Errc::empty_mask, "no supervised positions in the sequence");
    return static_cast<T>(total / count);
}

template <typename T>
void Engine<T>::backward(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                         ModelParamsT<T>& grads, T scale) {
    const int n = n_tokens_;
    const int d = cfg_.emb_size;
    const int h = cfg_.hidden_size();
    const int V = cfg_.vocab_size;
    const int nh = cfg_.n_heads;
    const int dh = d / nh;
    const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    int count = 0;
    for (int t = 0; t + 1 < n; ++t)
        if (tp.loss_mask[t + 1]) ++count;
    if (count == 0) fail(Errc::empty_mask, "no supervised positions in the sequence");
    const T w = scale / static_cast<T>(count);

    // d(loss)/d(logits): softmax minus one-hot on supervised rows
    for (int t = 0; t < n; ++t) {
        T* drow = dlogits_.row(t);
        if (t + 1 >= n || !tp.loss_mask[t + 1]) {
            std::fill(drow, drow + V, T(0));
            continue;
        }
        const T* row = logits_.row(t);
        T m = row[0];
        for (int j = 1; j < V; ++j) m = std::max(m, row[j]);
        T denom = T(0);
        for (int j = 0; j < V; ++j) {
            drow[j] = std::exp(row[j] - m);
            denom += drow[j];
        }
        const T inv = T(1) / denom;
        for (int j = 0; j < V; ++j) drow[j] *= inv * w;
        drow[tp.token_ids[t + 1]] -= w;
    }

    // output projection and final norm
    matmul_tA_acc(final_norm_out_.row(0), dlogits_.row(0), grads.out_proj.row(0), n, d, V);
    for (int t = 0; t < n; ++t) std::fill(dnorm_.row(t), dnorm_.row(t) + d, T(0));
    matmul_tB_acc(dlogits_.row(0), params.out_proj.row(0), dnorm_.row(0), n, d, V);
    for (int t = 0; t < n; ++t) std::fill(dx_.row(t), dx_.row(t) + d, T(0));
    rmsnorm_backward(x_final_, params.final_norm_gain, final_rms_, dnorm_, n, dx_,
                     grads.final_norm_gain.data());

    std::vector<T> da_row(static_cast<size_t>(cfg_.seq_len));

    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
        auto& a = acts_[l];
        const auto& lp = params.layers[l];
        auto& gl = grads.layers[l];

        // mlp half: dx_ holds d(loss)/d(x_out); residual passes it to x_mid
        for (int t = 0; t < n; ++t) {
            std::fill(dact_.row(t), dact_.row(t) + h, T(0));
        }
        matmul_tA_acc(a.act.row(0), dx_.row(0), gl.w_down.row(0), n, h, d);
        matmul_tB_acc(dx_.row(0), lp.w_down.row(0), dact_.row(0), n, h, d);

        for (int t = 0; t < n; ++t) {
            const T* g = a.gate.row(t);
            const T* u = a.up.row(t);
            const T* dact = dact_.row(t);
            T* dg = dgate_.row(t);
            T* du = dup_.row(t);
            for (int j = 0; j < h; ++j) {
                const T sg = sigmoid(g[j]);
                const T sw = g[j] * sg;
                du[j] = dact[j] * sw;
                dg[j] = dact[j] * u[j] * sg * (T(1) + g[j] * (T(1) - sg));
            }
        }
        for (int t = 0; t < n; ++t) std::fill(dnorm_.row(t), dnorm_.row(t) + d, T(0));
        matmul_tA_acc(a.mid_norm.row(0), dgate_.row(0), gl.w_gate.row(0), n, d, h);
        matmul_tA_acc(a.mid_norm.row(0), dup_.row(0), gl.w_up.row(0), n, d, h);
        matmul_tB_acc(dgate_.row(0), lp.w_gate.row(0), dnorm_.row(0), n, d, h);
        matmul_tB_acc(dup_.row(0), lp.w_up.row(0), dnorm_.row(0), n, d, h);
        // dx_ becomes d(loss)/d(x_mid): residual term already in place
        rmsnorm_backward(a.x_mid, lp.mlp_norm_gain, a.mlp_rms, dnorm_, n, dx_,
                         gl.mlp_norm_gain.data());

        // attention half
        for (int t = 0; t < n; ++t) {
            std::fill(dctx_.row(t), dctx_.row(t) + d, T(0));
            std::fill(dq_.row(t), dq_.row(t) + d, T(0));
            std::fill(dk_.row(t), dk_.row(t) + d, T(0));
            std::fill(dv_.row(t), dv_.row(t) + d, T(0));
        }
        matmul_tA_acc(a.ctx.row(0), dx_.row(0), gl.wo.row(0), n, d, d);
        matmul_tB_acc(dx_.row(0), lp.wo.row(0), dctx_.row(0), n, d, d);

        for (int head = 0; head < nh; ++head) {
            const int off = head * dh;
            const Mat<T>& aw = a.attn[head];
            for (int t = 0; t < n; ++t) {
                const T* dct = dctx_.row(t) + off;
                const T* wrow = aw.row(t);
                T dot_aw_da = T(0);
                for (int s = 0; s <= t; ++s) {
                    const T* vs = a.v.row(s) + off;
                    T da = T(0);
                    for (int j = 0; j < dh; ++j) da += dct[j] * vs[j];
                    da_row[s] = da;
                    dot_aw_da += wrow[s] * da;
                    T* dvs = dv_.row(s) + off;
                    const T wts = wrow[s];
                    for (int j = 0; j < dh; ++j) dvs[j] += wts * dct[j];
                }
                const T* qt = a.q.row(t) + off;
                T* dqt = dq_.row(t) + off;
                for (int s = 0; s <= t; ++s) {
                    const T ds = wrow[s] * (da_row[s] - dot_aw_da) * inv_sqrt_dh;
                    const T* ks = a.k.row(s) + off;
                    T* dks = dk_.row(s) + off;
                    for (int j = 0; j < dh; ++j) {
                        dqt[j] += ds * ks[j];
                        dks[j] += ds * qt[j];
                    }
                }
            }
        }

        for (int t = 0; t < n; ++t) std::fill(dnorm_.row(t), dnorm_.row(t) + d, T(0));
        matmul_tA_acc(a.x_norm.row(0), dq_.row(0), gl.wq.row(0), n, d, d);
        matmul_tA_acc(a.x_norm.row(0), dk_.row(0), gl.wk.row(0), n, d, d);
        matmul_tA_acc(a.x_norm.row(0), dv_.row(0), gl.wv.row(0), n, d, d);
        matmul_tB_acc(dq_.row(0), lp.wq.row(0), dnorm_.row(0), n, d, d);
        matmul_tB_acc(dk_.row(0), lp.wk.row(0), dnorm_.row(0), n, d, d);
        matmul_tB_acc(dv_.row(0), lp.wv.row(0), dnorm_.row(0), n, d, d);
        // dx_ becomes d(loss)/d(x_in) for this block
        rmsnorm_backward(a.x_in, lp.attn_norm_gain, a.attn_rms, dnorm_, n, dx_,
                         gl.attn_norm_gain.data());
    }

    // scatter into the embedding tables
    for (int t = 0; t < n; ++t) {
        const T* dxt = dx_.row(t);
        T* wrow = grads.emb.word.row(tp.token_ids[t]);
        for (int j = 0; j < d; ++j) wrow[j] += dxt[j];
        if (tp.numeric_pos[t] != kNoNumericPos) {
            T* nrow = grads.emb.numeric_pos.row(tp.numeric_pos[t]);
            for (int j = 0; j < d; ++j) nrow[j] += dxt[j];
        }
        T* frow = grads.emb.field_pos.row(tp.field_pos[t]);
        for (int j = 0; j < d; ++j) frow[j] += dxt[j];
    }
}

template class Engine<float>;
template class Engine<double>;

} // namespace detail

template <typename T>
ForwardTraceT<T> forward(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                         const ModelConfig& cfg, bool capture_attention) {
    detail::Engine<T> engine(cfg);
    engine.forward(tp, params, cfg.seq_len, capture_attention);
    ForwardTraceT<T> trace;
    trace.logits = engine.logits();
    trace.n_layers = cfg.n_layers;
    trace.n_heads = cfg.n_heads;
    if (capture_attention) trace.attention = engine.attention();
    return trace;
}

template <typename T>
T sequence_nll(const ForwardTraceT<T>& trace, const TokenizedPacket& tp) {
    const int L = trace.logits.rows;
    const int V = trace.logits.cols;
    if (tp.length() != L) fail(Errc::shape_mismatch, "trace and packet disagree on length");
    double total = 0.0;
    int count = 0;
    for (int t = 0; t + 1 < L; ++t) {
        if (!tp.loss_mask[t + 1]) continue;
        const T* row = trace.logits.row(t);
        double m = row[0];
        for (int j = 1; j < V; ++j) m = std::max(m, static_cast<double>(row[j]));
        double denom = 0.0;
        for (int j = 0; j < V; ++j) denom += std::exp(static_cast<double>(row[j]) - m);
        total += m + std::log(denom) - static_cast<double>(row[tp.token_ids[t + 1]]);
        ++count;
    }
    if (count == 0) fail(Errc::empty_mask, "no supervised positions in the sequence");
    return static_cast<T>(total / count);
}

template <typename T>
ModelParamsT<T> gradients(const TokenizedPacket& tp, const ModelParamsT<T>& params,
                          const ModelConfig& cfg) {
    detail::Engine<T> engine(cfg);
    ModelParamsT<T> grads = ModelParamsT<T>::zeros(cfg);
    engine.forward(tp, params, cfg.seq_len, false);
    engine.backward(tp, params, grads, T(1));
    return grads;
}

namespace {

// Softmax over the label-token slice of one logits row, renormalized; ties
// resolve to the lowest class id.
template <typename T>
std::pair<int, std::vector<T>> restricted_label_softmax(const T* row,
                                                        const Vocabulary& vocab) {
    const int K = vocab.label_count;
    std::vector<T> probs(K);
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k)
        m = std::max(m, static_cast<double>(row[vocab.label_id(k)]));
    double denom = 0.0;
    std::vector<double> e(K);
    for (int k = 0; k < K; ++k) {
        e[k] = std::exp(static_cast<double>(row[vocab.label_id(k)]) - m);
        denom += e[k];
    }
    int best = 0;
    for (int k = 0; k < K; ++k) {
        probs[k] = static_cast<T>(e[k] / denom);
        if (probs[k] > probs[best]) best = k;
    }
    return {best, std::move(probs)};
}

template <typename T>
std::pair<int, std::vector<T>> predict_with_engine(detail::Engine<T>& engine,
                                                   const TokenizedPacket& tp,
                                                   const ModelParamsT<T>& params,
                                                   const Vocabulary& vocab) {
    if (tp.label_pos < 1)
        fail(Errc::shape_mismatch, "label position must follow at least one token");
    // causality: logits at label_pos-1 never see the label slot
    engine.forward(tp, params, tp.label_pos, false);
    return restricted_label_softmax(engine.logits().row(tp.label_pos - 1), vocab);
}

} // namespace

template <typename T>
std::pair<int, std::vector<T>> predict_label(const TokenizedPacket& tp,
                                             const ModelParamsT<T>& params,
                                             const ModelConfig& cfg,
                                             const Vocabulary& vocab) {
    if (vocab.label_base + vocab.label_count > cfg.vocab_size)
        fail(Errc::shape_mismatch, "vocabulary does not fit the model");
    detail::Engine<T> engine(cfg);
    return predict_with_engine(engine, tp, params, vocab);
}

template <typename T>
std::pair<int, std::vector<T>> Predictor<T>::predict(const TokenizedPacket& tp) {
    return predict_with_engine(engine_, tp, params_, vocab_);
}

template struct ModelParamsT<float>;
template struct ModelParamsT<double>;

template ForwardTraceT<float> forward<float>(const TokenizedPacket&,
                                             const ModelParamsT<float>&,
                                             const ModelConfig&, bool);
template ForwardTraceT<double> forward<double>(const TokenizedPacket&,
                                               const ModelParamsT<double>&,
                                               const ModelConfig&, bool);
template float sequence_nll<float>(const ForwardTraceT<float>&, const TokenizedPacket&);
template double sequence_nll<double>(const ForwardTraceT<double>&, const TokenizedPacket&);
template ModelParamsT<float> gradients<float>(const TokenizedPacket&,
                                              const ModelParamsT<float>&,
                                              const ModelConfig&);
template ModelParamsT<double> gradients<double>(const TokenizedPacket&,
                                                const ModelParamsT<double>&,
                                                const ModelConfig&);
template std::pair<int, std::vector<float>> predict_label<float>(const TokenizedPacket&,
                                                                 const ModelParamsT<float>&,
                                                                 const ModelConfig&,
                                                                 const Vocabulary&);
template std::pair<int, std::vector<double>>
predict_label<double>(const TokenizedPacket&, const ModelParamsT<double>&,
                      const ModelConfig&, const Vocabulary&);
template class Predictor<float>;
template class Predictor<double>;

} // namespace packetlm
