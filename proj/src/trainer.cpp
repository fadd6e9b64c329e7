#include "packetlm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "packetlm/checkpoint.hpp"
#include "packetlm/error.hpp"

namespace packetlm {

int64_t TrainConfig::steps_per_epoch(int64_t dataset_size) const {
    return (dataset_size + batch_size - 1) / batch_size;
}

TrainConfig TrainConfig::resolved(int64_t dataset_size) const {
    TrainConfig out = *this;
    const int64_t total = static_cast<int64_t>(epochs) * steps_per_epoch(dataset_size);
    if (out.warmup_steps < 0)
        out.warmup_steps = static_cast<int>(total / 20); // 5% of total steps
    if (out.min_lr < 0) out.min_lr = out.base_lr / 10.0;
    out.validate(total);
    return out;
}

void TrainConfig::validate(int64_t total_steps) const {
    model.validate();
    if (epochs < 1) fail(Errc::config_error, "epochs must be positive");
    if (!(base_lr > 0.0)) fail(Errc::config_error, "base_lr must be positive");
    if (batch_size < 1) fail(Errc::config_error, "batch_size must be positive");
    if (warmup_steps >= 0 && warmup_steps >= total_steps && total_steps > 0)
        fail(Errc::config_error, "warmup_steps must be below total steps");
    if (min_lr >= 0.0 && min_lr > base_lr)
        fail(Errc::config_error, "min_lr must not exceed base_lr");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        fail(Errc::config_error, "adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) fail(Errc::config_error, "adam_eps must be positive");
}

double lr_at_step(int64_t step, const TrainConfig& cfg, int64_t total_steps) {
    const int64_t warmup = cfg.warmup_steps < 0 ? 0 : cfg.warmup_steps;
    const double min_lr = cfg.min_lr < 0 ? cfg.base_lr / 10.0 : cfg.min_lr;
    if (step < warmup)
        return cfg.base_lr * static_cast<double>(step) / static_cast<double>(warmup);
    if (step >= total_steps) return min_lr;
    const double progress = static_cast<double>(step - warmup) /
                            static_cast<double>(total_steps - warmup);
    return min_lr + (cfg.base_lr - min_lr) * (1.0 + std::cos(M_PI * progress)) / 2.0;
}

template <typename T>
void adam_step(ModelParamsT<T>& params, const ModelParamsT<T>& grads,
               ModelParamsT<T>& m, ModelParamsT<T>& v, int64_t step, double lr,
               const TrainConfig& cfg) {
    auto p_refs = params.tensor_refs();
    auto g_refs = grads.tensor_refs();
    auto m_refs = m.tensor_refs();
    auto v_refs = v.tensor_refs();
    if (g_refs.size() != p_refs.size() || m_refs.size() != p_refs.size() ||
        v_refs.size() != p_refs.size())
        fail(Errc::shape_mismatch, "optimizer state does not match parameters");

    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T eps = static_cast<T>(cfg.adam_eps);
    const double t = static_cast<double>(step + 1);
    const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
    const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
    const T alpha = static_cast<T>(lr);

    for (size_t r = 0; r < p_refs.size(); ++r) {
        if (g_refs[r].count != p_refs[r].count)
            fail(Errc::shape_mismatch, "gradient shape mismatch at " + p_refs[r].name);
        T* p = p_refs[r].data;
        const T* g = g_refs[r].data;
        T* mm = m_refs[r].data;
        T* vv = v_refs[r].data;
        for (size_t i = 0; i < p_refs[r].count; ++i) {
            if (!std::isfinite(g[i]))
                fail(Errc::non_finite_gradient,
                     "non-finite gradient in " + p_refs[r].name + " at index " +
                         std::to_string(i));
            mm[i] = b1 * mm[i] + (T(1) - b1) * g[i];
            vv[i] = b2 * vv[i] + (T(1) - b2) * g[i] * g[i];
            const T mhat = mm[i] / corr1;
            const T vhat = vv[i] / corr2;
            p[i] -= alpha * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template void adam_step<float>(ModelParamsT<float>&, const ModelParamsT<float>&,
                               ModelParamsT<float>&, ModelParamsT<float>&, int64_t,
                               double, const TrainConfig&);
template void adam_step<double>(ModelParamsT<double>&, const ModelParamsT<double>&,
                                ModelParamsT<double>&, ModelParamsT<double>&, int64_t,
                                double, const TrainConfig&);

struct Trainer::Impl {
    detail::Engine<float> engine;
    ModelParams grads;
    std::vector<int64_t> order;

    Impl(const ModelConfig& cfg) : engine(cfg), grads(ModelParams::zeros(cfg)) {}
};

Trainer::Trainer(PacketSchema schema, TrainConfig cfg,
                 const std::vector<TokenizedPacket>* dataset)
    : schema_(std::move(schema)), dataset_(dataset) {
    if (!dataset_ || dataset_->empty())
        fail(Errc::empty_file, "training dataset is empty");
    cfg_ = cfg.resolved(static_cast<int64_t>(dataset_->size()));
    total_steps_ = static_cast<int64_t>(cfg_.epochs) *
                   cfg_.steps_per_epoch(static_cast<int64_t>(dataset_->size()));
    rng_.seed(cfg_.seed);
    params_ = ModelParams::init(cfg_.model, rng_);
    adam_m_ = ModelParams::zeros(cfg_.model);
    adam_v_ = ModelParams::zeros(cfg_.model);
    impl_ = std::make_unique<Impl>(cfg_.model);
}

Trainer::Trainer(const Checkpoint& ckpt, const std::vector<TokenizedPacket>* dataset)
    : schema_(ckpt.schema), cfg_(ckpt.train), dataset_(dataset) {
    if (!dataset_ || dataset_->empty())
        fail(Errc::empty_file, "training dataset is empty");
    total_steps_ = static_cast<int64_t>(cfg_.epochs) *
                   cfg_.steps_per_epoch(static_cast<int64_t>(dataset_->size()));
    step_ = ckpt.step;
    epochs_completed_ = ckpt.epochs_completed;
    params_ = ckpt.params;
    adam_m_ = ckpt.adam_m;
    adam_v_ = ckpt.adam_v;
    std::istringstream ss(ckpt.rng_state);
    ss >> rng_;
    if (!ss) fail(Errc::corrupt_tensor, "cannot restore RNG state from checkpoint");
    impl_ = std::make_unique<Impl>(cfg_.model);
}

Trainer::~Trainer() = default;

void Trainer::run_epoch() {
    const auto start = std::chrono::steady_clock::now();
    const auto& data = *dataset_;
    const int64_t n = static_cast<int64_t>(data.size());

    auto& order = impl_->order;
    order.resize(n);
    std::iota(order.begin(), order.end(), int64_t{0});
    shuffle(order, rng_);

    double nll_sum = 0.0;
    double last_lr = 0.0;
    for (int64_t begin = 0; begin < n; begin += cfg_.batch_size) {
        const int64_t end = std::min(n, begin + cfg_.batch_size);
        const float scale = 1.0f / static_cast<float>(end - begin);
        auto& grads = impl_->grads;
        for (auto& ref : grads.tensor_refs())
            std::fill(ref.data, ref.data + ref.count, 0.0f);

        for (int64_t i = begin; i < end; ++i) {
            const TokenizedPacket& tp = data[order[i]];
            impl_->engine.forward(tp, params_, tp.label_pos + 1, false);
            nll_sum += impl_->engine.nll(tp);
            impl_->engine.backward(tp, params_, grads, scale);
        }

        last_lr = lr_at_step(step_, cfg_, total_steps_);
        try {
            adam_step(params_, grads, adam_m_, adam_v_, step_, last_lr, cfg_);
        } catch (const Error& e) {
            if (e.code() == Errc::non_finite_gradient)
                fail(Errc::non_finite_gradient,
                     std::string(e.what()) + " (epoch " +
                         std::to_string(epochs_completed_ + 1) + ", step " +
                         std::to_string(step_) + ")");
            throw;
        }
        ++step_;
    }

    ++epochs_completed_;
    TrainLogRecord rec;
    rec.epoch = epochs_completed_;
    rec.step = step_;
    rec.mean_nll = nll_sum / static_cast<double>(n);
    rec.lr = last_lr;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                      .count();
    log_.push_back(rec);
    if (epoch_callback_) epoch_callback_(rec, params_);
}

void Trainer::run() {
    while (epochs_completed_ < cfg_.epochs) run_epoch();
}

Checkpoint Trainer::snapshot() const {
    Checkpoint ckpt;
    ckpt.schema = schema_;
    ckpt.model = cfg_.model;
    ckpt.train = cfg_;
    ckpt.step = step_;
    ckpt.epochs_completed = epochs_completed_;
    ckpt.params = params_;
    ckpt.adam_m = adam_m_;
    ckpt.adam_v = adam_v_;
    std::ostringstream ss;
    ss << rng_;
    ckpt.rng_state = ss.str();
    return ckpt;
}

std::pair<Checkpoint, std::vector<TrainLogRecord>>
train(const std::vector<TokenizedPacket>& dataset, const PacketSchema& schema,
      const TrainConfig& cfg) {
    Trainer trainer(schema, cfg, &dataset);
    trainer.run();
    return {trainer.snapshot(), trainer.log()};
}

std::string train_log_to_jsonl(const std::vector<TrainLogRecord>& log) {
    std::ostringstream os;
    for (const auto& rec : log) {
        nlohmann::json j{{"epoch", rec.epoch},
                         {"step", rec.step},
                         {"mean_nll", rec.mean_nll},
                         {"lr", rec.lr},
                         {"seconds", rec.seconds}};
        os << j.dump() << "\n";
    }
    return os.str();
}

} // namespace packetlm
