#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "packetlm/model.hpp"
#include "packetlm/schema.hpp"

namespace packetlm {

struct TrainConfig {
    int epochs = 60;
    double base_lr = 1e-4;
    int batch_size = 128;
    int warmup_steps = -1; // -1: 5% of total steps
    double min_lr = -1.0;  // -1: base_lr / 10
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 0;
    ModelConfig model;

    // Replace the -1 placeholders given the dataset size.
    TrainConfig resolved(int64_t dataset_size) const;
    void validate(int64_t total_steps) const;
    int64_t steps_per_epoch(int64_t dataset_size) const;

    bool operator==(const TrainConfig&) const = default;
};

struct TrainLogRecord {
    int epoch = 0;       // 1-based, the epoch just finished
    int64_t step = 0;    // optimizer steps taken so far
    double mean_nll = 0.0;
    double lr = 0.0;     // rate used for the epoch's final step
    double seconds = 0.0;
};

// Linear ramp 0 -> base_lr over warmup_steps, then cosine from base_lr down
// to min_lr over the remaining steps.
double lr_at_step(int64_t step, const TrainConfig& cfg, int64_t total_steps);

// Bias-corrected Adam, no weight decay. step is 0-based (first update = 0).
// Throws Errc::non_finite_gradient on any NaN/Inf gradient entry.
template <typename T>
void adam_step(ModelParamsT<T>& params, const ModelParamsT<T>& grads,
               ModelParamsT<T>& m, ModelParamsT<T>& v, int64_t step, double lr,
               const TrainConfig& cfg);

struct Checkpoint; // checkpoint.hpp

class Trainer {
public:
    // Fresh run: seeds the RNG, initializes parameters.
    Trainer(PacketSchema schema, TrainConfig cfg,
            const std::vector<TokenizedPacket>* dataset);
    // Resume: restores parameters, moments, step counter and RNG state.
    Trainer(const Checkpoint& ckpt, const std::vector<TokenizedPacket>* dataset);
    ~Trainer();

    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    void run_epoch();
    void run(); // remaining epochs up to cfg.epochs

    int epochs_completed() const { return epochs_completed_; }
    const TrainConfig& config() const { return cfg_; }
    const ModelParams& params() const { return params_; }
    const std::vector<TrainLogRecord>& log() const { return log_; }

    Checkpoint snapshot() const;

    // Called after each epoch with the fresh log record; the trainer itself
    // never touches evaluation data.
    using EpochCallback = std::function<void(const TrainLogRecord&, const ModelParams&)>;
    void set_epoch_callback(EpochCallback cb) { epoch_callback_ = std::move(cb); }

private:
    PacketSchema schema_;
    TrainConfig cfg_;
    const std::vector<TokenizedPacket>* dataset_;
    int64_t total_steps_ = 0;
    int64_t step_ = 0;
    int epochs_completed_ = 0;
    ModelParams params_, adam_m_, adam_v_;
    Rng rng_;
    std::vector<TrainLogRecord> log_;
    EpochCallback epoch_callback_;

    struct Impl; // batch workspace
    std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: train from scratch for cfg.epochs epochs.
std::pair<Checkpoint, std::vector<TrainLogRecord>>
train(const std::vector<TokenizedPacket>& dataset, const PacketSchema& schema,
      const TrainConfig& cfg);

std::string train_log_to_jsonl(const std::vector<TrainLogRecord>& log);

} // namespace packetlm
