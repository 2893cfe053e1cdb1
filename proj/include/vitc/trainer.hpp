#pragma once

// Training loop: cross-entropy, SGD with optional momentum, cosine LR
// decay, periodic validation with early stopping on accuracy.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vitc/dataset.hpp"
#include "vitc/vit.hpp"

namespace vitc::train {

struct TrainConfig {
    int64_t total_steps = 10000;
    int batch_size = 32;
    double base_lr = 0.03;
    double momentum = 0.9;
    int eval_interval_steps = 100;
    int early_stop_patience_evals = 10;
    int warmup_steps = 0;       // 0 = pure cosine decay
    bool freeze_encoder = false; // train only the classification head
    uint64_t seed = 0;

    void validate() const {
        if (total_steps <= 0) throw ValueError("TrainConfig: total_steps must be positive");
        if (base_lr <= 0) throw ValueError("TrainConfig: base_lr must be positive");
        if (batch_size < 1) throw ValueError("TrainConfig: batch_size must be at least 1");
        if (eval_interval_steps < 1 || early_stop_patience_evals < 1)
            throw ValueError("TrainConfig: eval interval and patience must be at least 1");
        if (momentum < 0 || momentum >= 1) throw ValueError("TrainConfig: momentum must be in [0,1)");
        if (warmup_steps < 0 || warmup_steps >= total_steps)
            throw ValueError("TrainConfig: warmup_steps must be in [0,total_steps)");
    }
};

/// lr = base/2 · (1 + cos(pi·step/total)); lr(0)=base, lr(total)=0.
inline double cosine_lr(int64_t step, int64_t total_steps, double base_lr) {
    if (step < 0 || step > total_steps) throw ValueError("cosine_lr: step out of [0,total_steps]");
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * frac));
}

/// Effective schedule including the optional linear warmup prefix.
inline double scheduled_lr(int64_t step, const TrainConfig& cfg) {
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
        return cfg.base_lr * static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
    const int64_t w = cfg.warmup_steps;
    return cosine_lr(step - w, cfg.total_steps - w, cfg.base_lr);
}

struct TrainState {
    int64_t step = 0;
    double current_lr = 0;
    double best_val_accuracy = -1.0;
    int64_t best_step = -1;
    int evals_since_best = 0;
    std::map<std::string, std::vector<float>> momentum_buffers;

    struct HistoryRow {
        int64_t step;
        double lr;
        double train_loss;
        double val_accuracy;
    };
    std::vector<HistoryRow> history;
};

/// One SGD update: v ← momentum·v + g; w ← w − lr·v, in place, then
/// clears gradients. Every trainable tensor must carry a gradient.
void sgd_step(vit::ModelParams<float>& params, TrainState& state, double lr, double momentum,
              const std::function<bool(const std::string&)>& trainable = nullptr);

struct TrainResult {
    vit::ModelParams<float> best_params;
    double best_val_accuracy = 0;
    int64_t best_step = -1;
    bool early_stopped = false;
    int64_t steps_run = 0;
    std::vector<TrainState::HistoryRow> history;
};

/// Runs the full recipe on preprocessed (resized, [0,1]) samples;
/// standardization happens at batch assembly. `eval_override`, when set,
/// replaces the validation-accuracy computation (metric/testing seam).
TrainResult train(vit::ModelParams<float>& params, const std::vector<data::Sample>& train_samples,
                  const std::vector<data::Sample>& val_samples, const TrainConfig& cfg,
                  const std::function<double(const vit::ModelParams<float>&)>& eval_override = nullptr,
                  std::ostream* log = nullptr);

void write_history_csv(const std::string& path, const std::vector<TrainState::HistoryRow>& history);

} // namespace vitc::train
