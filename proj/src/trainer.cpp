#include "vitc/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "vitc/evaluator.hpp"

namespace vitc::train {

void sgd_step(vit::ModelParams<float>& params, TrainState& state, double lr, double momentum,
              const std::function<bool(const std::string&)>& trainable) {
    const float flr = static_cast<float>(lr);
    const float fm = static_cast<float>(momentum);
    for (auto& [name, t] : params.tensors) {
        if (trainable && !trainable(name)) {
            t.zero_grad();
            continue;
        }
        if (!t.has_grad())
            throw ValueError("sgd_step: no gradient for trainable tensor '" + name + "'");
        auto g = t.grad();
        auto w = t.data();
        auto& v = state.momentum_buffers[name];
        if (v.empty()) v.assign(w.size(), 0.0f);
        for (size_t i = 0; i < w.size(); ++i) {
            v[i] = fm * v[i] + g[i];
            w[i] -= flr * v[i];
        }
        t.zero_grad();
    }
}

namespace {

std::vector<core::TensorF> make_batch_inputs(const std::vector<data::Sample>& samples,
                                             const std::vector<int64_t>& order, int64_t start, int count,
                                             std::vector<int>& targets_out) {
    std::vector<core::TensorF> inputs;
    inputs.reserve(static_cast<size_t>(count));
    targets_out.clear();
    const int64_t n = static_cast<int64_t>(order.size());
    for (int b = 0; b < count; ++b) {
        const auto& s = samples[static_cast<size_t>(order[static_cast<size_t>((start + b) % n)])];
        inputs.push_back(data::standardize(s.pixels));
        targets_out.push_back(s.label);
    }
    return inputs;
}

double evaluate_accuracy(const vit::ModelParams<float>& params, const std::vector<data::Sample>& val,
                         int batch_size) {
    const auto pred = eval::predict(params, val, batch_size);
    int64_t correct = 0;
    for (size_t i = 0; i < val.size(); ++i)
        if (pred.labels[i] == val[i].label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(val.size());
}

void shuffle_order(std::vector<int64_t>& order, std::mt19937_64& rng) {
    for (int64_t i = static_cast<int64_t>(order.size()) - 1; i > 0; --i) {
        const int64_t j = static_cast<int64_t>(rng() % static_cast<uint64_t>(i + 1));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
}

} // namespace

TrainResult train(vit::ModelParams<float>& params, const std::vector<data::Sample>& train_samples,
                  const std::vector<data::Sample>& val_samples, const TrainConfig& cfg,
                  const std::function<double(const vit::ModelParams<float>&)>& eval_override,
                  std::ostream* log) {
    cfg.validate();
    if (train_samples.empty()) throw ValueError("train: empty training stream");
    if (val_samples.empty() && !eval_override) throw ValueError("train: empty validation stream");
    params.validate();

    const bool frozen = cfg.freeze_encoder;
    auto trainable = [frozen](const std::string& name) {
        return !frozen || name.rfind("head.", 0) == 0;
    };
    params.set_requires_grad(false);
    for (auto& [name, t] : params.tensors)
        if (trainable(name)) t.set_requires_grad(true);

    std::mt19937_64 rng(cfg.seed);
    std::mt19937_64 dropout_rng(mix_seed(cfg.seed, 0x64726f70)); // independent stream
    std::vector<int64_t> order(train_samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
    shuffle_order(order, rng);

    TrainState state;
    TrainResult result;
    result.best_params = params.clone();

    const int64_t n = static_cast<int64_t>(train_samples.size());
    int64_t epoch_pos = 0;
    double last_loss = 0;

    auto run_eval = [&](double train_loss) {
        const double acc = eval_override ? eval_override(params)
                                         : evaluate_accuracy(params, val_samples, cfg.batch_size);
        state.history.push_back({state.step, scheduled_lr(state.step, cfg), train_loss, acc});
        if (log)
            (*log) << "step " << state.step << " lr " << state.current_lr << " loss " << train_loss << " val_acc "
                   << acc << "\n";
        if (acc > state.best_val_accuracy) {
            state.best_val_accuracy = acc;
            state.best_step = state.step;
            state.evals_since_best = 0;
            result.best_params = params.clone();
        } else {
            state.evals_since_best++;
        }
        return state.evals_since_best >= cfg.early_stop_patience_evals;
    };

    bool stopped = false;
    while (state.step < cfg.total_steps && !stopped) {
        state.current_lr = scheduled_lr(state.step, cfg);

        std::vector<int> targets;
        auto inputs = make_batch_inputs(train_samples, order, epoch_pos, cfg.batch_size, targets);
        epoch_pos += cfg.batch_size;
        if (epoch_pos >= n) {
            epoch_pos = 0;
            shuffle_order(order, rng);
        }

        core::TensorF logits = vit::forward_batch(inputs, params,
                                                  params.config.dropout > 0 ? &dropout_rng : nullptr);
        core::TensorF loss = core::cross_entropy(logits, targets);
        last_loss = static_cast<double>(loss.item());
        if (!std::isfinite(last_loss)) {
            std::ostringstream os;
            os << "train: non-finite loss at step " << state.step << " (lr " << state.current_lr << ")";
            throw NumericError(os.str());
        }
        loss.backward();
        sgd_step(params, state, state.current_lr, cfg.momentum, trainable);
        state.step++;

        if (state.step % cfg.eval_interval_steps == 0 || state.step == cfg.total_steps)
            stopped = run_eval(last_loss);
    }

    result.best_val_accuracy = state.best_val_accuracy;
    result.best_step = state.best_step;
    result.early_stopped = stopped;
    result.steps_run = state.step;
    result.history = std::move(state.history);
    params.set_requires_grad(false);
    result.best_params.set_requires_grad(false);
    return result;
}

void write_history_csv(const std::string& path, const std::vector<TrainState::HistoryRow>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write history '" + path + "'");
    out << "step,lr,train_loss,val_accuracy\n";
    out.precision(10);
    for (const auto& row : history)
        out << row.step << ',' << row.lr << ',' << row.train_loss << ',' << row.val_accuracy << "\n";
}

} // namespace vitc::train
