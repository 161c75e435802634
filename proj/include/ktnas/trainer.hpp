#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ktnas/checkpoint.hpp"
#include "ktnas/common.hpp"
#include "ktnas/dataset.hpp"
#include "ktnas/genome.hpp"
#include "ktnas/metrics.hpp"
#include "ktnas/model.hpp"
#include "ktnas/optimizer.hpp"
#include "ktnas/rng.hpp"
#include "ktnas/supernet.hpp"

namespace ktnas {

struct TrainConfig {
    int epochs = 60;
    double learning_rate = 1e-3;  // Noam base factor
    int batch_size = 128;
    int warmup_steps = 8000;
    uint64_t seed = 0;
    std::string checkpoint_prefix;  // empty disables checkpointing
    int checkpoint_every = 1;       // epochs

    void validate() const {
        require(epochs >= 0, "train: epochs must be >= 0");
        require(batch_size >= 1, "train: batch_size must be >= 1");
        require(warmup_steps >= 1, "train: warmup_steps must be >= 1");
        require(learning_rate >= 0.0, "train: learning_rate must be >= 0");
    }
};

struct StepCounters {
    int64_t forward_passes = 0;
    int64_t optimizer_updates = 0;
};

struct SandwichLosses {
    double global_loss = 0.0;
    double local_loss = 0.0;
    double random_loss = 0.0;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
};

// Single-writer training loop. One RNG drives everything stochastic (batch
// shuffling, sub-model sampling, dropout) so a resumed run replays the exact
// trajectory of an uninterrupted one.
template <class S>
class Trainer {
public:
    Trainer(Supernet<S>& net, const TrainConfig& cfg)
        : net_(net),
          cfg_(cfg),
          grads_(make_supernet<S>(net.config, net.vocab)),
          adam_(AdamState<S>::make(net.config, net.vocab)),
          rng_(Rng(cfg.seed).fork("trainer")),
          full_space_(SearchSpace::initial(net.config.num_features, net.config.blocks_per_side)) {
        cfg_.validate();
        schedule_.base = cfg.learning_rate;
        schedule_.model_dim = net.config.embed_dim;
        schedule_.warmup_steps = cfg.warmup_steps;
    }

    const StepCounters& counters() const { return counters_; }
    int64_t step() const { return step_; }
    Rng& rng() { return rng_; }

    // One forward+backward of a genome's sub-model; gradients accumulate into
    // the given store. Exposed separately so the per-pass gradient-locality
    // contract is directly observable.
    double accumulate_pass(const Batch<S>& batch, const Genome& genome, Supernet<S>& grads) {
        ModelTrace<S> trace;
        ModelOutput<S> out = model_forward(net_, genome, batch, &rng_, trace);
        counters_.forward_passes += 1;
        BceResult<S> bce = bce_masked(out.logits, batch.target, batch.valid);
        model_backward(net_, genome, batch, trace, bce.dlogits, grads);
        return bce.loss;
    }

    // Adapted sandwich rule: a global sub-model, a local sub-model and a fully
    // random sub-model share the batch; their gradients sum into one update.
    SandwichLosses sandwich_step(const Batch<S>& batch) {
        const int n = net_.config.blocks_per_side;
        Genome sub_g = uniform_genome(random_selection(), random_selection(), n, kVanillaBlock);
        Genome sub_l = uniform_genome(random_selection(), random_selection(), n, kLocalBlock);
        Genome sub_r = sample(full_space_, rng_);

        zero_params(grads_);
        SandwichLosses losses;
        losses.global_loss = accumulate_pass(batch, sub_g, grads_);
        losses.local_loss = accumulate_pass(batch, sub_l, grads_);
        losses.random_loss = accumulate_pass(batch, sub_r, grads_);
        apply_update();
        return losses;
    }

    // Fixed-genome training step (single forward, used for retraining and the
    // ablation presets).
    double fixed_step(const Batch<S>& batch, const Genome& genome) {
        zero_params(grads_);
        double loss = accumulate_pass(batch, genome, grads_);
        apply_update();
        return loss;
    }

    // Runs `cfg.epochs` epochs over shuffled batches. A null genome pointer
    // selects sandwich training of the whole supernet.
    std::vector<EpochLog> train(const std::vector<SequenceWindow>& windows,
                                const Genome* fixed_genome = nullptr, int start_epoch = 0) {
        require(!windows.empty(), "train: no training windows");
        std::vector<EpochLog> log;
        for (int epoch = start_epoch; epoch < cfg_.epochs; ++epoch) {
            std::vector<int> order(windows.size());
            for (size_t i = 0; i < windows.size(); ++i) order[i] = static_cast<int>(i);
            rng_.shuffle(order);

            double loss_sum = 0.0;
            int64_t n_batches = 0;
            for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(cfg_.batch_size)) {
                size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg_.batch_size));
                std::vector<int> idx(order.begin() + static_cast<long>(begin),
                                     order.begin() + static_cast<long>(end));
                Batch<S> batch = make_batch<S>(windows, idx);
                if (fixed_genome) {
                    loss_sum += fixed_step(batch, *fixed_genome);
                } else {
                    SandwichLosses l = sandwich_step(batch);
                    loss_sum += (l.global_loss + l.local_loss + l.random_loss) / 3.0;
                }
                ++n_batches;
            }
            log.push_back({epoch, loss_sum / static_cast<double>(n_batches)});
            if (!cfg_.checkpoint_prefix.empty() &&
                ((epoch + 1) % cfg_.checkpoint_every == 0 || epoch + 1 == cfg_.epochs))
                save(epoch);
        }
        return log;
    }

    void save(int epoch) const {
        CheckpointMeta meta;
        meta.step = step_;
        meta.epoch = epoch;
        meta.rng_state = rng_.serialize();
        save_checkpoint(cfg_.checkpoint_prefix, net_, &adam_, meta);
    }

    // Restores parameters, optimizer state and the RNG; returns the epoch to
    // resume from (checkpointed epoch + 1).
    int resume(const std::string& prefix) {
        CheckpointMeta meta = load_checkpoint(prefix, net_, &adam_);
        step_ = meta.step;
        rng_.deserialize(meta.rng_state);
        return meta.epoch + 1;
    }

private:
    std::vector<int> random_selection() {
        std::vector<int> bits(static_cast<size_t>(net_.config.num_features));
        for (auto& b : bits) b = rng_.bernoulli(0.5) ? 1 : 0;
        int sum = 0;
        for (int b : bits) sum += b;
        if (sum == 0)
            bits[static_cast<size_t>(rng_.uniform_int(0, net_.config.num_features - 1))] = 1;
        return bits;
    }

    void apply_update() {
        step_ += 1;
        adam_step(net_, grads_, adam_, schedule_.rate(step_));
        counters_.optimizer_updates += 1;
    }

    Supernet<S>& net_;
    TrainConfig cfg_;
    Supernet<S> grads_;
    AdamState<S> adam_;
    Rng rng_;
    SearchSpace full_space_;
    NoamSchedule schedule_;
    StepCounters counters_;
    int64_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

// Deterministic, dropout-free forward of the genome's sub-model over a fixed
// seed-determined subset of validation batches. max_batches < 0 means all.
template <class S>
EvalBuffer collect_predictions(const Supernet<S>& net, const Genome& genome,
                               const std::vector<SequenceWindow>& windows, int batch_size,
                               int max_batches, uint64_t subset_seed) {
    require(!windows.empty(), "evaluate: empty window set");
    std::vector<int> order(windows.size());
    for (size_t i = 0; i < windows.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng = Rng(subset_seed).fork("eval-subset");
    rng.shuffle(order);

    EvalBuffer buf;
    int batches_done = 0;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(batch_size)) {
        if (max_batches >= 0 && batches_done >= max_batches) break;
        size_t end = std::min(order.size(), begin + static_cast<size_t>(batch_size));
        std::vector<int> idx(order.begin() + static_cast<long>(begin),
                             order.begin() + static_cast<long>(end));
        Batch<S> batch = make_batch<S>(windows, idx);
        ModelTrace<S> trace;
        ModelOutput<S> out = model_forward(net, genome, batch, nullptr, trace);
        for (index_t r = 0; r < batch.rows(); ++r)
            if (batch.valid[static_cast<size_t>(r)])
                buf.add(static_cast<double>(out.prob(r)), batch.target[static_cast<size_t>(r)]);
        ++batches_done;
    }
    require(buf.size() > 0, "evaluate: no valid positions in the evaluation subset");
    return buf;
}

template <class S>
double evaluate_auc(const Supernet<S>& net, const Genome& genome,
                    const std::vector<SequenceWindow>& windows, int batch_size, int max_batches,
                    uint64_t subset_seed) {
    return auc(collect_predictions(net, genome, windows, batch_size, max_batches, subset_seed));
}

struct MetricsReport {
    double auc = 0.0;
    double acc = 0.0;
    double rmse = 0.0;
};

template <class S>
MetricsReport evaluate_metrics(const Supernet<S>& net, const Genome& genome,
                               const std::vector<SequenceWindow>& windows, int batch_size) {
    EvalBuffer buf = collect_predictions(net, genome, windows, batch_size, -1, 0);
    return MetricsReport{auc(buf), accuracy(buf), rmse(buf)};
}

}  // namespace ktnas
