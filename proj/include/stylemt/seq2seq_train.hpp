#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylemt/seq2seq.hpp"

namespace stylemt {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int64_t batch_size = 64;
    int64_t checkpoint_interval = 1000;  // updates between dev evaluations
    int64_t patience = 8;                // non-improving checkpoints before stop
    AdamConfig adam;
    int64_t max_updates = 5000;
    int64_t beam = 5;
    int64_t num_replicas = 4;
    uint64_t seed = 0;                   // drives epoch shuffles and dropout
};

void validate_train_config(const TrainConfig& config);  // throws ModelError

// Strict-improvement early stopping over the checkpoint perplexity stream.
// feed() returns whether the checkpoint improved on the best so far.
class EarlyStopper {
  public:
    explicit EarlyStopper(int64_t patience);

    bool feed(double perplexity);
    bool should_stop() const { return bad_streak_ >= patience_; }
    int64_t best_index() const { return best_index_; }  // 1-based checkpoint
    double best_value() const { return best_value_; }
    int64_t count() const { return count_; }

  private:
    int64_t patience_;
    int64_t count_ = 0;
    int64_t bad_streak_ = 0;
    int64_t best_index_ = 0;
    double best_value_ = 0.0;
};

struct CheckpointRecord {
    int64_t update = 0;
    double train_loss = 0.0;      // mean batch loss since the last checkpoint
    double dev_perplexity = 0.0;
    std::string decision;         // "improved", "no-improvement", "stop", "abort"
};

struct TrainResult {
    Seq2SeqParams params;         // best checkpoint by dev perplexity
    int64_t best_checkpoint = 0;  // 1-based index into the checkpoint stream
    double best_perplexity = 0.0;
    int64_t updates_run = 0;
    bool aborted = false;         // non-finite loss or perplexity hit
    std::vector<CheckpointRecord> log;
};

// Adam training with checkpoint early stopping. The vocabulary is built from
// the dataset (emitted sources and targets) unless initial parameters are
// supplied, in which case their config and vocab are used as-is. Divergence
// aborts with the best checkpoint so far; before any checkpoint it throws.
TrainResult train(const std::vector<TaggedExample>& dataset,
                  const std::vector<TaggedExample>& dev,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const Seq2SeqParams* initial = nullptr);

// num_replicas independent runs; replica i trains with model seed
// derive_seed(model_config.seed, "replica.<i>") and the shared train seed.
std::vector<TrainResult> train_replicas(const std::vector<TaggedExample>& dataset,
                                        const std::vector<TaggedExample>& dev,
                                        const ModelConfig& model_config,
                                        const TrainConfig& train_config);

// One TSV line per checkpoint: update, train loss, dev perplexity, decision.
std::vector<std::string> format_log(const std::vector<CheckpointRecord>& log);

// Versioned binary container: magic, config echo, update counter, vocabulary,
// then the named tensors. Host-endian doubles.
void save_checkpoint(const std::string& path, const Seq2SeqParams& params,
                     int64_t update);
struct LoadedCheckpoint {
    Seq2SeqParams params;
    int64_t update = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace stylemt
