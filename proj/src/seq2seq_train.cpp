#include "stylemt/seq2seq_train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

namespace stylemt {

void validate_train_config(const TrainConfig& config) {
    if (config.batch_size < 1) throw ModelError("batch_size must be >= 1");
    if (config.checkpoint_interval < 1) throw ModelError("checkpoint_interval must be >= 1");
    if (config.patience < 1) throw ModelError("patience must be >= 1");
    if (config.max_updates < 1) throw ModelError("max_updates must be >= 1");
    if (config.beam < 1) throw ModelError("beam must be >= 1");
    if (config.num_replicas < 1) throw ModelError("num_replicas must be >= 1");
    if (!(config.adam.lr > 0.0)) throw ModelError("adam lr must be > 0");
}

EarlyStopper::EarlyStopper(int64_t patience) : patience_(patience) {
    if (patience < 1) throw ModelError("patience must be >= 1");
}

bool EarlyStopper::feed(double perplexity) {
    ++count_;
    if (best_index_ == 0 || perplexity < best_value_) {
        best_index_ = count_;
        best_value_ = perplexity;
        bad_streak_ = 0;
        return true;
    }
    ++bad_streak_;
    return false;
}

namespace {

void adam_step(Seq2SeqParams& params, const Seq2SeqParams& grads, Seq2SeqParams& m,
               Seq2SeqParams& v, const AdamConfig& adam, int64_t t) {
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(t));
    auto np = params.named();
    auto ng = grads.named();
    auto nm = m.named();
    auto nv = v.named();
    for (size_t i = 0; i < np.size(); ++i) {
        Eigen::MatrixXd& theta = *np[i].second;
        const Eigen::MatrixXd& g = *ng[i].second;
        Eigen::MatrixXd& mi = *nm[i].second;
        Eigen::MatrixXd& vi = *nv[i].second;
        mi = adam.beta1 * mi + (1.0 - adam.beta1) * g;
        vi = adam.beta2 * vi.array().matrix() + (1.0 - adam.beta2) * g.array().square().matrix();
        theta.array() -=
            adam.lr * (mi.array() / bc1) / ((vi.array() / bc2).sqrt() + adam.eps);
    }
}

SeqVocab vocab_from_dataset(const std::vector<TaggedExample>& dataset) {
    std::vector<TokenSeq> corpus;
    corpus.reserve(dataset.size() * 2);
    for (const auto& example : dataset) {
        corpus.push_back(emitted_src(example));
        corpus.push_back(example.tgt);
    }
    return SeqVocab::build(corpus);
}

}  // namespace

TrainResult train(const std::vector<TaggedExample>& dataset,
                  const std::vector<TaggedExample>& dev,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const Seq2SeqParams* initial) {
    validate_train_config(train_config);
    if (dataset.empty()) throw ModelError("empty training set");
    if (dev.empty()) throw ModelError("empty dev set");

    Seq2SeqParams params =
        initial != nullptr ? *initial : init_params(model_config, vocab_from_dataset(dataset));
    Seq2SeqParams m = zeros_like(params);
    Seq2SeqParams v = zeros_like(params);
    Seq2SeqParams best = params;

    EarlyStopper stopper(train_config.patience);
    TrainResult result;
    const uint64_t seed = train_config.seed;

    double loss_sum = 0.0;
    int64_t loss_count = 0;
    int64_t update = 0;
    bool done = false;

    auto take_checkpoint = [&]() -> bool {  // returns whether to keep training
        double ppl = perplexity(params, dev, train_config.batch_size);
        CheckpointRecord record;
        record.update = update;
        record.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        record.dev_perplexity = ppl;
        loss_sum = 0.0;
        loss_count = 0;
        if (!std::isfinite(ppl)) {
            record.decision = "abort";
            result.log.push_back(record);
            result.aborted = true;
            return false;
        }
        bool improved = stopper.feed(ppl);
        if (improved) best = params;
        record.decision = stopper.should_stop() ? "stop" : (improved ? "improved" : "no-improvement");
        result.log.push_back(record);
        return !stopper.should_stop();
    };

    for (int64_t epoch = 0; !done; ++epoch) {
        std::vector<size_t> order(dataset.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(seed, "train.epoch." + std::to_string(epoch)));
        shuffle_rng.shuffle(order);

        for (size_t at = 0; at < order.size() && !done;
             at += static_cast<size_t>(train_config.batch_size)) {
            size_t end = std::min(order.size(), at + static_cast<size_t>(train_config.batch_size));
            std::vector<TaggedExample> batch;
            batch.reserve(end - at);
            for (size_t i = at; i < end; ++i) batch.push_back(dataset[order[i]]);

            Seq2SeqParams grads = zeros_like(params);
            uint64_t dropout_seed = derive_seed(seed, "train.update." + std::to_string(update));
            ForwardResult r = forward_loss(params, batch, true, dropout_seed, &grads);
            if (!std::isfinite(r.loss)) {
                result.aborted = true;
                CheckpointRecord record;
                record.update = update;
                record.train_loss =
                    loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
                record.dev_perplexity = std::numeric_limits<double>::quiet_NaN();
                record.decision = "abort";
                result.log.push_back(record);
                done = true;
                break;
            }
            ++update;
            adam_step(params, grads, m, v, train_config.adam, update);
            loss_sum += r.loss;
            ++loss_count;

            if (update % train_config.checkpoint_interval == 0 && !take_checkpoint()) done = true;
            if (!done && update >= train_config.max_updates) {
                if (update % train_config.checkpoint_interval != 0) take_checkpoint();
                done = true;
            }
        }
    }

    if (stopper.count() == 0)
        throw ModelError("training diverged before the first checkpoint");
    result.params = best;
    result.best_checkpoint = stopper.best_index();
    result.best_perplexity = stopper.best_value();
    result.updates_run = update;
    return result;
}

std::vector<TrainResult> train_replicas(const std::vector<TaggedExample>& dataset,
                                        const std::vector<TaggedExample>& dev,
                                        const ModelConfig& model_config,
                                        const TrainConfig& train_config) {
    validate_train_config(train_config);
    std::vector<TrainResult> results;
    for (int64_t i = 0; i < train_config.num_replicas; ++i) {
        ModelConfig replica = model_config;
        replica.seed = derive_seed(model_config.seed, "replica." + std::to_string(i));
        TrainConfig tc = train_config;
        tc.seed = derive_seed(train_config.seed, "replica." + std::to_string(i));
        results.push_back(train(dataset, dev, replica, tc));
    }
    return results;
}

std::vector<std::string> format_log(const std::vector<CheckpointRecord>& log) {
    std::vector<std::string> lines;
    lines.reserve(log.size());
    for (const auto& r : log) {
        lines.push_back(std::to_string(r.update) + "\t" + fmt_general(r.train_loss, 12) + "\t" +
                        fmt_general(r.dev_perplexity, 12) + "\t" + r.decision);
    }
    return lines;
}

namespace {

constexpr char kMagic[4] = {'S', '2', 'S', '1'};

void write_i64(std::ostream& out, int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_str(std::ostream& out, const std::string& s) {
    write_i64(out, static_cast<int64_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

int64_t read_i64(std::istream& in) {
    int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ModelError("truncated checkpoint");
    return v;
}
uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ModelError("truncated checkpoint");
    return v;
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ModelError("truncated checkpoint");
    return v;
}
std::string read_str(std::istream& in) {
    int64_t n = read_i64(in);
    if (n < 0 || n > (1 << 20)) throw ModelError("corrupt checkpoint string length");
    std::string s(static_cast<size_t>(n), '\0');
    in.read(s.data(), n);
    if (!in) throw ModelError("truncated checkpoint");
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Seq2SeqParams& params, int64_t update) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    write_i64(out, params.config.embed_dim);
    write_i64(out, params.config.hidden_dim);
    write_i64(out, params.config.attention_dim);
    write_f64(out, params.config.dropout_p);
    write_u64(out, params.config.seed);
    write_i64(out, update);

    const auto& tokens = params.vocab.tokens();
    write_i64(out, static_cast<int64_t>(tokens.size()));
    for (const auto& t : tokens) write_str(out, t);

    auto named = params.named();
    write_i64(out, static_cast<int64_t>(named.size()));
    for (const auto& [name, tensor] : named) {
        write_str(out, name);
        write_i64(out, tensor->rows());
        write_i64(out, tensor->cols());
        out.write(reinterpret_cast<const char*>(tensor->data()),
                  static_cast<std::streamsize>(sizeof(double)) * tensor->size());
    }
    if (!out) throw ModelError("write failed for checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot read checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ModelError("not a checkpoint file: " + path);

    ModelConfig config;
    config.embed_dim = read_i64(in);
    config.hidden_dim = read_i64(in);
    config.attention_dim = read_i64(in);
    config.dropout_p = read_f64(in);
    config.seed = read_u64(in);
    int64_t update = read_i64(in);

    int64_t vocab_size = read_i64(in);
    if (vocab_size < 4) throw ModelError("corrupt checkpoint vocabulary");
    std::vector<std::string> tokens;
    tokens.reserve(static_cast<size_t>(vocab_size));
    for (int64_t i = 0; i < vocab_size; ++i) tokens.push_back(read_str(in));
    // reserved ids first, remaining tokens stored sorted; rebuilding from the
    // tail reproduces identical ids
    SeqVocab vocab = SeqVocab::build(
        {TokenSeq(tokens.begin() + 4, tokens.end())});
    if (vocab.size() != vocab_size) throw ModelError("corrupt checkpoint vocabulary");

    LoadedCheckpoint loaded;
    loaded.params = init_params(config, vocab);
    loaded.update = update;

    int64_t tensor_count = read_i64(in);
    auto named = loaded.params.named();
    if (tensor_count != static_cast<int64_t>(named.size()))
        throw ModelError("checkpoint tensor count mismatch");
    for (auto& [name, tensor] : named) {
        if (read_str(in) != name) throw ModelError("checkpoint tensor order mismatch");
        int64_t rows = read_i64(in);
        int64_t cols = read_i64(in);
        if (rows != tensor->rows() || cols != tensor->cols())
            throw ModelError("checkpoint tensor shape mismatch for " + name);
        in.read(reinterpret_cast<char*>(tensor->data()),
                static_cast<std::streamsize>(sizeof(double)) * tensor->size());
        if (!in) throw ModelError("truncated checkpoint");
    }
    return loaded;
}

}  // namespace stylemt
