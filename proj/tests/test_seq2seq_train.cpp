#include "stylemt/seq2seq_train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

using namespace stylemt;

namespace {

TaggedExample ex(std::string tag, TokenSeq src, TokenSeq tgt) {
    TaggedExample e;
    e.tag = std::move(tag);
    e.src = std::move(src);
    e.tgt = std::move(tgt);
    e.task = e.tag.empty() ? Task::mt : Task::ft;
    return e;
}

// Copy task: target repeats the source token sequence.
std::vector<TaggedExample> copy_corpus(int64_t count, int64_t vocab, uint64_t seed) {
    std::vector<std::string> words;
    for (int64_t i = 0; i < vocab; ++i) words.push_back("w" + std::to_string(i));
    Rng rng(seed);
    std::vector<TaggedExample> out;
    for (int64_t i = 0; i < count; ++i) {
        int64_t len = 2 + static_cast<int64_t>(rng.below(4));  // 2..5 tokens
        TokenSeq sentence;
        for (int64_t j = 0; j < len; ++j)
            sentence.push_back(words[rng.below(static_cast<uint64_t>(words.size()))]);
        out.push_back(ex("", sentence, sentence));
    }
    return out;
}

bool same_tensors(const Seq2SeqParams& a, const Seq2SeqParams& b) {
    auto na = a.named();
    auto nb = b.named();
    for (size_t i = 0; i < na.size(); ++i) {
        if (na[i].second->rows() != nb[i].second->rows()) return false;
        if (na[i].second->cols() != nb[i].second->cols()) return false;
        if (*na[i].second != *nb[i].second) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("early stopper follows the hand-worked stream") {
    // perplexities 5,4,4,4,4,4,4,4,4,4 with patience 8: the eight flat
    // checkpoints 3..10 exhaust the patience, best stays at checkpoint 2
    EarlyStopper stopper(8);
    std::vector<double> stream = {5, 4, 4, 4, 4, 4, 4, 4, 4, 4};
    int64_t stopped_at = 0;
    for (size_t i = 0; i < stream.size(); ++i) {
        stopper.feed(stream[i]);
        if (stopper.should_stop()) {
            stopped_at = static_cast<int64_t>(i) + 1;
            break;
        }
    }
    CHECK(stopped_at == 10);
    CHECK(stopper.best_index() == 2);
    CHECK(stopper.best_value() == 4.0);
}

TEST_CASE("early stopper resets on improvement and needs strict decrease") {
    EarlyStopper stopper(2);
    CHECK(stopper.feed(5.0));
    CHECK_FALSE(stopper.feed(5.0));  // equal is not an improvement
    CHECK_FALSE(stopper.should_stop());
    CHECK(stopper.feed(4.0));
    CHECK_FALSE(stopper.should_stop());
    CHECK_FALSE(stopper.feed(4.5));
    CHECK_FALSE(stopper.feed(4.2));
    CHECK(stopper.should_stop());
    CHECK(stopper.best_index() == 3);

    CHECK_THROWS_AS(EarlyStopper(0), ModelError);
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(validate_train_config(c));
    TrainConfig bad = c;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate_train_config(bad), ModelError);
    bad = c;
    bad.patience = 0;
    CHECK_THROWS_AS(validate_train_config(bad), ModelError);
    bad = c;
    bad.checkpoint_interval = 0;
    CHECK_THROWS_AS(validate_train_config(bad), ModelError);
    bad = c;
    bad.adam.lr = 0.0;
    CHECK_THROWS_AS(validate_train_config(bad), ModelError);
}

TEST_CASE("copy task trains to low perplexity and is reproducible") {
    auto data = copy_corpus(500, 20, 99);
    std::vector<TaggedExample> dev(data.begin(), data.begin() + 50);
    std::vector<TaggedExample> trainset(data.begin() + 50, data.end());

    ModelConfig mc;
    mc.embed_dim = 32;
    mc.hidden_dim = 32;
    mc.attention_dim = 32;
    mc.dropout_p = 0.1;
    mc.seed = 5;

    TrainConfig tc;
    tc.batch_size = 32;
    tc.checkpoint_interval = 100;
    tc.patience = 8;
    tc.max_updates = 800;
    tc.seed = 5;

    TrainResult result = train(trainset, dev, mc, tc);
    CHECK_FALSE(result.aborted);
    CHECK(result.best_perplexity < 1.5);
    CHECK(result.best_checkpoint >= 1);
    CHECK(!result.log.empty());

    // the retained checkpoint has the lowest perplexity in the log
    double min_ppl = result.log.front().dev_perplexity;
    for (const auto& r : result.log) min_ppl = std::min(min_ppl, r.dev_perplexity);
    CHECK(result.best_perplexity == min_ppl);
    CHECK(perplexity(result.params, dev, tc.batch_size) ==
          doctest::Approx(result.best_perplexity).epsilon(1e-12));

    // same seeds, bit-identical outcome
    TrainResult again = train(trainset, dev, mc, tc);
    CHECK(same_tensors(result.params, again.params));
    CHECK(format_log(result.log) == format_log(again.log));

    // the training log carries one record per checkpoint with a decision
    for (const auto& line : format_log(result.log))
        CHECK(std::count(line.begin(), line.end(), '\t') == 3);
}

TEST_CASE("a final partial interval still gets a checkpoint") {
    auto data = copy_corpus(40, 6, 3);
    std::vector<TaggedExample> dev(data.begin(), data.begin() + 8);
    std::vector<TaggedExample> trainset(data.begin() + 8, data.end());

    ModelConfig mc;
    mc.embed_dim = 8;
    mc.hidden_dim = 8;
    mc.attention_dim = 8;
    mc.seed = 1;
    TrainConfig tc;
    tc.batch_size = 16;
    tc.checkpoint_interval = 100;  // never reached
    tc.max_updates = 7;
    tc.seed = 1;

    TrainResult result = train(trainset, dev, mc, tc);
    CHECK(result.updates_run == 7);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log[0].update == 7);
    CHECK(result.best_checkpoint == 1);
}

TEST_CASE("divergence aborts with the best checkpoint so far") {
    auto data = copy_corpus(60, 8, 17);
    std::vector<TaggedExample> dev(data.begin(), data.begin() + 10);
    std::vector<TaggedExample> trainset(data.begin() + 10, data.end());

    ModelConfig mc;
    mc.embed_dim = 8;
    mc.hidden_dim = 8;
    mc.attention_dim = 8;
    mc.dropout_p = 0.0;
    mc.seed = 2;
    TrainConfig tc;
    tc.batch_size = 16;
    tc.checkpoint_interval = 2;
    tc.patience = 50;
    tc.max_updates = 400;
    tc.adam.lr = 5.0;  // blows the parameters up within a few dozen updates
    tc.seed = 2;

    TrainResult result = train(trainset, dev, mc, tc);
    CHECK(result.aborted);
    CHECK(result.log.back().decision == "abort");
    CHECK(result.best_checkpoint >= 1);
    CHECK(std::isfinite(result.best_perplexity));
    // retained parameters predate the divergence
    CHECK(std::isfinite(perplexity(result.params, dev, tc.batch_size)));
}

TEST_CASE("divergence before any checkpoint throws") {
    auto data = copy_corpus(30, 8, 21);
    std::vector<TaggedExample> dev(data.begin(), data.begin() + 5);
    std::vector<TaggedExample> trainset(data.begin() + 5, data.end());

    ModelConfig mc;
    mc.embed_dim = 8;
    mc.hidden_dim = 8;
    mc.attention_dim = 8;
    mc.dropout_p = 0.0;
    mc.seed = 2;

    // a huge output bias on an unused token zeroes every target probability
    std::vector<TokenSeq> corpus;
    for (const auto& e : trainset) {
        corpus.push_back(emitted_src(e));
        corpus.push_back(e.tgt);
    }
    corpus.push_back({"never-a-target"});
    SeqVocab full = SeqVocab::build(corpus);
    Seq2SeqParams initial = init_params(mc, full);
    initial.b_vocab(full.id("never-a-target"), 0) = 1e4;

    TrainConfig tc;
    tc.batch_size = 16;
    tc.checkpoint_interval = 10;
    tc.seed = 2;
    CHECK_THROWS_AS(train(trainset, dev, mc, tc, &initial), ModelError);
}

TEST_CASE("train rejects empty dataset or dev") {
    ModelConfig mc;
    TrainConfig tc;
    auto data = copy_corpus(4, 4, 1);
    CHECK_THROWS_AS(train({}, data, mc, tc), ModelError);
    CHECK_THROWS_AS(train(data, {}, mc, tc), ModelError);
}

TEST_CASE("replicas differ from each other and reproduce") {
    auto data = copy_corpus(60, 8, 31);
    std::vector<TaggedExample> dev(data.begin(), data.begin() + 10);
    std::vector<TaggedExample> trainset(data.begin() + 10, data.end());

    ModelConfig mc;
    mc.embed_dim = 8;
    mc.hidden_dim = 8;
    mc.attention_dim = 8;
    mc.seed = 4;
    TrainConfig tc;
    tc.batch_size = 25;
    tc.checkpoint_interval = 4;
    tc.max_updates = 8;
    tc.num_replicas = 3;
    tc.seed = 4;

    auto replicas = train_replicas(trainset, dev, mc, tc);
    REQUIRE(replicas.size() == 3);
    CHECK_FALSE(same_tensors(replicas[0].params, replicas[1].params));
    CHECK_FALSE(same_tensors(replicas[1].params, replicas[2].params));

    auto again = train_replicas(trainset, dev, mc, tc);
    for (size_t i = 0; i < replicas.size(); ++i)
        CHECK(same_tensors(replicas[i].params, again[i].params));
}

TEST_CASE("checkpoint files round-trip exactly") {
    SeqVocab vocab = SeqVocab::build({{"alpha", "beta", "<F>"}});
    ModelConfig mc;
    mc.embed_dim = 6;
    mc.hidden_dim = 5;
    mc.attention_dim = 4;
    mc.dropout_p = 0.15;
    mc.seed = 77;
    Seq2SeqParams params = init_params(mc, vocab);

    const std::string path = "checkpoint_roundtrip.bin";
    save_checkpoint(path, params, 1234);
    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.update == 1234);
    CHECK(loaded.params.config.embed_dim == 6);
    CHECK(loaded.params.config.hidden_dim == 5);
    CHECK(loaded.params.config.attention_dim == 4);
    CHECK(loaded.params.config.dropout_p == 0.15);
    CHECK(loaded.params.config.seed == 77);
    CHECK(loaded.params.vocab.tokens() == vocab.tokens());
    CHECK(same_tensors(params, loaded.params));
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint.bin"), ModelError);

    const std::string junk = "checkpoint_junk.bin";
    write_file(junk, "not a checkpoint at all");
    CHECK_THROWS_AS(load_checkpoint(junk), ModelError);
    std::remove(junk.c_str());
}
