// Command-line front end. Every pipeline stage is also usable standalone;
// exit codes: 0 success, 1 validation, 2 runtime, 3 missing dependency.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stylemt/assembly.hpp"
#include "stylemt/bpe.hpp"
#include "stylemt/ced_select.hpp"
#include "stylemt/eval_metrics.hpp"
#include "stylemt/humaneval.hpp"
#include "stylemt/ngram_lm.hpp"
#include "stylemt/pipeline.hpp"
#include "stylemt/seq2seq_decode.hpp"
#include "stylemt/seq2seq_train.hpp"
#include "stylemt/util/io.hpp"

namespace {

using namespace stylemt;

// Reads a text file as token sequences: raw text is normalized and tokenized,
// pre-tokenized text splits on whitespace.
std::vector<TokenSeq> load_corpus(const std::string& path, bool tokenized) {
    std::vector<TokenSeq> out;
    auto lines = read_lines(path);
    out.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        if (tokenized) {
            out.push_back(split_ws(lines[i]));
        } else {
            out.push_back(tokenize(normalize(RawLine{lines[i], static_cast<int64_t>(i + 1)})));
        }
    }
    return out;
}

std::vector<std::string> token_lines(const std::vector<TokenSeq>& corpus) {
    std::vector<std::string> lines;
    lines.reserve(corpus.size());
    for (const auto& toks : corpus) lines.push_back(join(toks, " "));
    return lines;
}

std::vector<BitextPair> load_pool(const std::string& src_path, const std::string& tgt_path,
                                  bool tokenized) {
    auto src = load_corpus(src_path, tokenized);
    auto tgt = load_corpus(tgt_path, tokenized);
    if (src.size() != tgt.size())
        throw SelectError("bitext sides differ in line count: " + std::to_string(src.size()) + " vs " +
                          std::to_string(tgt.size()));
    std::vector<BitextPair> pool;
    pool.reserve(src.size());
    for (size_t i = 0; i < src.size(); ++i)
        pool.push_back(BitextPair{src[i], tgt[i], static_cast<int64_t>(i + 1)});
    validate_bitext(pool);
    return dedup_by_target(pool);
}

std::vector<double> load_scores(const std::string& path) {
    std::vector<double> scores;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        size_t used = 0;
        double v = std::stod(line, &used);
        if (used != line.size()) throw EvalError(path + ": not a number: '" + line + "'");
        scores.push_back(v);
    }
    return scores;
}

EvalSet load_eval_set(const std::string& hyp_path, const std::vector<std::string>& ref_paths) {
    EvalSet set;
    set.hypotheses = read_lines(hyp_path);
    set.references.resize(set.hypotheses.size());
    for (const auto& ref_path : ref_paths) {
        auto lines = read_lines(ref_path);
        if (lines.size() != set.hypotheses.size())
            throw EvalError(ref_path + ": reference line count " + std::to_string(lines.size()) +
                            " does not match " + std::to_string(set.hypotheses.size()) + " hypotheses");
        for (size_t i = 0; i < lines.size(); ++i) set.references[i].push_back(lines[i]);
    }
    return set;
}

std::string bleu_summary(const BleuReport& report) {
    std::string s = "BLEU = " + fmt_double(report.bleu, 2) + " ";
    for (int n = 0; n < 4; ++n) s += (n ? "/" : "") + fmt_double(100.0 * report.precisions[n], 1);
    s += " (BP=" + fmt_double(report.brevity_penalty, 3) +
         ", hyp_len=" + std::to_string(report.hyp_len) + ", ref_len=" + std::to_string(report.ref_len) +
         ")";
    return s;
}

struct CommonFlags {
    bool tokenized = false;
};

void add_tokenized_flag(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_flag("--tokenized", flags.tokenized, "Treat input as whitespace-tokenized");
}

int run_cli(CLI::App& app, int argc, char** argv) {
    CommonFlags flags;

    // lm-train
    auto* lm_train = app.add_subcommand("lm-train", "Train an n-gram LM and write it as ARPA");
    struct {
        std::string input, output;
        int order = 3;
        int min_count = 1;
        bool mle = false;
    } lt;
    lm_train->add_option("--input", lt.input, "Training corpus")->required();
    lm_train->add_option("--output", lt.output, "ARPA output path")->required();
    lm_train->add_option("--order", lt.order, "Model order");
    lm_train->add_option("--min-count", lt.min_count, "Rare-token threshold");
    lm_train->add_flag("--mle", lt.mle, "No discounting (zeros for unseen events)");
    add_tokenized_flag(lm_train, flags);
    lm_train->callback([&] {
        NGramModel::Options options{lt.order, lt.min_count, lt.mle};
        auto model = NGramModel::train(load_corpus(lt.input, flags.tokenized), options);
        write_file(lt.output, model.to_arpa());
        std::cout << "wrote " << lt.output << " (order " << lt.order << ")\n";
    });

    // lm-score
    auto* lm_score = app.add_subcommand("lm-score", "Per-line cross-entropy in bits/token");
    struct {
        std::string model, input;
    } ls;
    lm_score->add_option("--model", ls.model, "ARPA model")->required();
    lm_score->add_option("--input", ls.input, "Text to score")->required();
    add_tokenized_flag(lm_score, flags);
    lm_score->callback([&] {
        auto model = NGramModel::from_arpa(read_file(ls.model));
        double bits = 0.0;
        int64_t tokens = 0;
        for (const auto& toks : load_corpus(ls.input, flags.tokenized)) {
            double ce = model.cross_entropy(toks);
            std::cout << fmt_general(ce, 12) << "\n";
            bits += ce * static_cast<double>(toks.size() + 1);
            tokens += static_cast<int64_t>(toks.size()) + 1;
        }
        std::cout << "corpus\t" << fmt_general(bits / static_cast<double>(tokens), 12) << "\n";
    });

    // select
    auto* select = app.add_subcommand("select", "CED-rank or randomly sample bitext pairs");
    struct {
        std::string bitext_src, bitext_tgt, formal_lm, informal_lm, style, output;
        int64_t n = 0;
        uint64_t seed = 0;
    } se;
    select->add_option("--bitext-src", se.bitext_src, "Source side")->required();
    select->add_option("--bitext-tgt", se.bitext_tgt, "English side")->required();
    select->add_option("--formal-lm", se.formal_lm, "Formal ARPA model");
    select->add_option("--informal-lm", se.informal_lm, "Informal ARPA model");
    select->add_option("--style", se.style, "formal, informal, or random")->required();
    select->add_option("-n,--n", se.n, "Pairs to select")->required();
    select->add_option("--seed", se.seed, "Random-style seed");
    select->add_option("--output", se.output, "TSV output (id, src, tgt)")->required();
    add_tokenized_flag(select, flags);
    select->callback([&] {
        auto pool = load_pool(se.bitext_src, se.bitext_tgt, flags.tokenized);
        StyleSample sample;
        if (se.style == "random") {
            sample = random_select(pool, se.n, se.seed);
        } else if (se.style == "formal" || se.style == "informal") {
            if (se.formal_lm.empty() || se.informal_lm.empty())
                throw ConfigError("--formal-lm and --informal-lm are required for CED styles");
            auto formal = NGramModel::from_arpa(read_file(se.formal_lm));
            auto informal = NGramModel::from_arpa(read_file(se.informal_lm));
            sample = ced_rank_select(pool, formal, informal, se.n,
                                     se.style == "formal" ? Style::formal : Style::informal);
        } else {
            throw ConfigError("--style must be formal, informal, or random");
        }
        std::vector<std::string> lines;
        for (const auto& pair : sample.pairs)
            lines.push_back(std::to_string(pair.id) + "\t" + join(pair.src, " ") + "\t" +
                            join(pair.tgt, " "));
        write_lines(se.output, lines);
        std::cout << "selected " << sample.pairs.size() << " of " << pool.size() << " pairs ("
                  << style_name(sample.style) << (sample.truncated ? ", truncated" : "") << ")\n";
    });

    // bpe-learn
    auto* bpe_learn_cmd = app.add_subcommand("bpe-learn", "Learn a BPE merge table");
    struct {
        std::vector<std::string> inputs;
        std::string output, marker = "</w>";
        int64_t merges = 200;
    } bl;
    bpe_learn_cmd->add_option("--input", bl.inputs, "Training corpora")->required();
    bpe_learn_cmd->add_option("--output", bl.output, "Model output path")->required();
    bpe_learn_cmd->add_option("--merges", bl.merges, "Merge operations to learn");
    bpe_learn_cmd->add_option("--marker", bl.marker, "End-of-word marker symbol");
    add_tokenized_flag(bpe_learn_cmd, flags);
    bpe_learn_cmd->callback([&] {
        std::vector<TokenSeq> corpus;
        for (const auto& path : bl.inputs) {
            auto part = load_corpus(path, flags.tokenized);
            corpus.insert(corpus.end(), part.begin(), part.end());
        }
        BpeOptions options;
        options.num_merges = bl.merges;
        options.marker = bl.marker;
        BpeModel model = bpe_learn(corpus, options);
        write_file(bl.output, model.serialize());
        std::cout << "wrote " << bl.output << " (" << model.merges.size() << " merges)\n";
    });

    // bpe-apply
    auto* bpe_apply = app.add_subcommand("bpe-apply", "Segment text with a BPE model (or reverse it)");
    struct {
        std::string model, input, output;
        bool decode = false;
    } ba;
    bpe_apply->add_option("--model", ba.model, "BPE model")->required();
    bpe_apply->add_option("--input", ba.input, "Input text")->required();
    bpe_apply->add_option("--output", ba.output, "Output path")->required();
    bpe_apply->add_flag("--decode", ba.decode, "Join subwords back into words");
    add_tokenized_flag(bpe_apply, flags);
    bpe_apply->callback([&] {
        BpeModel model = BpeModel::deserialize(read_file(ba.model));
        std::vector<TokenSeq> out;
        int64_t dangling = 0;
        for (const auto& toks : load_corpus(ba.input, ba.decode ? true : flags.tokenized)) {
            out.push_back(ba.decode ? bpe_decode(model, toks, &dangling) : bpe_encode(model, toks));
        }
        write_lines(ba.output, token_lines(out));
        std::cout << "wrote " << ba.output << " (" << out.size() << " lines)\n";
        if (dangling > 0) std::cerr << "warning: " << dangling << " unterminated subword runs\n";
    });

    // assemble
    auto* assemble_cmd = app.add_subcommand("assemble", "Build a tagged training set");
    struct {
        std::string ft_informal, ft_formal, bitext_src, bitext_tgt, formal_lm, informal_lm;
        std::string mode = "multitask_tag_style", output;
        int64_t k = 1;
        uint64_t seed = 0;
    } as;
    assemble_cmd->add_option("--ft-informal", as.ft_informal, "FT informal side")->required();
    assemble_cmd->add_option("--ft-formal", as.ft_formal, "FT formal side")->required();
    assemble_cmd->add_option("--bitext-src", as.bitext_src, "Bitext source side");
    assemble_cmd->add_option("--bitext-tgt", as.bitext_tgt, "Bitext English side");
    assemble_cmd->add_option("--formal-lm", as.formal_lm, "Formal ARPA model");
    assemble_cmd->add_option("--informal-lm", as.informal_lm, "Informal ARPA model");
    assemble_cmd->add_option("--mode", as.mode, "Assembly mode");
    assemble_cmd->add_option("-k,--k", as.k, "Bilingual budget multiplier");
    assemble_cmd->add_option("--seed", as.seed, "Shuffle/sample seed");
    assemble_cmd->add_option("--output", as.output, "Training TSV output")->required();
    add_tokenized_flag(assemble_cmd, flags);
    assemble_cmd->callback([&] {
        AssemblyConfig config;
        try {
            config.mode = parse_mode(as.mode);
        } catch (const AssemblyError& e) {
            throw ConfigError(e.what());
        }
        config.k = as.k;
        config.seed = as.seed;
        auto ft = build_bidirectional_ft(load_corpus(as.ft_informal, flags.tokenized),
                                         load_corpus(as.ft_formal, flags.tokenized));
        std::vector<BitextPair> pool;
        if (config.mode != AssemblyMode::ft_only) {
            if (as.bitext_src.empty() || as.bitext_tgt.empty())
                throw ConfigError("--bitext-src and --bitext-tgt are required for this mode");
            pool = load_pool(as.bitext_src, as.bitext_tgt, flags.tokenized);
        }
        std::vector<TaggedExample> examples;
        if (config.mode == AssemblyMode::ft_only || config.mode == AssemblyMode::multitask_random) {
            examples = assemble(config, ft, pool, nullptr, nullptr);
        } else {
            if (as.formal_lm.empty() || as.informal_lm.empty())
                throw ConfigError("--formal-lm and --informal-lm are required for CED modes");
            auto formal = NGramModel::from_arpa(read_file(as.formal_lm));
            auto informal = NGramModel::from_arpa(read_file(as.informal_lm));
            examples = assemble(config, ft, pool, &formal, &informal);
        }
        write_lines(as.output, serialize_examples(examples));
        std::cout << "wrote " << as.output << " (" << examples.size() << " examples)\n";
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "Train seq2seq replicas on a tagged TSV");
    struct {
        std::string train_tsv, dev_tsv, output_dir;
        ModelConfig model;
        TrainConfig config;
    } tr;
    train_cmd->add_option("--train", tr.train_tsv, "Training TSV")->required();
    train_cmd->add_option("--dev", tr.dev_tsv, "Dev TSV")->required();
    train_cmd->add_option("--output-dir", tr.output_dir, "Checkpoint/log directory")->required();
    train_cmd->add_option("--embed-dim", tr.model.embed_dim, "Embedding size");
    train_cmd->add_option("--hidden-dim", tr.model.hidden_dim, "LSTM state size");
    train_cmd->add_option("--attention-dim", tr.model.attention_dim, "Attention layer size");
    train_cmd->add_option("--dropout", tr.model.dropout_p, "Dropout probability");
    train_cmd->add_option("--batch-size", tr.config.batch_size, "Examples per update");
    train_cmd->add_option("--checkpoint-interval", tr.config.checkpoint_interval, "Updates per checkpoint");
    train_cmd->add_option("--patience", tr.config.patience, "Early-stopping patience");
    train_cmd->add_option("--max-updates", tr.config.max_updates, "Update budget");
    train_cmd->add_option("--replicas", tr.config.num_replicas, "Independent runs");
    train_cmd->add_option("--lr", tr.config.adam.lr, "Adam learning rate");
    train_cmd->add_option("--seed", tr.config.seed, "Training seed");
    train_cmd->callback([&] {
        auto dataset = parse_examples(read_lines(tr.train_tsv));
        auto dev = parse_examples(read_lines(tr.dev_tsv));
        tr.model.seed = tr.config.seed;
        std::filesystem::create_directories(tr.output_dir);
        auto results = train_replicas(dataset, dev, tr.model, tr.config);
        for (size_t i = 0; i < results.size(); ++i) {
            const TrainResult& r = results[i];
            std::string id = std::to_string(i + 1);
            save_checkpoint(tr.output_dir + "/model_" + id + ".ckpt", r.params, r.updates_run);
            write_lines(tr.output_dir + "/log_" + id + ".tsv", format_log(r.log));
            std::cout << "replica " << id << ": best dev perplexity "
                      << fmt_general(r.best_perplexity, 6) << " at checkpoint " << r.best_checkpoint
                      << (r.aborted ? " (diverged)" : "") << "\n";
        }
    });

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "Ensemble beam decode");
    struct {
        std::vector<std::string> models;
        std::string input, output, tag, bpe_model;
        DecodeConfig config;
        bool detok = false;
    } de;
    decode_cmd->add_option("--model", de.models, "Checkpoints (ensemble)")->required();
    decode_cmd->add_option("--input", de.input, "Source text")->required();
    decode_cmd->add_option("--output", de.output, "Hypothesis output")->required();
    decode_cmd->add_option("--tag", de.tag, "Style tag to prepend (<F> or <I>)");
    decode_cmd->add_option("--beam", de.config.beam, "Beam width");
    decode_cmd->add_flag("--log-space-ensemble", de.config.log_space_ensemble,
                         "Average log probabilities instead of probabilities");
    decode_cmd->add_option("--bpe", de.bpe_model, "Segment input / join output with this BPE model");
    decode_cmd->add_flag("--detok", de.detok, "Recase and detokenize the output");
    add_tokenized_flag(decode_cmd, flags);
    decode_cmd->callback([&] {
        if (!de.tag.empty() && !is_style_tag(de.tag))
            throw ConfigError("--tag must be <F> or <I>");
        std::vector<Seq2SeqParams> models;
        for (const auto& path : de.models) models.push_back(load_checkpoint(path).params);
        BpeModel bpe;
        if (!de.bpe_model.empty()) bpe = BpeModel::deserialize(read_file(de.bpe_model));
        std::vector<std::string> out;
        for (const auto& toks : load_corpus(de.input, flags.tokenized)) {
            TokenSeq src;
            if (!de.tag.empty()) src.push_back(de.tag);
            TokenSeq enc = de.bpe_model.empty() ? toks : bpe_encode(bpe, toks);
            src.insert(src.end(), enc.begin(), enc.end());
            BeamHyp hyp = decode_sentence(models, src, de.config);
            TokenSeq words;
            for (int32_t id : hyp.tokens) words.push_back(models[0].vocab.token(id));
            if (!de.bpe_model.empty()) words = bpe_decode(bpe, words);
            out.push_back(de.detok ? detokenize(detruecase(words)) : join(words, " "));
        }
        write_lines(de.output, out);
        std::cout << "wrote " << de.output << " (" << out.size() << " lines)\n";
    });

    // bleu
    auto* bleu_cmd = app.add_subcommand("bleu", "Corpus BLEU against one or more references");
    struct {
        std::string hyp;
        std::vector<std::string> refs;
        bool as_json = false;
    } bc;
    bleu_cmd->add_option("--hyp", bc.hyp, "Hypothesis file")->required();
    bleu_cmd->add_option("--ref", bc.refs, "Reference file(s)")->required();
    bleu_cmd->add_flag("--json", bc.as_json, "Machine-readable report");
    bleu_cmd->callback([&] {
        BleuReport report = bleu(load_eval_set(bc.hyp, bc.refs));
        if (bc.as_json) {
            nlohmann::json doc = {{"bleu", report.bleu},
                                  {"precisions", report.precisions},
                                  {"brevity_penalty", report.brevity_penalty},
                                  {"hyp_len", report.hyp_len},
                                  {"ref_len", report.ref_len}};
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << bleu_summary(report) << "\n";
        }
    });

    // bootstrap
    auto* boot_cmd = app.add_subcommand("bootstrap", "Paired bootstrap significance of A vs B");
    struct {
        std::string hyp_a, hyp_b;
        std::vector<std::string> refs;
        int64_t samples = 1000;
        uint64_t seed = 0;
    } bo;
    boot_cmd->add_option("--hyp-a", bo.hyp_a, "System A hypotheses")->required();
    boot_cmd->add_option("--hyp-b", bo.hyp_b, "System B hypotheses")->required();
    boot_cmd->add_option("--ref", bo.refs, "Reference file(s)")->required();
    boot_cmd->add_option("--samples", bo.samples, "Bootstrap resamples");
    boot_cmd->add_option("--seed", bo.seed, "Resampling seed");
    boot_cmd->callback([&] {
        auto set_a = load_eval_set(bo.hyp_a, bo.refs);
        auto set_b = load_eval_set(bo.hyp_b, bo.refs);
        if (set_a.hypotheses.size() != set_b.hypotheses.size())
            throw EvalError("hypothesis files differ in line count");
        double p_ab = bootstrap(set_a.hypotheses, set_b.hypotheses, set_a.references, bo.samples, bo.seed);
        double p_ba = bootstrap(set_b.hypotheses, set_a.hypotheses, set_a.references, bo.samples, bo.seed);
        std::cout << "BLEU A = " << fmt_double(bleu(set_a).bleu, 2)
                  << ", BLEU B = " << fmt_double(bleu(set_b).bleu, 2) << "\n";
        std::cout << "p(A not better than B) = " << fmt_general(p_ab, 6) << "\n";
        std::cout << "p(B not better than A) = " << fmt_general(p_ba, 6) << "\n";
    });

    // ttest
    auto* ttest_cmd = app.add_subcommand("ttest", "Two-sided paired t-test on score files");
    struct {
        std::string scores_a, scores_b;
    } tt;
    ttest_cmd->add_option("--scores-a", tt.scores_a, "Scores, one per line")->required();
    ttest_cmd->add_option("--scores-b", tt.scores_b, "Paired scores")->required();
    ttest_cmd->callback([&] {
        TTestResult result = paired_ttest(load_scores(tt.scores_a), load_scores(tt.scores_b));
        std::cout << "t = " << fmt_general(result.t, 6) << ", df = " << result.df
                  << ", p = " << fmt_general(result.p_value, 6)
                  << (result.degenerate ? " (degenerate)" : "") << "\n";
    });

    // humaneval-aggregate
    auto* human_cmd = app.add_subcommand("humaneval-aggregate", "Trust-weighted judgment aggregation");
    struct {
        std::string input, output;
        double trust_floor = kDefaultTrustFloor;
    } hu;
    human_cmd->add_option("--input", hu.input, "Judgment TSV")->required();
    human_cmd->add_option("--output", hu.output, "Aggregate TSV (stdout when omitted)");
    human_cmd->add_option("--trust-floor", hu.trust_floor, "Drop judgments at or below this trust");
    human_cmd->callback([&] {
        auto aggregates = aggregate_all(parse_judgments(read_lines(hu.input)), hu.trust_floor);
        auto lines = format_aggregates(aggregates);
        if (hu.output.empty()) {
            for (const auto& line : lines) std::cout << line << "\n";
        } else {
            write_lines(hu.output, lines);
            std::cout << "wrote " << hu.output << " (" << lines.size() << " aggregates)\n";
        }
    });

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the end-to-end pipeline from a config");
    struct {
        std::string config_path;
        std::vector<std::string> stages;
        bool validate_only = false;
        // overrides; CLI11 marks presence via count()
        uint64_t seed = 0;
        std::string output_dir, mode, tag;
        int64_t k = 0, merges = 0, beam = 0, replicas = 0, max_updates = 0, batch_size = 0;
        int order = 0;
        double lr = 0.0, dropout = 0.0;
    } pi;
    pipe_cmd->add_option("--config", pi.config_path, "JSON config")->required();
    pipe_cmd->add_option("--stages", pi.stages, "Subset of stages to run")->delimiter(',');
    pipe_cmd->add_flag("--validate-only", pi.validate_only, "Check the config and stop");
    auto* o_seed = pipe_cmd->add_option("--seed", pi.seed, "Override the global seed");
    auto* o_out = pipe_cmd->add_option("--output-dir", pi.output_dir, "Override the output directory");
    auto* o_mode = pipe_cmd->add_option("--mode", pi.mode, "Override the assembly mode");
    auto* o_k = pipe_cmd->add_option("--k", pi.k, "Override the bilingual budget multiplier");
    auto* o_merges = pipe_cmd->add_option("--bpe-merges", pi.merges, "Override BPE merges");
    auto* o_order = pipe_cmd->add_option("--lm-order", pi.order, "Override the LM order");
    auto* o_tag = pipe_cmd->add_option("--tag", pi.tag, "Override the decode tag");
    auto* o_beam = pipe_cmd->add_option("--beam", pi.beam, "Override the decode beam");
    auto* o_repl = pipe_cmd->add_option("--replicas", pi.replicas, "Override the replica count");
    auto* o_maxu = pipe_cmd->add_option("--max-updates", pi.max_updates, "Override the update budget");
    auto* o_batch = pipe_cmd->add_option("--batch-size", pi.batch_size, "Override the batch size");
    auto* o_lr = pipe_cmd->add_option("--lr", pi.lr, "Override the learning rate");
    auto* o_drop = pipe_cmd->add_option("--dropout", pi.dropout, "Override the dropout probability");
    pipe_cmd->callback([&] {
        PipelineConfig config = load_config(pi.config_path);
        if (o_seed->count()) config.seed = pi.seed;
        if (o_out->count()) config.output_dir = pi.output_dir;
        if (o_mode->count()) {
            try {
                config.mode = parse_mode(pi.mode);
            } catch (const AssemblyError& e) {
                throw ConfigError(e.what());
            }
        }
        if (o_k->count()) config.k = pi.k;
        if (o_merges->count()) config.bpe_merges = pi.merges;
        if (o_order->count()) config.lm_order = pi.order;
        if (o_tag->count()) config.decode_tag = pi.tag;
        if (o_beam->count()) config.decode_beam = pi.beam;
        if (o_repl->count()) config.train.num_replicas = pi.replicas;
        if (o_maxu->count()) config.train.max_updates = pi.max_updates;
        if (o_batch->count()) config.train.batch_size = pi.batch_size;
        if (o_lr->count()) config.train.adam.lr = pi.lr;
        if (o_drop->count()) config.model.dropout_p = pi.dropout;
        config.echo = nlohmann::json();  // rebuilt from the effective values

        if (pi.validate_only) {
            auto problems = validate_config(config);
            if (problems.empty()) {
                std::cout << "config ok\n";
                return;
            }
            std::string message = "invalid config:";
            for (const auto& p : problems) message += "\n  - " + p;
            throw ConfigError(message);
        }

        std::vector<Stage> stages;
        for (const auto& name : pi.stages) stages.push_back(parse_stage(name));
        RunReport report = run_pipeline(config, stages);
        for (const auto& s : report.stages) {
            if (!s.requested) continue;
            std::cout << s.name << ": "
                      << (s.executed ? "ran in " + fmt_double(s.seconds, 2) + "s" : "up to date") << "\n";
        }
        std::cout << "manifest: " << config.output_dir << "/manifest.json\n";
    });

    app.require_subcommand(1);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // flag/usage problems are validation errors
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Formality-transfer corpus pipeline and testbed"};
    app.set_version_flag("--version", stylemt::kToolVersion);
    try {
        return run_cli(app, argc, argv);
    } catch (const stylemt::DependencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const stylemt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
