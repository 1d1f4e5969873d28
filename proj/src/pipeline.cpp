#include "stylemt/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <set>

#include "stylemt/bpe.hpp"
#include "stylemt/ngram_lm.hpp"
#include "stylemt/seq2seq_decode.hpp"
#include "stylemt/eval_metrics.hpp"
#include "stylemt/util/digest.hpp"
#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

namespace stylemt {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Strict object reader: every key must be consumed, so typos fail loudly.
class JsonReader {
  public:
    JsonReader(const json& node, std::string where) : node_(node), where_(std::move(where)) {
        if (!node_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return node_.at(key);
    }

    JsonReader object(const std::string& key) { return JsonReader(raw(key), where_ + "." + key); }

    std::string str(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    std::string str_or(const std::string& key, const std::string& fallback) {
        return has(key) ? str(key) : fallback;
    }

    int64_t i64(const std::string& key, int64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        return v.get<int64_t>();
    }

    uint64_t u64(const std::string& key, uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<int64_t>() >= 0);
        if (!ok) throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
        return v.get<uint64_t>();
    }

    double dbl(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected a boolean");
        return v.get<bool>();
    }

    void done() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key()))
                throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
        }
    }

  private:
    const json& node_;
    std::string where_;
    std::set<std::string> seen_;
};

// External paths become absolute so they never collide with the
// output_dir-relative artifact keys inside stage records.
std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty()) return path;
    fs::path p(path);
    if (!p.is_absolute()) p = fs::absolute(fs::path(base_dir) / p);
    return p.lexically_normal().string();
}

bool uses_ced(AssemblyMode mode) {
    return mode == AssemblyMode::constraint_only || mode == AssemblyMode::multitask_tag_style ||
           mode == AssemblyMode::multitask_style;
}

struct CorpusSlot {
    const char* key;
    std::string PipelineConfig::*field;
};

// Declaration order fixes the echo layout and the preprocess output order.
constexpr std::array<CorpusSlot, 10> kCorpora = {{
    {"formal", &PipelineConfig::formal_corpus},
    {"informal", &PipelineConfig::informal_corpus},
    {"bitext_src", &PipelineConfig::bitext_src},
    {"bitext_tgt", &PipelineConfig::bitext_tgt},
    {"ft_informal", &PipelineConfig::ft_informal},
    {"ft_formal", &PipelineConfig::ft_formal},
    {"dev_informal", &PipelineConfig::dev_informal},
    {"dev_formal", &PipelineConfig::dev_formal},
    {"test_informal", &PipelineConfig::test_informal},
    {"test_formal", &PipelineConfig::test_formal},
}};

json build_echo(const PipelineConfig& c) {
    json corpora = json::object();
    for (const auto& slot : kCorpora) corpora[slot.key] = c.*(slot.field);
    return json{
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"corpora", corpora},
        {"lm", {{"order", c.lm_order}}},
        {"bpe", {{"merges", c.bpe_merges}, {"marker", c.bpe_marker}}},
        {"assembly", {{"mode", mode_name(c.mode)}, {"k", c.k}}},
        {"model",
         {{"embed_dim", c.model.embed_dim},
          {"hidden_dim", c.model.hidden_dim},
          {"attention_dim", c.model.attention_dim},
          {"dropout", c.model.dropout_p}}},
        {"train",
         {{"batch_size", c.train.batch_size},
          {"checkpoint_interval", c.train.checkpoint_interval},
          {"patience", c.train.patience},
          {"max_updates", c.train.max_updates},
          {"replicas", c.train.num_replicas},
          {"lr", c.train.adam.lr}}},
        {"decode",
         {{"tag", c.decode_tag}, {"beam", c.decode_beam}, {"log_space_ensemble", c.log_space_ensemble}}},
    };
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

PipelineConfig config_from_json(const json& doc, const std::string& base_dir) {
    JsonReader top(doc, "config");
    PipelineConfig c;
    c.seed = top.u64("seed", 0);
    c.output_dir = resolve_path(top.str("output_dir"), base_dir);

    JsonReader corpora = top.object("corpora");
    for (const auto& slot : kCorpora) c.*(slot.field) = resolve_path(corpora.str(slot.key), base_dir);
    corpora.done();

    if (top.has("lm")) {
        JsonReader lm = top.object("lm");
        c.lm_order = static_cast<int>(lm.i64("order", c.lm_order));
        lm.done();
    }
    if (top.has("bpe")) {
        JsonReader bpe = top.object("bpe");
        c.bpe_merges = bpe.i64("merges", c.bpe_merges);
        c.bpe_marker = bpe.str_or("marker", c.bpe_marker);
        bpe.done();
    }
    if (top.has("assembly")) {
        JsonReader assembly = top.object("assembly");
        std::string mode = assembly.str_or("mode", mode_name(c.mode));
        try {
            c.mode = parse_mode(mode);
        } catch (const AssemblyError& e) {
            throw ConfigError(std::string("config.assembly.mode: ") + e.what());
        }
        c.k = assembly.i64("k", c.k);
        assembly.done();
    }
    if (top.has("model")) {
        JsonReader model = top.object("model");
        c.model.embed_dim = model.i64("embed_dim", c.model.embed_dim);
        c.model.hidden_dim = model.i64("hidden_dim", c.model.hidden_dim);
        c.model.attention_dim = model.i64("attention_dim", c.model.attention_dim);
        c.model.dropout_p = model.dbl("dropout", c.model.dropout_p);
        model.done();
    }
    if (top.has("train")) {
        JsonReader train = top.object("train");
        c.train.batch_size = train.i64("batch_size", c.train.batch_size);
        c.train.checkpoint_interval = train.i64("checkpoint_interval", c.train.checkpoint_interval);
        c.train.patience = train.i64("patience", c.train.patience);
        c.train.max_updates = train.i64("max_updates", c.train.max_updates);
        c.train.num_replicas = train.i64("replicas", c.train.num_replicas);
        c.train.adam.lr = train.dbl("lr", c.train.adam.lr);
        train.done();
    }
    if (top.has("decode")) {
        JsonReader decode = top.object("decode");
        c.decode_tag = decode.str_or("tag", c.decode_tag);
        c.decode_beam = decode.i64("beam", c.decode_beam);
        c.log_space_ensemble = decode.boolean("log_space_ensemble", c.log_space_ensemble);
        decode.done();
    }
    top.done();

    c.echo = build_echo(c);
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    std::string base = fs::path(path).parent_path().string();
    if (base.empty()) base = ".";
    return config_from_json(doc, base);
}

std::vector<std::string> validate_config(const PipelineConfig& config) {
    std::vector<std::string> problems;
    auto add = [&](const std::string& p) { problems.push_back(p); };

    if (config.output_dir.empty()) add("output_dir must not be empty");
    for (const auto& slot : kCorpora) {
        const std::string& path = config.*(slot.field);
        if (path.empty()) {
            add(std::string("corpora.") + slot.key + " must not be empty");
        } else if (!fs::is_regular_file(path)) {
            add(std::string("corpora.") + slot.key + ": no such file: " + path);
        }
    }
    if (config.lm_order < 1) add("lm.order must be >= 1");
    if (config.bpe_merges < 0) add("bpe.merges must be >= 0");
    if (config.bpe_marker.empty()) add("bpe.marker must not be empty");

    if (config.mode != AssemblyMode::ft_only && config.k < 1)
        add("assembly.k must be >= 1: the bilingual budget is k times the FT set size");

    // BPE ingests the FT and bitext corpora; a marker collision there would
    // make segmentation ambiguous.
    for (const char* key : {"ft_informal", "ft_formal", "bitext_src", "bitext_tgt"}) {
        for (const auto& slot : kCorpora) {
            if (std::string(slot.key) != key) continue;
            const std::string& path = config.*(slot.field);
            if (path.empty() || !fs::is_regular_file(path)) continue;
            if (read_file(path).find(config.bpe_marker) != std::string::npos)
                add(std::string("corpora.") + key + " contains the BPE marker '" + config.bpe_marker +
                    "'; pick a marker absent from the data");
        }
    }

    if (config.model.embed_dim < 1) add("model.embed_dim must be >= 1");
    if (config.model.hidden_dim < 1) add("model.hidden_dim must be >= 1");
    if (config.model.attention_dim < 1) add("model.attention_dim must be >= 1");
    if (!(config.model.dropout_p >= 0.0 && config.model.dropout_p < 1.0))
        add("model.dropout must lie in [0, 1)");

    if (config.train.batch_size < 1) add("train.batch_size must be >= 1");
    if (config.train.checkpoint_interval < 1) add("train.checkpoint_interval must be >= 1");
    if (config.train.patience < 1) add("train.patience must be >= 1");
    if (config.train.max_updates < 1) add("train.max_updates must be >= 1");
    if (config.train.num_replicas < 1) add("train.replicas must be >= 1");
    if (!(config.train.adam.lr > 0.0)) add("train.lr must be > 0");

    if (config.decode_beam < 1) add("decode.beam must be >= 1");
    if (!config.decode_tag.empty() && !is_style_tag(config.decode_tag))
        add("decode.tag must be '" + std::string(kFormalTag) + "', '" + kInformalTag + "', or empty");

    return problems;
}

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::preprocess: return "preprocess";
        case Stage::lm_train: return "lm_train";
        case Stage::select: return "select";
        case Stage::bpe: return "bpe";
        case Stage::assemble: return "assemble";
        case Stage::train: return "train";
        case Stage::decode: return "decode";
        case Stage::evaluate: return "evaluate";
    }
    return "?";
}

Stage parse_stage(const std::string& name) {
    for (Stage stage : kAllStages) {
        if (name == stage_name(stage)) return stage;
    }
    throw ConfigError("unknown stage: " + name);
}

json RunManifest::to_json() const {
    json stage_list = json::array();
    for (const auto& record : stages) {
        stage_list.push_back(json{{"name", record.name},
                                  {"params", record.params},
                                  {"inputs", record.inputs},
                                  {"outputs", record.outputs}});
    }
    return json{{"tool_version", tool_version}, {"config", config_echo}, {"stages", stage_list}};
}

RunManifest RunManifest::from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("manifest: expected an object");
    RunManifest m;
    m.tool_version = doc.value("tool_version", "");
    m.config_echo = doc.value("config", json::object());
    const json stage_list = doc.value("stages", json::array());
    for (const auto& entry : stage_list) {
        StageRecord record;
        record.name = entry.value("name", "");
        record.params = entry.value("params", json::object());
        const json inputs = entry.value("inputs", json::object());
        for (const auto& it : inputs.items()) record.inputs[it.key()] = it.value().get<std::string>();
        const json outputs = entry.value("outputs", json::object());
        for (const auto& it : outputs.items()) record.outputs[it.key()] = it.value().get<std::string>();
        m.stages.push_back(std::move(record));
    }
    return m;
}

std::vector<std::string> serialize_examples(const std::vector<TaggedExample>& examples) {
    std::vector<std::string> lines;
    lines.reserve(examples.size());
    for (const auto& ex : examples) {
        lines.push_back(ex.tag + "\t" + join(ex.src, " ") + "\t" + join(ex.tgt, " ") + "\t" +
                        (ex.task == Task::ft ? "ft" : "mt") + "\t" + ex.origin);
    }
    return lines;
}

std::vector<TaggedExample> parse_examples(const std::vector<std::string>& lines) {
    std::vector<TaggedExample> examples;
    examples.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        auto fields = split_on(lines[i], '\t');
        if (fields.size() != 5)
            throw AssemblyError("example line " + std::to_string(i + 1) + ": expected 5 fields, got " +
                                std::to_string(fields.size()));
        TaggedExample ex;
        ex.tag = fields[0];
        if (!ex.tag.empty() && !is_style_tag(ex.tag))
            throw AssemblyError("example line " + std::to_string(i + 1) + ": bad tag '" + ex.tag + "'");
        ex.src = split_ws(fields[1]);
        ex.tgt = split_ws(fields[2]);
        if (fields[3] == "ft") {
            ex.task = Task::ft;
        } else if (fields[3] == "mt") {
            ex.task = Task::mt;
        } else {
            throw AssemblyError("example line " + std::to_string(i + 1) + ": bad task '" + fields[3] + "'");
        }
        ex.origin = fields[4];
        examples.push_back(std::move(ex));
    }
    return examples;
}

namespace {

struct StageDef {
    Stage stage;
    json params;
    std::vector<std::string> inputs;   // absolute external paths or output_dir-relative
    std::vector<std::string> outputs;  // output_dir-relative
    std::function<void()> run;
};

// Shared state for the stage bodies: everything is exchanged through files,
// this only carries the config and path helpers.
class PipelineRun {
  public:
    explicit PipelineRun(const PipelineConfig& config) : config_(config) {}

    // Absolute external inputs keep their path; artifacts live under output_dir.
    std::string disk_path(const std::string& key) const {
        if (fs::path(key).is_absolute()) return key;
        return (fs::path(config_.output_dir) / key).string();
    }

    std::vector<StageDef> make_stages() const;

  private:
    uint64_t stage_seed(const char* name) const {
        return derive_seed(config_.seed, std::string("stage.") + name);
    }

    std::vector<TokenSeq> read_tokens(const std::string& key) const {
        std::vector<TokenSeq> out;
        for (const auto& line : read_lines(disk_path(key))) out.push_back(split_ws(line));
        return out;
    }

    NGramModel load_lm(const std::string& key) const {
        return NGramModel::from_arpa(read_file(disk_path(key)));
    }

    void write_artifact(const std::string& key, const std::vector<std::string>& lines) const {
        write_lines(disk_path(key), lines);
    }

    void run_preprocess() const;
    void run_lm_train() const;
    void run_select() const;
    void run_bpe() const;
    void run_assemble() const;
    void run_train() const;
    void run_decode() const;
    void run_evaluate() const;

    const PipelineConfig& config_;
};

std::string tok_artifact(const char* corpus_key) {
    return std::string("preprocess/") + corpus_key + ".tok.txt";
}

void PipelineRun::run_preprocess() const {
    std::map<std::string, std::vector<TokenSeq>> tokenized;
    for (const auto& slot : kCorpora) {
        auto raw = read_lines(config_.*(slot.field));
        std::vector<TokenSeq> toks;
        toks.reserve(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) {
            RawLine line{raw[i], static_cast<int64_t>(i + 1)};
            try {
                toks.push_back(tokenize(normalize(line)));
            } catch (const TextprocError& e) {
                throw TextprocError(std::string(slot.key) + ": " + e.what());
            }
        }
        tokenized[slot.key] = std::move(toks);
    }

    // Aligned files must stay aligned; mismatches are cheap to catch here.
    auto check_aligned = [&](const char* a, const char* b) {
        if (tokenized[a].size() != tokenized[b].size())
            throw TextprocError(std::string(a) + " and " + b + " differ in line count: " +
                                std::to_string(tokenized[a].size()) + " vs " +
                                std::to_string(tokenized[b].size()));
    };
    check_aligned("bitext_src", "bitext_tgt");
    check_aligned("ft_informal", "ft_formal");
    check_aligned("dev_informal", "dev_formal");
    check_aligned("test_informal", "test_formal");

    // The truecaser sees only training-side text; dev and test stay unseen.
    std::vector<TokenSeq> tc_corpus;
    for (const char* key : {"formal", "informal", "bitext_src", "bitext_tgt", "ft_informal", "ft_formal"}) {
        const auto& corpus = tokenized[key];
        tc_corpus.insert(tc_corpus.end(), corpus.begin(), corpus.end());
    }
    TruecaseModel tc = truecase_train(tc_corpus);
    write_file(disk_path("preprocess/truecase.model"), tc.serialize());

    for (const auto& slot : kCorpora) {
        std::vector<std::string> lines;
        for (const auto& toks : tokenized[slot.key]) lines.push_back(join(truecase_apply(tc, toks), " "));
        write_artifact(tok_artifact(slot.key), lines);
    }
}

void PipelineRun::run_lm_train() const {
    const struct { const char* corpus; const char* arpa; } jobs[] = {
        {"formal", "lm/formal.arpa"},
        {"informal", "lm/informal.arpa"},
    };
    for (const auto& job : jobs) {
        std::vector<TokenSeq> corpus;
        for (auto& toks : read_tokens(tok_artifact(job.corpus))) {
            if (!toks.empty()) corpus.push_back(std::move(toks));
        }
        NGramModel::Options options;
        options.order = config_.lm_order;
        write_file(disk_path(job.arpa), NGramModel::train(corpus, options).to_arpa());
    }
}

std::vector<BitextPair> load_bitext(const std::vector<TokenSeq>& src, const std::vector<TokenSeq>& tgt) {
    std::vector<BitextPair> pairs;
    pairs.reserve(src.size());
    for (size_t i = 0; i < src.size(); ++i)
        pairs.push_back(BitextPair{src[i], tgt[i], static_cast<int64_t>(i + 1)});
    return pairs;
}

void PipelineRun::run_select() const {
    auto pool = load_bitext(read_tokens(tok_artifact("bitext_src")), read_tokens(tok_artifact("bitext_tgt")));
    validate_bitext(pool);
    pool = dedup_by_target(pool);

    int64_t ft_lines = static_cast<int64_t>(read_tokens(tok_artifact("ft_informal")).size());
    int64_t n = 2 * ft_lines;  // bidirectional FT examples

    auto feasible = [&](int64_t need, const char* what) {
        if (need > static_cast<int64_t>(pool.size())) {
            int64_t max_k = config_.k * static_cast<int64_t>(pool.size()) / std::max<int64_t>(need, 1);
            throw SelectError(std::string(mode_name(config_.mode)) + " needs " + std::to_string(need) +
                              " " + what + " but the deduplicated pool has " +
                              std::to_string(pool.size()) + "; maximum feasible k is " +
                              std::to_string(max_k));
        }
    };

    std::vector<std::string> lines;
    json summary = {{"mode", mode_name(config_.mode)}, {"k", config_.k}, {"n", n},
                    {"pool", pool.size()},            {"selected", json::object()}};

    auto emit = [&](const StyleSample& sample) {
        for (const auto& pair : sample.pairs)
            lines.push_back(std::string(style_name(sample.style)) + "\t" + std::to_string(pair.id) +
                            "\t" + join(pair.src, " ") + "\t" + join(pair.tgt, " "));
        summary["selected"][style_name(sample.style)] = sample.pairs.size();
    };

    if (uses_ced(config_.mode)) {
        feasible(config_.k * n / 2, "pairs per style");
        NGramModel formal_lm = load_lm("lm/formal.arpa");
        NGramModel informal_lm = load_lm("lm/informal.arpa");
        emit(ced_rank_select(pool, formal_lm, informal_lm, config_.k * n / 2, Style::formal));
        emit(ced_rank_select(pool, formal_lm, informal_lm, config_.k * n / 2, Style::informal));
    } else if (config_.mode == AssemblyMode::multitask_random) {
        feasible(config_.k * n, "pairs");
        // Matches the draw inside the assemble stage so the artifact lists
        // exactly the pairs that enter training.
        emit(random_select(pool, config_.k * n, derive_seed(stage_seed("assemble"), "assemble.random")));
    }

    write_artifact("select/selected.tsv", lines);
    write_file(disk_path("select/summary.json"), dump_json(summary));
}

void PipelineRun::run_bpe() const {
    std::vector<TokenSeq> corpus;
    for (const char* key : {"ft_informal", "ft_formal", "bitext_src", "bitext_tgt"}) {
        for (auto& toks : read_tokens(tok_artifact(key))) {
            if (!toks.empty()) corpus.push_back(std::move(toks));
        }
    }
    BpeOptions options;
    options.num_merges = config_.bpe_merges;
    options.marker = config_.bpe_marker;
    write_file(disk_path("bpe/bpe.model"), bpe_learn(corpus, options).serialize());
}

void PipelineRun::run_assemble() const {
    auto ft = build_bidirectional_ft(read_tokens(tok_artifact("ft_informal")),
                                     read_tokens(tok_artifact("ft_formal")));
    auto pool = dedup_by_target(
        load_bitext(read_tokens(tok_artifact("bitext_src")), read_tokens(tok_artifact("bitext_tgt"))));

    AssemblyConfig assembly;
    assembly.mode = config_.mode;
    assembly.k = config_.k;
    assembly.seed = stage_seed("assemble");

    std::vector<TaggedExample> examples;
    if (uses_ced(config_.mode)) {
        NGramModel formal_lm = load_lm("lm/formal.arpa");
        NGramModel informal_lm = load_lm("lm/informal.arpa");
        examples = assemble(assembly, ft, pool, &formal_lm, &informal_lm);
    } else {
        examples = assemble(assembly, ft, pool, nullptr, nullptr);
    }

    BpeModel bpe = BpeModel::deserialize(read_file(disk_path("bpe/bpe.model")));
    int64_t ft_count = 0;
    for (auto& ex : examples) {
        if (ex.task == Task::ft) ++ft_count;
        ex.src = bpe_encode(bpe, ex.src);
        ex.tgt = bpe_encode(bpe, ex.tgt);
    }
    write_artifact("assemble/train.tsv", serialize_examples(examples));

    auto dev = build_bidirectional_ft(read_tokens(tok_artifact("dev_informal")),
                                      read_tokens(tok_artifact("dev_formal")));
    for (auto& ex : dev) {
        ex.src = bpe_encode(bpe, ex.src);
        ex.tgt = bpe_encode(bpe, ex.tgt);
    }
    write_artifact("assemble/dev.tsv", serialize_examples(dev));

    json stats = {{"examples", examples.size()},
                  {"ft", ft_count},
                  {"bilingual", examples.size() - ft_count},
                  {"dev", dev.size()}};
    write_file(disk_path("assemble/stats.json"), dump_json(stats));
}

void PipelineRun::run_train() const {
    auto dataset = parse_examples(read_lines(disk_path("assemble/train.tsv")));
    auto dev = parse_examples(read_lines(disk_path("assemble/dev.tsv")));

    ModelConfig model = config_.model;
    model.seed = stage_seed("train");
    TrainConfig train = config_.train;
    train.seed = model.seed;

    auto results = train_replicas(dataset, dev, model, train);
    json replicas = json::array();
    for (size_t i = 0; i < results.size(); ++i) {
        const TrainResult& r = results[i];
        std::string id = std::to_string(i + 1);
        if (r.aborted)
            throw ModelError("replica " + id + " diverged after " + std::to_string(r.updates_run) +
                             " updates; lower train.lr or raise train.batch_size");
        save_checkpoint(disk_path("train/model_" + id + ".ckpt"), r.params, r.updates_run);
        write_artifact("train/log_" + id + ".tsv", format_log(r.log));
        replicas.push_back(json{{"best_checkpoint", r.best_checkpoint},
                                {"best_perplexity", r.best_perplexity},
                                {"updates", r.updates_run}});
    }
    write_file(disk_path("train/summary.json"), dump_json(json{{"replicas", replicas}}));
}

void PipelineRun::run_decode() const {
    std::vector<Seq2SeqParams> models;
    for (int64_t i = 1; i <= config_.train.num_replicas; ++i)
        models.push_back(load_checkpoint(disk_path("train/model_" + std::to_string(i) + ".ckpt")).params);

    BpeModel bpe = BpeModel::deserialize(read_file(disk_path("bpe/bpe.model")));

    DecodeConfig decode;
    decode.beam = config_.decode_beam;
    decode.log_space_ensemble = config_.log_space_ensemble;

    std::vector<std::string> tok_lines, detok_lines;
    int64_t dangling = 0;
    for (const auto& toks : read_tokens(tok_artifact("test_informal"))) {
        TokenSeq src;
        if (!config_.decode_tag.empty()) src.push_back(config_.decode_tag);
        TokenSeq enc = bpe_encode(bpe, toks);
        src.insert(src.end(), enc.begin(), enc.end());

        BeamHyp hyp = decode_sentence(models, src, decode);
        TokenSeq subwords;
        for (int32_t id : hyp.tokens) subwords.push_back(models[0].vocab.token(id));
        tok_lines.push_back(join(subwords, " "));

        TokenSeq words = bpe_decode(bpe, subwords, &dangling);
        detok_lines.push_back(detokenize(detruecase(words)));
    }
    write_artifact("decode/hypotheses.tok.txt", tok_lines);
    write_artifact("decode/hypotheses.txt", detok_lines);
}

void PipelineRun::run_evaluate() const {
    EvalSet set;
    set.hypotheses = read_lines(disk_path("decode/hypotheses.txt"));
    auto refs = read_lines(config_.test_formal);
    if (refs.size() != set.hypotheses.size())
        throw EvalError("hypotheses and references differ in line count: " +
                        std::to_string(set.hypotheses.size()) + " vs " + std::to_string(refs.size()));
    for (const auto& ref : refs) set.references.push_back({ref});

    BleuReport report = bleu(set);
    json doc = {{"bleu", report.bleu},
                {"precisions", report.precisions},
                {"brevity_penalty", report.brevity_penalty},
                {"hyp_len", report.hyp_len},
                {"ref_len", report.ref_len},
                {"sentences", set.hypotheses.size()}};
    write_file(disk_path("evaluate/evaluation.json"), dump_json(doc));
}

std::vector<StageDef> PipelineRun::make_stages() const {
    std::vector<StageDef> defs;

    StageDef preprocess;
    preprocess.stage = Stage::preprocess;
    preprocess.params = json::object();
    for (const auto& slot : kCorpora) preprocess.inputs.push_back(config_.*(slot.field));
    for (const auto& slot : kCorpora) preprocess.outputs.push_back(tok_artifact(slot.key));
    preprocess.outputs.push_back("preprocess/truecase.model");
    preprocess.run = [this] { run_preprocess(); };
    defs.push_back(std::move(preprocess));

    StageDef lm;
    lm.stage = Stage::lm_train;
    lm.params = {{"order", config_.lm_order}};
    lm.inputs = {tok_artifact("formal"), tok_artifact("informal")};
    lm.outputs = {"lm/formal.arpa", "lm/informal.arpa"};
    lm.run = [this] { run_lm_train(); };
    defs.push_back(std::move(lm));

    StageDef select;
    select.stage = Stage::select;
    select.params = {{"mode", mode_name(config_.mode)}, {"k", config_.k}, {"seed", config_.seed}};
    select.inputs = {tok_artifact("bitext_src"), tok_artifact("bitext_tgt"), tok_artifact("ft_informal")};
    if (uses_ced(config_.mode)) {
        select.inputs.push_back("lm/formal.arpa");
        select.inputs.push_back("lm/informal.arpa");
    }
    select.outputs = {"select/selected.tsv", "select/summary.json"};
    select.run = [this] { run_select(); };
    defs.push_back(std::move(select));

    StageDef bpe;
    bpe.stage = Stage::bpe;
    bpe.params = {{"merges", config_.bpe_merges}, {"marker", config_.bpe_marker}};
    bpe.inputs = {tok_artifact("ft_informal"), tok_artifact("ft_formal"), tok_artifact("bitext_src"),
                  tok_artifact("bitext_tgt")};
    bpe.outputs = {"bpe/bpe.model"};
    bpe.run = [this] { run_bpe(); };
    defs.push_back(std::move(bpe));

    StageDef assemble;
    assemble.stage = Stage::assemble;
    assemble.params = {{"mode", mode_name(config_.mode)}, {"k", config_.k}, {"seed", config_.seed}};
    assemble.inputs = {tok_artifact("ft_informal"), tok_artifact("ft_formal"), tok_artifact("dev_informal"),
                       tok_artifact("dev_formal"),  tok_artifact("bitext_src"), tok_artifact("bitext_tgt"),
                       "bpe/bpe.model"};
    if (uses_ced(config_.mode)) {
        assemble.inputs.push_back("lm/formal.arpa");
        assemble.inputs.push_back("lm/informal.arpa");
    }
    assemble.outputs = {"assemble/train.tsv", "assemble/dev.tsv", "assemble/stats.json"};
    assemble.run = [this] { run_assemble(); };
    defs.push_back(std::move(assemble));

    StageDef train;
    train.stage = Stage::train;
    train.params = {{"embed_dim", config_.model.embed_dim},
                    {"hidden_dim", config_.model.hidden_dim},
                    {"attention_dim", config_.model.attention_dim},
                    {"dropout", config_.model.dropout_p},
                    {"batch_size", config_.train.batch_size},
                    {"checkpoint_interval", config_.train.checkpoint_interval},
                    {"patience", config_.train.patience},
                    {"max_updates", config_.train.max_updates},
                    {"replicas", config_.train.num_replicas},
                    {"lr", config_.train.adam.lr},
                    {"seed", config_.seed}};
    train.inputs = {"assemble/train.tsv", "assemble/dev.tsv"};
    for (int64_t i = 1; i <= config_.train.num_replicas; ++i) {
        train.outputs.push_back("train/model_" + std::to_string(i) + ".ckpt");
        train.outputs.push_back("train/log_" + std::to_string(i) + ".tsv");
    }
    train.outputs.push_back("train/summary.json");
    train.run = [this] { run_train(); };
    defs.push_back(std::move(train));

    StageDef decode;
    decode.stage = Stage::decode;
    decode.params = {{"tag", config_.decode_tag},
                     {"beam", config_.decode_beam},
                     {"log_space_ensemble", config_.log_space_ensemble},
                     {"replicas", config_.train.num_replicas}};
    for (int64_t i = 1; i <= config_.train.num_replicas; ++i)
        decode.inputs.push_back("train/model_" + std::to_string(i) + ".ckpt");
    decode.inputs.push_back(tok_artifact("test_informal"));
    decode.inputs.push_back("bpe/bpe.model");
    decode.outputs = {"decode/hypotheses.tok.txt", "decode/hypotheses.txt"};
    decode.run = [this] { run_decode(); };
    defs.push_back(std::move(decode));

    StageDef evaluate;
    evaluate.stage = Stage::evaluate;
    evaluate.params = json::object();
    evaluate.inputs = {"decode/hypotheses.txt", config_.test_formal};
    evaluate.outputs = {"evaluate/evaluation.json"};
    evaluate.run = [this] { run_evaluate(); };
    defs.push_back(std::move(evaluate));

    return defs;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages) {
    auto problems = validate_config(config);
    if (!problems.empty()) {
        std::string message = "invalid config:";
        for (const auto& p : problems) message += "\n  - " + p;
        throw ConfigError(message);
    }

    std::set<Stage> requested(stages.begin(), stages.end());
    if (stages.empty()) requested.insert(kAllStages.begin(), kAllStages.end());

    fs::create_directories(config.output_dir);

    // Previous manifest, if any, drives the skip decisions and fills in the
    // records of stages not requested this run.
    RunManifest previous;
    std::string manifest_path = (fs::path(config.output_dir) / "manifest.json").string();
    if (fs::exists(manifest_path)) {
        try {
            previous = RunManifest::from_json(json::parse(read_file(manifest_path)));
        } catch (const std::exception&) {
            previous = RunManifest{};  // unreadable manifests just disable skipping
        }
    }
    auto previous_record = [&](const char* name) -> const StageRecord* {
        for (const auto& record : previous.stages)
            if (record.name == name) return &record;
        return nullptr;
    };

    PipelineRun run(config);
    RunManifest manifest;
    manifest.config_echo = config.echo.is_null() ? build_echo(config) : config.echo;
    manifest.tool_version = kToolVersion;
    RunReport report;

    auto persist = [&] {
        write_file(manifest_path, dump_json(manifest.to_json()));
        json stage_reports = json::array();
        for (const auto& s : report.stages)
            stage_reports.push_back(json{{"name", s.name},
                                         {"requested", s.requested},
                                         {"executed", s.executed},
                                         {"seconds", s.seconds}});
        json doc = {{"ok", report.ok}, {"failed_stage", report.failed_stage}, {"stages", stage_reports}};
        write_file((fs::path(config.output_dir) / "run_report.json").string(), dump_json(doc));
    };

    for (const StageDef& def : run.make_stages()) {
        const char* name = stage_name(def.stage);
        StageReport stage_report;
        stage_report.name = name;

        if (!requested.count(def.stage)) {
            if (const StageRecord* prev = previous_record(name)) manifest.stages.push_back(*prev);
            report.stages.push_back(stage_report);
            continue;
        }
        stage_report.requested = true;

        for (const auto& key : def.inputs) {
            if (!fs::is_regular_file(run.disk_path(key))) {
                report.failed_stage = name;
                report.stages.push_back(stage_report);
                persist();
                throw DependencyError("stage '" + std::string(name) + "' is missing input '" + key +
                                      "'; run the producing stage first");
            }
        }

        StageRecord record;
        record.name = name;
        record.params = def.params;
        for (const auto& key : def.inputs) record.inputs[key] = sha256_file_hex(run.disk_path(key));

        const StageRecord* prev = previous_record(name);
        bool reusable = prev && prev->params == record.params && prev->inputs == record.inputs;
        if (reusable) {
            for (const auto& key : def.outputs) {
                const std::string path = run.disk_path(key);
                auto it = prev->outputs.find(key);
                if (it == prev->outputs.end() || !fs::is_regular_file(path) ||
                    sha256_file_hex(path) != it->second) {
                    reusable = false;
                    break;
                }
            }
            reusable = reusable && prev->outputs.size() == def.outputs.size();
        }

        if (reusable) {
            record.outputs = prev->outputs;
        } else {
            for (const auto& key : def.outputs)
                fs::create_directories(fs::path(run.disk_path(key)).parent_path());
            auto started = std::chrono::steady_clock::now();
            try {
                def.run();
            } catch (const std::exception& e) {
                report.failed_stage = name;
                report.stages.push_back(stage_report);
                persist();
                throw PipelineError(name, e.what());
            }
            stage_report.executed = true;
            stage_report.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            for (const auto& key : def.outputs) {
                const std::string path = run.disk_path(key);
                if (!fs::is_regular_file(path)) {
                    report.failed_stage = name;
                    report.stages.push_back(stage_report);
                    persist();
                    throw PipelineError(name, "did not produce declared output '" + key + "'");
                }
                record.outputs[key] = sha256_file_hex(path);
            }
        }

        manifest.stages.push_back(std::move(record));
        report.stages.push_back(stage_report);
    }

    report.ok = true;
    persist();
    return report;
}

}  // namespace stylemt
