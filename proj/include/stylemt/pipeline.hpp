#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylemt/assembly.hpp"
#include "stylemt/seq2seq.hpp"
#include "stylemt/seq2seq_train.hpp"

namespace stylemt {

inline constexpr const char* kToolVersion = "stylemt 0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A stage failure; the manifest written so far is preserved on disk.
class PipelineError : public std::runtime_error {
  public:
    PipelineError(std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

struct PipelineConfig {
    uint64_t seed = 0;
    std::string output_dir;

    // external corpora (resolved paths)
    std::string formal_corpus, informal_corpus;
    std::string bitext_src, bitext_tgt;
    std::string ft_informal, ft_formal;
    std::string dev_informal, dev_formal;
    std::string test_informal, test_formal;

    int lm_order = 3;
    int64_t bpe_merges = 200;
    std::string bpe_marker = "</w>";

    AssemblyMode mode = AssemblyMode::multitask_tag_style;
    int64_t k = 1;

    ModelConfig model;   // seed is derived per stage, the field here is unused
    TrainConfig train;   // same for the train seed

    std::string decode_tag = "<F>";
    int64_t decode_beam = 5;
    bool log_space_ensemble = false;

    nlohmann::json echo;  // canonical config as loaded, echoed into manifests
};

// Reads a JSON config; relative paths resolve against the config directory.
// Unknown keys and type mismatches are ConfigErrors naming the key.
PipelineConfig load_config(const std::string& path);
PipelineConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir);

// Static checks: path existence, mode/k sizing rules, marker collisions with
// the raw corpora. Returns problem descriptions; empty means valid.
std::vector<std::string> validate_config(const PipelineConfig& config);

enum class Stage { preprocess, lm_train, select, bpe, assemble, train, decode, evaluate };

inline constexpr std::array<Stage, 8> kAllStages = {
    Stage::preprocess, Stage::lm_train, Stage::select, Stage::bpe,
    Stage::assemble,   Stage::train,    Stage::decode, Stage::evaluate,
};

const char* stage_name(Stage stage);
Stage parse_stage(const std::string& name);  // throws ConfigError

struct StageRecord {
    std::string name;
    nlohmann::json params;                        // stage-relevant knobs
    std::map<std::string, std::string> inputs;    // path -> sha256
    std::map<std::string, std::string> outputs;   // relative path -> sha256
};

struct RunManifest {
    nlohmann::json config_echo;
    std::string tool_version;
    std::vector<StageRecord> stages;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& doc);  // throws ConfigError
};

struct StageReport {
    std::string name;
    bool requested = false;
    bool executed = false;  // false = served from matching digests
    double seconds = 0.0;
};

struct RunReport {
    std::vector<StageReport> stages;
    bool ok = false;
    std::string failed_stage;
};

// Executes the requested stages (all when empty) in dependency order.
// Writes manifest.json and run_report.json under output_dir. A stage whose
// inputs, parameters, and outputs all match the previous manifest is skipped.
// Missing stage inputs raise DependencyError; stage failures raise
// PipelineError after persisting the partial manifest.
RunReport run_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages = {});

// train.tsv line format: tag, src, tgt, task, origin (tab-separated,
// token sequences space-joined).
std::vector<std::string> serialize_examples(const std::vector<TaggedExample>& examples);
std::vector<TaggedExample> parse_examples(const std::vector<std::string>& lines);

}  // namespace stylemt
