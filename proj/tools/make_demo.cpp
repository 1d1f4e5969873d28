// Regenerates the bundled demo dataset: a contraction-expansion formality
// task over a rot13 "source language". Deterministic for a fixed seed.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylemt/synthetic.hpp"
#include "stylemt/util/io.hpp"
#include "stylemt/util/rng.hpp"

using namespace stylemt;

namespace {

void write_tokens(const std::string& path, const std::vector<TokenSeq>& corpus) {
    std::vector<std::string> lines;
    lines.reserve(corpus.size());
    for (const auto& toks : corpus) lines.push_back(join(toks, " "));
    write_lines(path, lines);
    std::cout << path << ": " << lines.size() << " lines\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::string dir = "data/demo";
    if (argc == 2) dir = argv[1];
    if (argc > 2) {
        std::cerr << "usage: stylemt_make_demo [output-dir]\n";
        return 1;
    }
    std::filesystem::create_directories(dir);

    const uint64_t seed = 7;

    // One pool split three ways keeps dev and test disjoint from training.
    auto pairs = synthetic_ft_pairs(190, derive_seed(seed, "demo.ft"));
    auto slice = [&](size_t from, size_t to, bool formal) {
        std::vector<TokenSeq> out;
        for (size_t i = from; i < to; ++i) out.push_back(formal ? pairs[i].formal : pairs[i].informal);
        return out;
    };
    write_tokens(dir + "/ft_informal.txt", slice(0, 150, false));
    write_tokens(dir + "/ft_formal.txt", slice(0, 150, true));
    write_tokens(dir + "/dev_informal.txt", slice(150, 170, false));
    write_tokens(dir + "/dev_formal.txt", slice(150, 170, true));
    write_tokens(dir + "/test_informal.txt", slice(170, 190, false));
    write_tokens(dir + "/test_formal.txt", slice(170, 190, true));

    write_tokens(dir + "/formal.txt", synthetic_style_corpus(300, derive_seed(seed, "demo.formal"), true));
    write_tokens(dir + "/informal.txt",
                 synthetic_style_corpus(300, derive_seed(seed, "demo.informal"), false));

    auto bitext = synthetic_bitext(400, derive_seed(seed, "demo.bitext"));
    std::vector<TokenSeq> src, tgt;
    for (const auto& pair : bitext) {
        src.push_back(pair.src);
        tgt.push_back(pair.tgt);
    }
    write_tokens(dir + "/bitext_src.txt", src);
    write_tokens(dir + "/bitext_tgt.txt", tgt);

    nlohmann::json config = {
        {"seed", seed},
        {"output_dir", "out"},
        {"corpora",
         {{"formal", "formal.txt"},
          {"informal", "informal.txt"},
          {"bitext_src", "bitext_src.txt"},
          {"bitext_tgt", "bitext_tgt.txt"},
          {"ft_informal", "ft_informal.txt"},
          {"ft_formal", "ft_formal.txt"},
          {"dev_informal", "dev_informal.txt"},
          {"dev_formal", "dev_formal.txt"},
          {"test_informal", "test_informal.txt"},
          {"test_formal", "test_formal.txt"}}},
        {"lm", {{"order", 3}}},
        {"bpe", {{"merges", 120}}},
        {"assembly", {{"mode", "multitask_tag_style"}, {"k", 1}}},
        {"model",
         {{"embed_dim", 32}, {"hidden_dim", 32}, {"attention_dim", 24}, {"dropout", 0.1}}},
        {"train",
         {{"batch_size", 16},
          {"checkpoint_interval", 100},
          {"patience", 4},
          {"max_updates", 800},
          {"replicas", 2},
          {"lr", 0.003}}},
        {"decode", {{"tag", "<F>"}, {"beam", 4}}},
    };
    write_file(dir + "/config.json", config.dump(2) + "\n");
    std::cout << dir << "/config.json written\n";
    return 0;
}
