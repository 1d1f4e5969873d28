#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stylemt/assembly.hpp"
#include "stylemt/textproc.hpp"

namespace stylemt {

class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Shared source/target subword vocabulary with fixed reserved slots.
class SeqVocab {
  public:
    static constexpr int32_t kPad = 0;
    static constexpr int32_t kUnk = 1;
    static constexpr int32_t kBos = 2;
    static constexpr int32_t kEos = 3;

    SeqVocab();

    // Reserved ids first, then the corpus tokens sorted lexicographically.
    static SeqVocab build(const std::vector<TokenSeq>& corpus);

    int32_t id(const std::string& token) const;  // absent -> kUnk
    const std::string& token(int32_t id) const;
    int64_t size() const { return static_cast<int64_t>(tokens_.size()); }

    std::vector<int32_t> encode(const TokenSeq& tokens) const;

    const std::vector<std::string>& tokens() const { return tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::map<std::string, int32_t> ids_;
};

struct ModelConfig {
    int64_t embed_dim = 64;
    int64_t hidden_dim = 64;
    int64_t attention_dim = 64;
    double dropout_p = 0.2;
    uint64_t seed = 0;
};

// All trainable tensors. The embedding matrix doubles as the output
// projection (tied); there is no separate output weight.
struct Seq2SeqParams {
    ModelConfig config;
    SeqVocab vocab;

    Eigen::MatrixXd embed;                          // V x E
    Eigen::MatrixXd w_enc_f, u_enc_f, b_enc_f;      // forward LSTM
    Eigen::MatrixXd w_enc_b, u_enc_b, b_enc_b;      // backward LSTM
    Eigen::MatrixXd w_bridge_h, b_bridge_h;         // 2H -> H
    Eigen::MatrixXd w_bridge_c, b_bridge_c;
    Eigen::MatrixXd w_att_q, u_att_k, b_att, v_att; // perceptron attention
    Eigen::MatrixXd w_dec, u_dec, b_dec;            // decoder LSTM
    Eigen::MatrixXd w_read, b_read;                 // readout to embed_dim
    Eigen::MatrixXd b_vocab;                        // V x 1 output bias
    Eigen::MatrixXd ln_s_gain, ln_s_bias;           // decoder state layer norm
    Eigen::MatrixXd ln_r_gain, ln_r_bias;           // readout layer norm

    // Stable name -> tensor mapping; iteration order is the declaration order.
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> named();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named() const;

    int64_t parameter_count() const;
};

Seq2SeqParams init_params(const ModelConfig& config, const SeqVocab& vocab);

// Same tensor shapes as the parameters, zero-filled.
Seq2SeqParams zeros_like(const Seq2SeqParams& params);

struct ForwardResult {
    double loss = 0.0;       // mean per-target-token negative log-likelihood (nats)
    int64_t tokens = 0;      // scored target tokens (including </s>)
    // attention[t] is (max_src_len x batch); column sums are 1 for live rows
    std::vector<Eigen::MatrixXd> attention;
};

// Teacher-forced batch loss. In train mode inverted dropout masks are drawn
// from dropout_seed; eval mode ignores it. If grads is non-null the backward
// pass fills it (accumulating into existing values).
ForwardResult forward_loss(const Seq2SeqParams& params,
                           const std::vector<TaggedExample>& batch, bool train,
                           uint64_t dropout_seed, Seq2SeqParams* grads = nullptr);

// Max relative error between analytic gradients and central finite
// differences over >= sample_per_tensor random coordinates per tensor.
double grad_check(const Seq2SeqParams& params, const std::vector<TaggedExample>& batch,
                  double epsilon = 1e-5, int64_t sample_per_tensor = 200,
                  uint64_t seed = 0);

// exp of the mean per-token NLL over the dev set, batched internally.
double perplexity(const Seq2SeqParams& params, const std::vector<TaggedExample>& dev,
                  int64_t batch_size = 64);

}  // namespace stylemt
