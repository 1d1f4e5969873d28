#include "stylemt/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stylemt/tape.hpp"
#include "stylemt/util/rng.hpp"

namespace stylemt {

SeqVocab::SeqVocab() {
    tokens_ = {"<pad>", "<unk>", "<s>", "</s>"};
    for (size_t i = 0; i < tokens_.size(); ++i)
        ids_[tokens_[i]] = static_cast<int32_t>(i);
}

SeqVocab SeqVocab::build(const std::vector<TokenSeq>& corpus) {
    SeqVocab vocab;
    std::set<std::string> seen;
    for (const auto& sentence : corpus)
        for (const auto& token : sentence)
            if (!vocab.ids_.count(token)) seen.insert(token);
    for (const auto& token : seen) {
        vocab.ids_[token] = static_cast<int32_t>(vocab.tokens_.size());
        vocab.tokens_.push_back(token);
    }
    return vocab;
}

int32_t SeqVocab::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& SeqVocab::token(int32_t id) const {
    if (id < 0 || id >= size()) throw ModelError("token id out of range");
    return tokens_[id];
}

std::vector<int32_t> SeqVocab::encode(const TokenSeq& tokens) const {
    std::vector<int32_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> Seq2SeqParams::named() {
    return {
        {"embed", &embed},
        {"w_enc_f", &w_enc_f}, {"u_enc_f", &u_enc_f}, {"b_enc_f", &b_enc_f},
        {"w_enc_b", &w_enc_b}, {"u_enc_b", &u_enc_b}, {"b_enc_b", &b_enc_b},
        {"w_bridge_h", &w_bridge_h}, {"b_bridge_h", &b_bridge_h},
        {"w_bridge_c", &w_bridge_c}, {"b_bridge_c", &b_bridge_c},
        {"w_att_q", &w_att_q}, {"u_att_k", &u_att_k}, {"b_att", &b_att},
        {"v_att", &v_att},
        {"w_dec", &w_dec}, {"u_dec", &u_dec}, {"b_dec", &b_dec},
        {"w_read", &w_read}, {"b_read", &b_read},
        {"b_vocab", &b_vocab},
        {"ln_s_gain", &ln_s_gain}, {"ln_s_bias", &ln_s_bias},
        {"ln_r_gain", &ln_r_gain}, {"ln_r_bias", &ln_r_bias},
    };
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> Seq2SeqParams::named() const {
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
    for (auto& [name, tensor] : const_cast<Seq2SeqParams*>(this)->named())
        out.emplace_back(name, tensor);
    return out;
}

int64_t Seq2SeqParams::parameter_count() const {
    int64_t count = 0;
    for (auto& [name, tensor] : named()) count += tensor->size();
    return count;
}

Seq2SeqParams init_params(const ModelConfig& config, const SeqVocab& vocab) {
    if (config.embed_dim < 1 || config.hidden_dim < 1 || config.attention_dim < 1)
        throw ModelError("model dimensions must be >= 1");
    if (config.dropout_p < 0.0 || config.dropout_p >= 1.0)
        throw ModelError("dropout_p must be in [0,1)");

    const int64_t V = vocab.size();
    const int64_t E = config.embed_dim;
    const int64_t H = config.hidden_dim;
    const int64_t A = config.attention_dim;

    Seq2SeqParams p;
    p.config = config;
    p.vocab = vocab;
    p.embed.resize(V, E);
    p.w_enc_f.resize(4 * H, E);
    p.u_enc_f.resize(4 * H, H);
    p.b_enc_f.resize(4 * H, 1);
    p.w_enc_b.resize(4 * H, E);
    p.u_enc_b.resize(4 * H, H);
    p.b_enc_b.resize(4 * H, 1);
    p.w_bridge_h.resize(H, 2 * H);
    p.b_bridge_h.resize(H, 1);
    p.w_bridge_c.resize(H, 2 * H);
    p.b_bridge_c.resize(H, 1);
    p.w_att_q.resize(A, H);
    p.u_att_k.resize(A, 2 * H);
    p.b_att.resize(A, 1);
    p.v_att.resize(1, A);
    p.w_dec.resize(4 * H, E + 2 * H);
    p.u_dec.resize(4 * H, H);
    p.b_dec.resize(4 * H, 1);
    p.w_read.resize(E, 3 * H + E);
    p.b_read.resize(E, 1);
    p.b_vocab.resize(V, 1);
    p.ln_s_gain.resize(H, 1);
    p.ln_s_bias.resize(H, 1);
    p.ln_r_gain.resize(E, 1);
    p.ln_r_bias.resize(E, 1);

    for (auto& [name, tensor] : p.named()) {
        if (name.rfind("ln_", 0) == 0) {
            tensor->setConstant(name.find("_gain") != std::string::npos ? 1.0 : 0.0);
            continue;
        }
        if (tensor->cols() == 1) {
            tensor->setZero();  // biases
            continue;
        }
        Rng rng(derive_seed(config.seed, "init." + name));
        double range = 1.0 / std::sqrt(static_cast<double>(tensor->cols()));
        for (int64_t i = 0; i < tensor->rows(); ++i)
            for (int64_t j = 0; j < tensor->cols(); ++j)
                (*tensor)(i, j) = rng.uniform_sym(range);
    }
    return p;
}

Seq2SeqParams zeros_like(const Seq2SeqParams& params) {
    Seq2SeqParams z = params;
    for (auto& [name, tensor] : z.named()) tensor->setZero();
    return z;
}

namespace {

using Id = Tape::Id;
using Matrix = Eigen::MatrixXd;

struct ParamNodes {
    std::vector<std::pair<std::string, Id>> by_name;
    Id get(const std::string& name) const {
        for (const auto& [n, id] : by_name)
            if (n == name) return id;
        throw ModelError("unknown tensor " + name);
    }
};

ParamNodes load_params(Tape& tape, const Seq2SeqParams& params) {
    ParamNodes nodes;
    for (const auto& [name, tensor] : params.named())
        nodes.by_name.emplace_back(name, tape.leaf(*tensor, true));
    return nodes;
}

// One LSTM step; states blend back to the previous value where mask is 0.
std::pair<Id, Id> lstm_step(Tape& t, Id w, Id u, Id b, Id x, Id h_prev, Id c_prev,
                            const Eigen::RowVectorXd& mask, int64_t H) {
    Id z = t.add_bias(t.add(t.matmul(w, x), t.matmul(u, h_prev)), b);
    Id i = t.sigmoid_op(t.slice_rows(z, 0, H));
    Id f = t.sigmoid_op(t.slice_rows(z, H, H));
    Id o = t.sigmoid_op(t.slice_rows(z, 2 * H, H));
    Id g = t.tanh_op(t.slice_rows(z, 3 * H, H));
    Id c_new = t.add(t.cmul(f, c_prev), t.cmul(i, g));
    Id h_new = t.cmul(o, t.tanh_op(c_new));
    return {t.colblend(mask, h_new, h_prev), t.colblend(mask, c_new, c_prev)};
}

Matrix dropout_mask(Rng& rng, int64_t rows, int64_t cols, double p) {
    Matrix mask(rows, cols);
    const double keep_scale = 1.0 / (1.0 - p);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j)
            mask(i, j) = rng.real01() < p ? 0.0 : keep_scale;
    return mask;
}

struct EncodedBatch {
    std::vector<std::vector<int32_t>> src_step_ids;  // S entries of size B
    std::vector<std::vector<int32_t>> dec_in_ids;    // T entries
    std::vector<std::vector<int32_t>> target_ids;    // T entries
    Matrix src_mask;                                 // S x B
    std::vector<Eigen::RowVectorXd> tgt_mask;        // T entries, 1 x B
    int64_t total_tokens = 0;
};

EncodedBatch encode_batch(const SeqVocab& vocab, const std::vector<TaggedExample>& batch) {
    const int64_t B = static_cast<int64_t>(batch.size());
    std::vector<std::vector<int32_t>> src(B), tgt(B);
    int64_t S = 0, T = 0;
    for (int64_t b = 0; b < B; ++b) {
        src[b] = vocab.encode(emitted_src(batch[b]));
        tgt[b] = vocab.encode(batch[b].tgt);
        S = std::max(S, static_cast<int64_t>(src[b].size()));
        T = std::max(T, static_cast<int64_t>(tgt[b].size()) + 1);  // + </s>
    }

    EncodedBatch out;
    out.src_mask = Matrix::Zero(S, B);
    for (int64_t t = 0; t < S; ++t) {
        std::vector<int32_t> ids(B, SeqVocab::kPad);
        for (int64_t b = 0; b < B; ++b) {
            if (t < static_cast<int64_t>(src[b].size())) {
                ids[b] = src[b][t];
                out.src_mask(t, b) = 1.0;
            }
        }
        out.src_step_ids.push_back(std::move(ids));
    }
    for (int64_t t = 0; t < T; ++t) {
        std::vector<int32_t> in(B, SeqVocab::kPad), target(B, SeqVocab::kPad);
        Eigen::RowVectorXd mask = Eigen::RowVectorXd::Zero(B);
        for (int64_t b = 0; b < B; ++b) {
            int64_t len = static_cast<int64_t>(tgt[b].size());
            if (t > len) continue;
            in[b] = t == 0 ? SeqVocab::kBos : tgt[b][t - 1];
            target[b] = t == len ? SeqVocab::kEos : tgt[b][t];
            mask(b) = 1.0;
            out.total_tokens += 1;
        }
        out.dec_in_ids.push_back(std::move(in));
        out.target_ids.push_back(std::move(target));
        out.tgt_mask.push_back(std::move(mask));
    }
    return out;
}

}  // namespace

ForwardResult forward_loss(const Seq2SeqParams& params,
                           const std::vector<TaggedExample>& batch, bool train,
                           uint64_t dropout_seed, Seq2SeqParams* grads) {
    if (batch.empty()) throw ModelError("empty batch");
    const int64_t B = static_cast<int64_t>(batch.size());
    const int64_t H = params.config.hidden_dim;
    const int64_t E = params.config.embed_dim;
    const double p = params.config.dropout_p;
    const bool use_dropout = train && p > 0.0;
    Rng drop_rng(derive_seed(dropout_seed, "dropout"));

    EncodedBatch eb = encode_batch(params.vocab, batch);
    const int64_t S = static_cast<int64_t>(eb.src_step_ids.size());
    const int64_t T = static_cast<int64_t>(eb.dec_in_ids.size());

    Tape tape;
    ParamNodes nodes = load_params(tape, params);
    const Id embed = nodes.get("embed");

    auto maybe_drop = [&](Id x) {
        if (!use_dropout) return x;
        return tape.cmul_const(
            x, dropout_mask(drop_rng, tape.value(x).rows(), tape.value(x).cols(), p));
    };

    // encoder
    std::vector<Id> src_emb;
    for (int64_t t = 0; t < S; ++t)
        src_emb.push_back(maybe_drop(tape.lookup(embed, eb.src_step_ids[t])));

    Id zero_h = tape.constant(Matrix::Zero(H, B));
    Id h_f = zero_h, c_f = zero_h, h_b = zero_h, c_b = zero_h;
    std::vector<Id> fwd_states(S), bwd_states(S);
    const Id w_f = nodes.get("w_enc_f"), u_f = nodes.get("u_enc_f"), b_f = nodes.get("b_enc_f");
    const Id w_b = nodes.get("w_enc_b"), u_b = nodes.get("u_enc_b"), b_b = nodes.get("b_enc_b");
    for (int64_t t = 0; t < S; ++t) {
        std::tie(h_f, c_f) =
            lstm_step(tape, w_f, u_f, b_f, src_emb[t], h_f, c_f, eb.src_mask.row(t), H);
        fwd_states[t] = h_f;
    }
    for (int64_t t = S - 1; t >= 0; --t) {
        std::tie(h_b, c_b) =
            lstm_step(tape, w_b, u_b, b_b, src_emb[t], h_b, c_b, eb.src_mask.row(t), H);
        bwd_states[t] = h_b;
    }
    std::vector<Id> anns(S);
    for (int64_t t = 0; t < S; ++t)
        anns[t] = maybe_drop(tape.vstack({fwd_states[t], bwd_states[t]}));

    // bridge from the final valid states of both directions
    Id enc_summary = tape.vstack({h_f, h_b});
    Id h = tape.tanh_op(
        tape.add_bias(tape.matmul(nodes.get("w_bridge_h"), enc_summary), nodes.get("b_bridge_h")));
    Id c = tape.tanh_op(
        tape.add_bias(tape.matmul(nodes.get("w_bridge_c"), enc_summary), nodes.get("b_bridge_c")));

    // attention keys are fixed across decoder steps
    std::vector<Id> keys(S);
    for (int64_t t = 0; t < S; ++t) keys[t] = tape.matmul(nodes.get("u_att_k"), anns[t]);

    Id ctx = tape.constant(Matrix::Zero(2 * H, B));
    Id ones_2h = tape.constant(Matrix::Ones(2 * H, 1));
    ForwardResult result;
    result.tokens = eb.total_tokens;
    std::vector<Id> step_losses;

    const Id w_dec = nodes.get("w_dec"), u_dec = nodes.get("u_dec"), b_dec = nodes.get("b_dec");
    for (int64_t t = 0; t < T; ++t) {
        Id y_emb = maybe_drop(tape.lookup(embed, eb.dec_in_ids[t]));
        Id x = tape.vstack({y_emb, ctx});
        std::tie(h, c) = lstm_step(tape, w_dec, u_dec, b_dec, x, h, c, eb.tgt_mask[t], H);
        Id s_ln = tape.layer_norm_cols(h, nodes.get("ln_s_gain"), nodes.get("ln_s_bias"));
        Id s = maybe_drop(s_ln);

        if (S > 0) {
            Id query = tape.add_bias(tape.matmul(nodes.get("w_att_q"), s), nodes.get("b_att"));
            std::vector<Id> scores(S);
            for (int64_t j = 0; j < S; ++j)
                scores[j] = tape.matmul(nodes.get("v_att"), tape.tanh_op(tape.add(keys[j], query)));
            Id alpha = tape.softmax_cols_masked(tape.vstack(scores), eb.src_mask);
            result.attention.push_back(tape.value(alpha));
            Id new_ctx = tape.constant(Matrix::Zero(2 * H, B));
            for (int64_t j = 0; j < S; ++j) {
                Id alpha_row = tape.slice_rows(alpha, j, 1);
                Id weight = tape.matmul(ones_2h, alpha_row);
                new_ctx = tape.add(new_ctx, tape.cmul(weight, anns[j]));
            }
            ctx = new_ctx;
        } else {
            result.attention.push_back(Matrix::Zero(0, B));
        }

        Id rin = tape.vstack({s, ctx, y_emb});
        Id r = tape.tanh_op(tape.add_bias(tape.matmul(nodes.get("w_read"), rin),
                                          nodes.get("b_read")));
        Id r_ln = tape.layer_norm_cols(r, nodes.get("ln_r_gain"), nodes.get("ln_r_bias"));
        Id logits = tape.add_bias(tape.matmul(embed, r_ln), nodes.get("b_vocab"));
        step_losses.push_back(tape.masked_nll(logits, eb.target_ids[t], eb.tgt_mask[t]));
    }

    Id loss = tape.scale(tape.add_scalars(step_losses),
                         1.0 / static_cast<double>(eb.total_tokens));
    result.loss = tape.value(loss)(0, 0);

    if (grads != nullptr) {
        tape.backward(loss);
        auto named = grads->named();
        for (size_t i = 0; i < named.size(); ++i)
            *named[i].second += tape.grad(nodes.by_name[i].second);
    }
    return result;
}

double grad_check(const Seq2SeqParams& params, const std::vector<TaggedExample>& batch,
                  double epsilon, int64_t sample_per_tensor, uint64_t seed) {
    Seq2SeqParams grads = zeros_like(params);
    ForwardResult base = forward_loss(params, batch, false, 0, &grads);
    if (!std::isfinite(base.loss)) throw ModelError("non-finite loss in grad_check");

    Seq2SeqParams probe = params;
    auto probe_named = probe.named();
    auto grad_named = grads.named();

    double max_rel = 0.0;
    for (size_t ti = 0; ti < probe_named.size(); ++ti) {
        Eigen::MatrixXd* tensor = probe_named[ti].second;
        const Eigen::MatrixXd& analytic = *grad_named[ti].second;
        const int64_t count = tensor->size();

        std::vector<int64_t> coords(count);
        for (int64_t i = 0; i < count; ++i) coords[i] = i;
        Rng rng(derive_seed(seed, "gradcheck." + probe_named[ti].first));
        rng.shuffle(coords);
        const int64_t take = std::min<int64_t>(count, sample_per_tensor);

        for (int64_t k = 0; k < take; ++k) {
            double* cell = tensor->data() + coords[k];
            const double saved = *cell;
            *cell = saved + epsilon;
            double up = forward_loss(probe, batch, false, 0).loss;
            *cell = saved - epsilon;
            double down = forward_loss(probe, batch, false, 0).loss;
            *cell = saved;
            double numeric = (up - down) / (2 * epsilon);
            double a = analytic.data()[coords[k]];
            double rel = std::abs(numeric - a) / std::max(1e-6, std::abs(numeric) + std::abs(a));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

double perplexity(const Seq2SeqParams& params, const std::vector<TaggedExample>& dev,
                  int64_t batch_size) {
    if (dev.empty()) throw ModelError("empty dev set");
    if (batch_size < 1) throw ModelError("batch_size must be >= 1");
    double total_nll = 0.0;
    int64_t total_tokens = 0;
    for (size_t at = 0; at < dev.size(); at += static_cast<size_t>(batch_size)) {
        size_t end = std::min(dev.size(), at + static_cast<size_t>(batch_size));
        std::vector<TaggedExample> batch(dev.begin() + at, dev.begin() + end);
        ForwardResult r = forward_loss(params, batch, false, 0);
        total_nll += r.loss * static_cast<double>(r.tokens);
        total_tokens += r.tokens;
    }
    return std::exp(total_nll / static_cast<double>(total_tokens));
}

}  // namespace stylemt
