#include "stylemt/seq2seq_decode.hpp"

#include <cmath>

namespace stylemt {

namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// The incremental path below mirrors the training graph op for op (gate
// order, layer-norm epsilon, softmax shift), so force-decode equals the
// teacher-forced loss up to summation rounding.

Vector lstm_cell(const Matrix& w, const Matrix& u, const Matrix& b, const Vector& x,
                 Vector& h, Vector& c) {
    const int64_t H = h.size();
    Vector z = w * x + u * h + b.col(0);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    Vector i = z.segment(0, H).unaryExpr(sig);
    Vector f = z.segment(H, H).unaryExpr(sig);
    Vector o = z.segment(2 * H, H).unaryExpr(sig);
    Vector g = z.segment(3 * H, H).array().tanh();
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(c.array().tanh().matrix());
    return h;
}

Vector layer_norm(const Vector& x, const Matrix& gain, const Matrix& bias) {
    const double eps = 1e-6;
    const double m = static_cast<double>(x.size());
    double mean = x.sum() / m;
    double var = (x.array() - mean).square().sum() / m;
    double inv_std = 1.0 / std::sqrt(var + eps);
    return ((x.array() - mean) * inv_std * gain.col(0).array() + bias.col(0).array()).matrix();
}

struct EncodedSource {
    Matrix anns;  // 2H x S
    Matrix keys;  // A x S
    Vector h0, c0;
};

EncodedSource encode_source(const Seq2SeqParams& p, const std::vector<int32_t>& ids) {
    const int64_t H = p.config.hidden_dim;
    const int64_t S = static_cast<int64_t>(ids.size());
    EncodedSource enc;
    enc.anns.resize(2 * H, S);

    Vector h = Vector::Zero(H), c = Vector::Zero(H);
    for (int64_t t = 0; t < S; ++t) {
        Vector x = p.embed.row(ids[t]).transpose();
        lstm_cell(p.w_enc_f, p.u_enc_f, p.b_enc_f, x, h, c);
        enc.anns.col(t).head(H) = h;
    }
    Vector h_fwd_last = h;

    h.setZero();
    c.setZero();
    for (int64_t t = S - 1; t >= 0; --t) {
        Vector x = p.embed.row(ids[t]).transpose();
        lstm_cell(p.w_enc_b, p.u_enc_b, p.b_enc_b, x, h, c);
        enc.anns.col(t).tail(H) = h;
    }

    Vector summary(2 * H);
    summary.head(H) = h_fwd_last;
    summary.tail(H) = h;
    enc.h0 = (p.w_bridge_h * summary + p.b_bridge_h.col(0)).array().tanh();
    enc.c0 = (p.w_bridge_c * summary + p.b_bridge_c.col(0)).array().tanh();
    enc.keys = p.u_att_k * enc.anns;
    return enc;
}

struct MemberState {
    Vector h, c, ctx;
};

// Advances one member by one token and returns its log-probability column.
Vector member_step(const Seq2SeqParams& p, const EncodedSource& enc, MemberState& st,
                   int32_t token) {
    const int64_t H = p.config.hidden_dim;
    Vector y = p.embed.row(token).transpose();
    Vector x(y.size() + 2 * H);
    x.head(y.size()) = y;
    x.tail(2 * H) = st.ctx;
    lstm_cell(p.w_dec, p.u_dec, p.b_dec, x, st.h, st.c);
    Vector s = layer_norm(st.h, p.ln_s_gain, p.ln_s_bias);

    if (enc.anns.cols() > 0) {
        Vector query = p.w_att_q * s + p.b_att.col(0);
        Vector scores(enc.anns.cols());
        for (int64_t j = 0; j < enc.anns.cols(); ++j)
            scores(j) = (p.v_att * (enc.keys.col(j) + query).array().tanh().matrix())(0);
        Vector shifted = (scores.array() - scores.maxCoeff()).exp();
        Vector alpha = shifted / shifted.sum();
        st.ctx = enc.anns * alpha;
    } else {
        st.ctx.setZero();
    }

    Vector rin(s.size() + st.ctx.size() + y.size());
    rin.head(s.size()) = s;
    rin.segment(s.size(), st.ctx.size()) = st.ctx;
    rin.tail(y.size()) = y;
    Vector r = (p.w_read * rin + p.b_read.col(0)).array().tanh();
    Vector r_ln = layer_norm(r, p.ln_r_gain, p.ln_r_bias);
    Vector logits = p.embed * r_ln + p.b_vocab.col(0);

    double max = logits.maxCoeff();
    Vector shifted = (logits.array() - max).exp();
    return (logits.array() - max - std::log(shifted.sum())).matrix();
}

class EnsembleScorer {
  public:
    struct State {
        std::vector<MemberState> members;
    };

    EnsembleScorer(const std::vector<Seq2SeqParams>& models, const TokenSeq& src,
                   bool log_space)
        : models_(models), log_space_(log_space) {
        if (models.empty()) throw ModelError("empty ensemble");
        const auto& vocab_tokens = models[0].vocab.tokens();
        for (const auto& m : models)
            if (m.vocab.tokens() != vocab_tokens)
                throw ModelError("ensemble members must share the vocabulary");
        std::vector<int32_t> ids = models[0].vocab.encode(src);
        for (const auto& m : models_) encoded_.push_back(encode_source(m, ids));
    }

    State start() const {
        State st;
        for (size_t i = 0; i < models_.size(); ++i) {
            MemberState ms;
            ms.h = encoded_[i].h0;
            ms.c = encoded_[i].c0;
            ms.ctx = Vector::Zero(2 * models_[i].config.hidden_dim);
            st.members.push_back(std::move(ms));
        }
        return st;
    }

    // Ensembled distribution for scoring: arithmetic mean of member softmax
    // distributions (then logged), or mean of member log-probabilities.
    std::pair<Vector, State> step(const State& state, int32_t token) const {
        auto [raw, next] = step_raw(state, token);
        if (!log_space_) raw = raw.array().log();
        return {std::move(raw), std::move(next)};
    }

    // Distribution exactly as ensembled: probabilities in mean mode,
    // log-probabilities in log-space mode.
    std::pair<Vector, State> step_raw(const State& state, int32_t token) const {
        State next = state;
        Vector acc = Vector::Zero(models_[0].vocab.size());
        for (size_t i = 0; i < models_.size(); ++i) {
            Vector log_probs = member_step(models_[i], encoded_[i], next.members[i], token);
            acc += log_space_ ? log_probs : log_probs.array().exp().matrix();
        }
        acc /= static_cast<double>(models_.size());
        return {std::move(acc), std::move(next)};
    }

  private:
    const std::vector<Seq2SeqParams>& models_;
    bool log_space_;
    std::vector<EncodedSource> encoded_;
};

}  // namespace

BeamHyp decode_sentence(const std::vector<Seq2SeqParams>& models, const TokenSeq& src,
                        const DecodeConfig& config) {
    EnsembleScorer scorer(models, src, config.log_space_ensemble);
    int64_t max_len = 2 * static_cast<int64_t>(src.size()) + config.max_len_slack;
    return beam_search(scorer, config.beam, max_len);
}

TokenSeq beam_decode(const std::vector<Seq2SeqParams>& models, const TokenSeq& src,
                     int64_t beam) {
    DecodeConfig config;
    config.beam = beam;
    BeamHyp hyp = decode_sentence(models, src, config);
    TokenSeq out;
    out.reserve(hyp.tokens.size());
    for (int32_t id : hyp.tokens) out.push_back(models[0].vocab.token(id));
    return out;
}

double force_decode_nll(const Seq2SeqParams& model, const TokenSeq& src,
                        const TokenSeq& tgt) {
    const std::vector<Seq2SeqParams> one = {model};  // scorer holds a reference
    EnsembleScorer scorer(one, src, false);
    auto state = scorer.start();
    std::vector<int32_t> ids = model.vocab.encode(tgt);
    ids.push_back(SeqVocab::kEos);
    double total = 0.0;
    int32_t prev = SeqVocab::kBos;
    for (int32_t id : ids) {
        auto [log_probs, next] = scorer.step(state, prev);
        total -= log_probs(id);
        state = std::move(next);
        prev = id;
    }
    return total;
}

Eigen::MatrixXd step_distributions(const std::vector<Seq2SeqParams>& models,
                                   const TokenSeq& src, const TokenSeq& tgt,
                                   const DecodeConfig& config) {
    EnsembleScorer scorer(models, src, config.log_space_ensemble);
    auto state = scorer.start();
    std::vector<int32_t> ids = models[0].vocab.encode(tgt);
    Matrix out(models[0].vocab.size(), static_cast<int64_t>(ids.size()) + 1);
    int32_t prev = SeqVocab::kBos;
    for (size_t t = 0; t <= ids.size(); ++t) {
        auto [dist, next] = scorer.step_raw(state, prev);
        out.col(static_cast<int64_t>(t)) = dist;
        state = std::move(next);
        if (t < ids.size()) prev = ids[t];
    }
    return out;
}

}  // namespace stylemt
