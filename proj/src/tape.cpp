#include "stylemt/tape.hpp"

#include <cmath>

namespace stylemt {

Tape::Id Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&)> back) {
    Node node;
    node.grad = Matrix::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    node.needs_grad = needs_grad;
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Matrix value, bool needs_grad) {
    return push(std::move(value), needs_grad, {});
}

Tape::Id Tape::matmul(Id a, Id b) {
    if (value(a).cols() != value(b).rows()) throw TapeError("matmul shape mismatch");
    Id out = push(value(a) * value(b), needs(a) || needs(b), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad_ref(out);
        if (t.needs(a)) t.grad_ref(a).noalias() += g * t.value(b).transpose();
        if (t.needs(b)) t.grad_ref(b).noalias() += t.value(a).transpose() * g;
    };
    return out;
}

Tape::Id Tape::add(Id a, Id b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw TapeError("add shape mismatch");
    Id out = push(value(a) + value(b), needs(a) || needs(b), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad_ref(out);
        if (t.needs(a)) t.grad_ref(a) += g;
        if (t.needs(b)) t.grad_ref(b) += g;
    };
    return out;
}

Tape::Id Tape::sub(Id a, Id b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw TapeError("sub shape mismatch");
    Id out = push(value(a) - value(b), needs(a) || needs(b), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad_ref(out);
        if (t.needs(a)) t.grad_ref(a) += g;
        if (t.needs(b)) t.grad_ref(b) -= g;
    };
    return out;
}

Tape::Id Tape::add_bias(Id x, Id bias) {
    if (value(bias).cols() != 1 || value(bias).rows() != value(x).rows())
        throw TapeError("add_bias wants a column bias matching x rows");
    Id out = push(value(x).colwise() + value(bias).col(0), needs(x) || needs(bias), {});
    nodes_[out].back = [x, bias, out](Tape& t) {
        const Matrix& g = t.grad_ref(out);
        if (t.needs(x)) t.grad_ref(x) += g;
        if (t.needs(bias)) t.grad_ref(bias).col(0) += g.rowwise().sum();
    };
    return out;
}

Tape::Id Tape::cmul(Id a, Id b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
        throw TapeError("cmul shape mismatch");
    Id out = push(value(a).cwiseProduct(value(b)), needs(a) || needs(b), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad_ref(out);
        if (t.needs(a)) t.grad_ref(a) += g.cwiseProduct(t.value(b));
        if (t.needs(b)) t.grad_ref(b) += g.cwiseProduct(t.value(a));
    };
    return out;
}

Tape::Id Tape::cmul_const(Id x, const Matrix& factor) {
    if (value(x).rows() != factor.rows() || value(x).cols() != factor.cols())
        throw TapeError("cmul_const shape mismatch");
    Id out = push(value(x).cwiseProduct(factor), needs(x), {});
    nodes_[out].back = [x, out, factor](Tape& t) {
        if (t.needs(x)) t.grad_ref(x) += t.grad_ref(out).cwiseProduct(factor);
    };
    return out;
}

Tape::Id Tape::scale(Id x, double factor) {
    Id out = push(value(x) * factor, needs(x), {});
    nodes_[out].back = [x, out, factor](Tape& t) {
        if (t.needs(x)) t.grad_ref(x) += t.grad_ref(out) * factor;
    };
    return out;
}

Tape::Id Tape::tanh_op(Id x) {
    Id out = push(value(x).array().tanh().matrix(), needs(x), {});
    nodes_[out].back = [x, out](Tape& t) {
        if (!t.needs(x)) return;
        const Matrix& y = t.value(out);
        t.grad_ref(x).array() += t.grad_ref(out).array() * (1.0 - y.array().square());
    };
    return out;
}

Tape::Id Tape::sigmoid_op(Id x) {
    Matrix y = (1.0 / (1.0 + (-value(x).array()).exp())).matrix();
    Id out = push(std::move(y), needs(x), {});
    nodes_[out].back = [x, out](Tape& t) {
        if (!t.needs(x)) return;
        const Matrix& y = t.value(out);
        t.grad_ref(x).array() += t.grad_ref(out).array() * y.array() * (1.0 - y.array());
    };
    return out;
}

Tape::Id Tape::vstack(const std::vector<Id>& parts) {
    if (parts.empty()) throw TapeError("vstack of nothing");
    int64_t rows = 0;
    const int64_t cols = value(parts[0]).cols();
    bool any_grad = false;
    for (Id p : parts) {
        if (value(p).cols() != cols) throw TapeError("vstack column mismatch");
        rows += value(p).rows();
        any_grad = any_grad || needs(p);
    }
    Matrix out(rows, cols);
    int64_t at = 0;
    for (Id p : parts) {
        out.middleRows(at, value(p).rows()) = value(p);
        at += value(p).rows();
    }
    Id id = push(std::move(out), any_grad, {});
    nodes_[id].back = [parts, id](Tape& t) {
        const Matrix& g = t.grad_ref(id);
        int64_t at = 0;
        for (Id p : parts) {
            int64_t r = t.value(p).rows();
            if (t.needs(p)) t.grad_ref(p) += g.middleRows(at, r);
            at += r;
        }
    };
    return id;
}

Tape::Id Tape::slice_rows(Id x, int64_t row0, int64_t rows) {
    if (row0 < 0 || rows < 1 || row0 + rows > value(x).rows())
        throw TapeError("slice_rows out of range");
    Id out = push(value(x).middleRows(row0, rows), needs(x), {});
    nodes_[out].back = [x, out, row0, rows](Tape& t) {
        if (t.needs(x)) t.grad_ref(x).middleRows(row0, rows) += t.grad_ref(out);
    };
    return out;
}

Tape::Id Tape::lookup(Id table, const std::vector<int32_t>& ids) {
    const Matrix& tab = value(table);
    Matrix out(tab.cols(), static_cast<int64_t>(ids.size()));
    for (size_t j = 0; j < ids.size(); ++j) {
        if (ids[j] < 0 || ids[j] >= tab.rows()) throw TapeError("lookup id out of range");
        out.col(static_cast<int64_t>(j)) = tab.row(ids[j]).transpose();
    }
    Id id = push(std::move(out), needs(table), {});
    nodes_[id].back = [table, id, ids](Tape& t) {
        if (!t.needs(table)) return;
        const Matrix& g = t.grad_ref(id);
        for (size_t j = 0; j < ids.size(); ++j)
            t.grad_ref(table).row(ids[j]) += g.col(static_cast<int64_t>(j)).transpose();
    };
    return id;
}

Tape::Id Tape::softmax_cols_masked(Id x, const Matrix& mask) {
    const Matrix& in = value(x);
    if (in.rows() != mask.rows() || in.cols() != mask.cols())
        throw TapeError("softmax mask shape mismatch");
    Matrix out = Matrix::Zero(in.rows(), in.cols());
    for (int64_t j = 0; j < in.cols(); ++j) {
        double max = -std::numeric_limits<double>::infinity();
        for (int64_t i = 0; i < in.rows(); ++i)
            if (mask(i, j) != 0.0) max = std::max(max, in(i, j));
        if (!std::isfinite(max)) continue;  // fully masked column
        double sum = 0.0;
        for (int64_t i = 0; i < in.rows(); ++i) {
            if (mask(i, j) == 0.0) continue;
            out(i, j) = std::exp(in(i, j) - max);
            sum += out(i, j);
        }
        out.col(j) /= sum;
    }
    Id id = push(std::move(out), needs(x), {});
    nodes_[id].back = [x, id, mask](Tape& t) {
        if (!t.needs(x)) return;
        const Matrix& y = t.value(id);
        const Matrix& g = t.grad_ref(id);
        Matrix& gx = t.grad_ref(x);
        for (int64_t j = 0; j < y.cols(); ++j) {
            double dot = y.col(j).dot(g.col(j));
            for (int64_t i = 0; i < y.rows(); ++i) {
                if (mask(i, j) == 0.0) continue;
                gx(i, j) += y(i, j) * (g(i, j) - dot);
            }
        }
    };
    return id;
}

Tape::Id Tape::layer_norm_cols(Id x, Id gain, Id bias, double eps) {
    const Matrix& in = value(x);
    const int64_t m = in.rows();
    if (value(gain).rows() != m || value(bias).rows() != m || value(gain).cols() != 1 ||
        value(bias).cols() != 1)
        throw TapeError("layer_norm gain/bias must be (rows,1)");

    Matrix normed(m, in.cols());
    Eigen::VectorXd inv_std(in.cols());
    for (int64_t j = 0; j < in.cols(); ++j) {
        double mean = in.col(j).mean();
        double var = (in.col(j).array() - mean).square().sum() / static_cast<double>(m);
        inv_std(j) = 1.0 / std::sqrt(var + eps);
        normed.col(j) = (in.col(j).array() - mean) * inv_std(j);
    }
    Matrix out = ((normed.array().colwise() * value(gain).col(0).array()).colwise() +
                  value(bias).col(0).array())
                     .matrix();
    bool any = needs(x) || needs(gain) || needs(bias);
    Id id = push(std::move(out), any, {});
    nodes_[id].back = [x, gain, bias, id, normed, inv_std](Tape& t) {
        const Matrix& g = t.grad_ref(id);
        const int64_t m = normed.rows();
        if (t.needs(gain))
            t.grad_ref(gain).col(0) += g.cwiseProduct(normed).rowwise().sum();
        if (t.needs(bias)) t.grad_ref(bias).col(0) += g.rowwise().sum();
        if (!t.needs(x)) return;
        const Eigen::VectorXd& gn = t.value(gain).col(0);
        Matrix& gx = t.grad_ref(x);
        for (int64_t j = 0; j < normed.cols(); ++j) {
            // d/dx of (x - mean) * inv_std through mean and variance
            Eigen::VectorXd dnorm = g.col(j).cwiseProduct(gn);
            double sum_dnorm = dnorm.sum();
            double dot = dnorm.dot(normed.col(j));
            gx.col(j) += inv_std(j) *
                         (dnorm.array() - sum_dnorm / static_cast<double>(m) -
                          normed.col(j).array() * dot / static_cast<double>(m))
                             .matrix();
        }
    };
    return id;
}

Tape::Id Tape::colblend(const Eigen::RowVectorXd& keep, Id a, Id b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.rows() != vb.rows() || va.cols() != vb.cols() || keep.cols() != va.cols())
        throw TapeError("colblend shape mismatch");
    Matrix out(va.rows(), va.cols());
    for (int64_t j = 0; j < va.cols(); ++j) out.col(j) = keep(j) != 0.0 ? va.col(j) : vb.col(j);
    Id id = push(std::move(out), needs(a) || needs(b), {});
    nodes_[id].back = [a, b, id, keep](Tape& t) {
        const Matrix& g = t.grad_ref(id);
        for (int64_t j = 0; j < g.cols(); ++j) {
            if (keep(j) != 0.0) {
                if (t.needs(a)) t.grad_ref(a).col(j) += g.col(j);
            } else if (t.needs(b)) {
                t.grad_ref(b).col(j) += g.col(j);
            }
        }
    };
    return id;
}

Tape::Id Tape::masked_nll(Id logits, const std::vector<int32_t>& targets,
                          const Eigen::RowVectorXd& mask) {
    const Matrix& in = value(logits);
    if (static_cast<int64_t>(targets.size()) != in.cols() || mask.cols() != in.cols())
        throw TapeError("masked_nll batch size mismatch");
    double total = 0.0;
    Matrix probs(in.rows(), in.cols());
    for (int64_t j = 0; j < in.cols(); ++j) {
        if (targets[j] < 0 || targets[j] >= in.rows())
            throw TapeError("masked_nll target out of range");
        double max = in.col(j).maxCoeff();
        Eigen::VectorXd e = (in.col(j).array() - max).exp();
        double z = e.sum();
        probs.col(j) = e / z;
        if (mask(j) != 0.0) total += mask(j) * (std::log(z) + max - in(targets[j], j));
    }
    Matrix out(1, 1);
    out(0, 0) = total;
    Id id = push(std::move(out), needs(logits), {});
    nodes_[id].back = [logits, id, targets, mask, probs](Tape& t) {
        if (!t.needs(logits)) return;
        double g = t.grad_ref(id)(0, 0);
        Matrix& gx = t.grad_ref(logits);
        for (int64_t j = 0; j < probs.cols(); ++j) {
            if (mask(j) == 0.0) continue;
            gx.col(j) += g * mask(j) * probs.col(j);
            gx(targets[j], j) -= g * mask(j);
        }
    };
    return id;
}

Tape::Id Tape::add_scalars(const std::vector<Id>& scalars) {
    if (scalars.empty()) throw TapeError("add_scalars of nothing");
    Matrix out = Matrix::Zero(1, 1);
    bool any = false;
    for (Id s : scalars) {
        if (value(s).rows() != 1 || value(s).cols() != 1)
            throw TapeError("add_scalars wants (1,1) nodes");
        out(0, 0) += value(s)(0, 0);
        any = any || needs(s);
    }
    Id id = push(std::move(out), any, {});
    nodes_[id].back = [scalars, id](Tape& t) {
        double g = t.grad_ref(id)(0, 0);
        for (Id s : scalars)
            if (t.needs(s)) t.grad_ref(s)(0, 0) += g;
    };
    return id;
}

void Tape::backward(Id root) {
    if (value(root).rows() != 1 || value(root).cols() != 1)
        throw TapeError("backward root must be scalar");
    grad_ref(root)(0, 0) = 1.0;
    for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id) {
        if (nodes_[id].back && nodes_[id].needs_grad) nodes_[id].back(*this);
    }
}

}  // namespace stylemt
