#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace stylemt {

class TapeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Reverse-mode autodiff over dense double matrices. Column j of every value
// is batch element j; ops that reduce do so per column unless noted. Nodes
// are created in topological order, so backward() is a reverse sweep.
class Tape {
  public:
    using Id = int32_t;
    using Matrix = Eigen::MatrixXd;

    Id leaf(Matrix value, bool needs_grad);
    Id constant(Matrix value) { return leaf(std::move(value), false); }

    Id matmul(Id a, Id b);                       // (m,k)·(k,n)
    Id add(Id a, Id b);                          // same shape
    Id sub(Id a, Id b);
    Id add_bias(Id x, Id bias);                  // bias (m,1) broadcast over columns
    Id cmul(Id a, Id b);                         // elementwise
    Id cmul_const(Id x, const Matrix& factor);   // elementwise by a constant
    Id scale(Id x, double factor);
    Id tanh_op(Id x);
    Id sigmoid_op(Id x);
    Id vstack(const std::vector<Id>& parts);     // concatenate rows
    Id slice_rows(Id x, int64_t row0, int64_t rows);

    // Y(:,j) = table(ids[j],:)^T; rows of `table` are embeddings.
    Id lookup(Id table, const std::vector<int32_t>& ids);

    // Per-column softmax over entries where mask != 0; masked entries are 0.
    // Columns whose mask is all zero yield an all-zero column.
    Id softmax_cols_masked(Id x, const Matrix& mask);

    // Per-column layer normalization with learned gain/bias (both (m,1)).
    Id layer_norm_cols(Id x, Id gain, Id bias, double eps = 1e-6);

    // Column j of the result is a's column where keep(j) != 0, else b's.
    Id colblend(const Eigen::RowVectorXd& keep, Id a, Id b);

    // Scalar (1,1) node: sum over columns j of mask(j) * nll(targets[j] | logits(:,j)).
    Id masked_nll(Id logits, const std::vector<int32_t>& targets,
                  const Eigen::RowVectorXd& mask);

    Id add_scalars(const std::vector<Id>& scalars);

    const Matrix& value(Id id) const { return nodes_[id].value; }
    const Matrix& grad(Id id) const { return nodes_[id].grad; }

    // Seeds the (1,1) root with 1 and sweeps the tape in reverse.
    void backward(Id root);

    size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        std::function<void(Tape&)> back;  // empty for leaves/constants
    };

    Id push(Matrix value, bool needs_grad, std::function<void(Tape&)> back);
    Matrix& grad_ref(Id id) { return nodes_[id].grad; }
    bool needs(Id id) const { return nodes_[id].needs_grad; }

    std::vector<Node> nodes_;
};

}  // namespace stylemt
