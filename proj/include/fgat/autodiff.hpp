#pragma once

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "fgat/matrix.hpp"

namespace fgat::ad {

// One node of the dynamically built tape. Everything is a 2-D row-major
// array of doubles; scalars are 1x1, vectors Mx1.
struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    bool backward_done = false;
    std::vector<std::shared_ptr<Node>> parents;
    // accumulates this node's grad into its parents' grads
    std::function<void(Node&)> backward_rule;

    std::size_t size() const { return rows * cols; }
};

// Value-semantics handle to a tape node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor from_matrix(const Matrix& m, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& grad() const;
    double item() const;

    Matrix to_matrix() const;
    void zero_grad();

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// ---- differentiable operators ----

Tensor matmul(const Tensor& a, const Tensor& b);
// same shape, or b a 1xC row broadcast over a's rows
Tensor add(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// inverted dropout; identity when train is false
Tensor dropout(const Tensor& a, double p, std::mt19937_64& gen, bool train);
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
// per-segment exp-normalize of an Mx1 logit column
Tensor segment_softmax(const Tensor& logits, const std::vector<int>& segment_ids);
// out[s] = sum over entries e with segment_ids[e] == s of weights[e] * values_row[e]
Tensor segment_weighted_sum(const Tensor& weights, const Tensor& values,
                            const std::vector<int>& segment_ids, std::size_t num_segments);
Tensor rowwise_dot(const Tensor& a, const Tensor& b);
// per-row normalization with learnable 1xC gamma/beta
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
// mean binary cross-entropy over an Mx1 probability column; probabilities
// are clamped to [clip, 1-clip] before the logs
Tensor bce_loss(const Tensor& probs, const std::vector<double>& labels, double clip = 1e-7);
Tensor sum(const Tensor& a);

// Reverse-topological gradient accumulation from a scalar loss. A tape may
// be walked once; a second backward() through the same loss throws.
void backward(const Tensor& loss);

// ---- Adam ----

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(const std::vector<Tensor>& params, AdamConfig cfg);
    // bias-corrected update from the gradients currently on `params`
    void step(const std::vector<Tensor>& params);
    long step_count() const { return t_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

void zero_all_grads(const std::vector<Tensor>& params);

}  // namespace fgat::ad
