#include "fgat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "fgat/rng.hpp"

namespace fgat::ad {

namespace {

std::shared_ptr<Node> make_node(std::size_t rows, std::size_t cols,
                                std::vector<std::shared_ptr<Node>> parents = {}) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value.assign(rows * cols, 0.0);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->grad.assign(rows * cols, 0.0);
    return n;
}

void check_defined(const Tensor& t) {
    if (!t.defined()) throw std::invalid_argument("operation on an undefined tensor");
}

}  // namespace

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(rows * cols, 0.0);
    return Tensor(n);
}

Tensor Tensor::from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                           bool requires_grad) {
    if (values.size() != rows * cols) throw std::invalid_argument("value count does not match shape");
    Tensor t = zeros(rows, cols, requires_grad);
    t.node()->value = std::move(values);
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values(1, 1, {v}, requires_grad);
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
    return from_values(m.rows, m.cols, m.data, requires_grad);
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->requires_grad) throw std::logic_error("tensor does not track gradients");
    return node_->grad;
}

double Tensor::item() const {
    if (size() != 1) throw std::logic_error("item() on a non-scalar tensor");
    return node_->value[0];
}

Matrix Tensor::to_matrix() const {
    Matrix m(rows(), cols());
    m.data = node_->value;
    return m;
}

void Tensor::zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_defined(a);
    check_defined(b);
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    auto out = make_node(m, n, {a.node(), b.node()});
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* ov = out->value.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
        }
    out->backward_rule = [m, k, n](Node& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        const double* g = self.grad.data();
        if (A.requires_grad) {
            double* ga = A.grad.data();
            const double* bv = B.value.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double gij = g[i * n + j];
                    if (gij == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv[p * n + j];
                }
        }
        if (B.requires_grad) {
            double* gb = B.grad.data();
            const double* av = A.value.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = av[i * k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                }
        }
    };
    return Tensor(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_defined(a);
    check_defined(b);
    const bool broadcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
    if (!broadcast && (a.rows() != b.rows() || a.cols() != b.cols()))
        throw std::invalid_argument("add shape mismatch");
    auto out = make_node(a.rows(), a.cols(), {a.node(), b.node()});
    const std::size_t c = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < c; ++j)
            out->value[i * c + j] = a.values()[i * c + j] + b.values()[(broadcast ? 0 : i) * c + j];
    out->backward_rule = [broadcast, c](Node& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        if (A.requires_grad)
            for (std::size_t i = 0; i < self.size(); ++i) A.grad[i] += self.grad[i];
        if (B.requires_grad) {
            if (broadcast) {
                for (std::size_t i = 0; i < self.rows; ++i)
                    for (std::size_t j = 0; j < c; ++j) B.grad[j] += self.grad[i * c + j];
            } else {
                for (std::size_t i = 0; i < self.size(); ++i) B.grad[i] += self.grad[i];
            }
        }
    };
    return Tensor(out);
}

Tensor scalar_mul(const Tensor& a, double c) {
    check_defined(a);
    auto out = make_node(a.rows(), a.cols(), {a.node()});
    for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = c * a.values()[i];
    out->backward_rule = [c](Node& self) {
        auto& A = *self.parents[0];
        if (!A.requires_grad) return;
        for (std::size_t i = 0; i < self.size(); ++i) A.grad[i] += c * self.grad[i];
    };
    return Tensor(out);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat of nothing");
    std::size_t rows = parts[0].rows(), total = 0;
    std::vector<std::shared_ptr<Node>> parents;
    for (const Tensor& p : parts) {
        check_defined(p);
        if (p.rows() != rows) throw std::invalid_argument("concat row mismatch");
        total += p.cols();
        parents.push_back(p.node());
    }
    auto out = make_node(rows, total, std::move(parents));
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            std::copy_n(p.values().data() + i * p.cols(), p.cols(),
                        out->value.data() + i * total + off);
        off += p.cols();
    }
    out->backward_rule = [rows, total](Node& self) {
        std::size_t off = 0;
        for (auto& parent : self.parents) {
            if (parent->requires_grad)
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < parent->cols; ++j)
                        parent->grad[i * parent->cols + j] += self.grad[i * total + off + j];
            off += parent->cols;
        }
    };
    return Tensor(out);
}

namespace {

template <typename Fwd, typename Back>
Tensor elementwise(const Tensor& a, Fwd fwd, Back back) {
    check_defined(a);
    auto out = make_node(a.rows(), a.cols(), {a.node()});
    for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = fwd(a.values()[i]);
    out->backward_rule = [back](Node& self) {
        auto& A = *self.parents[0];
        if (!A.requires_grad) return;
        for (std::size_t i = 0; i < self.size(); ++i)
            A.grad[i] += self.grad[i] * back(A.value[i], self.value[i]);
    };
    return Tensor(out);
}

}  // namespace

Tensor leaky_relu(const Tensor& a, double slope) {
    return elementwise(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& a) {
    return elementwise(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return elementwise(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor dropout(const Tensor& a, double p, std::mt19937_64& gen, bool train) {
    check_defined(a);
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout probability must be in [0,1)");
    if (!train || p == 0.0) return a;
    auto out = make_node(a.rows(), a.cols(), {a.node()});
    auto mask = std::make_shared<std::vector<double>>(a.size());
    const double scale = 1.0 / (1.0 - p);
    for (std::size_t i = 0; i < a.size(); ++i) {
        (*mask)[i] = rng::uniform01(gen) >= p ? scale : 0.0;
        out->value[i] = a.values()[i] * (*mask)[i];
    }
    out->backward_rule = [mask](Node& self) {
        auto& A = *self.parents[0];
        if (!A.requires_grad) return;
        for (std::size_t i = 0; i < self.size(); ++i) A.grad[i] += self.grad[i] * (*mask)[i];
    };
    return Tensor(out);
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
    check_defined(table);
    const std::size_t c = table.cols();
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
            throw std::out_of_range("gather_rows id out of range");
    auto out = make_node(ids.size(), c, {table.node()});
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table.values().data() + static_cast<std::size_t>(ids[i]) * c, c,
                    out->value.data() + i * c);
    out->backward_rule = [ids, c](Node& self) {
        auto& T = *self.parents[0];
        if (!T.requires_grad) return;
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < c; ++j)
                T.grad[static_cast<std::size_t>(ids[i]) * c + j] += self.grad[i * c + j];
    };
    return Tensor(out);
}

Tensor segment_softmax(const Tensor& logits, const std::vector<int>& segment_ids) {
    check_defined(logits);
    if (logits.cols() != 1 || logits.rows() != segment_ids.size())
        throw std::invalid_argument("segment_softmax expects an Mx1 logit column");
    int max_seg = -1;
    for (int s : segment_ids) {
        if (s < 0) throw std::invalid_argument("negative segment id");
        max_seg = std::max(max_seg, s);
    }
    const std::size_t num_seg = static_cast<std::size_t>(max_seg) + 1;
    std::vector<double> seg_max(num_seg, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < segment_ids.size(); ++i)
        seg_max[segment_ids[i]] = std::max(seg_max[segment_ids[i]], logits.values()[i]);

    auto out = make_node(logits.rows(), 1, {logits.node()});
    std::vector<double> seg_sum(num_seg, 0.0);
    for (std::size_t i = 0; i < segment_ids.size(); ++i) {
        out->value[i] = std::exp(logits.values()[i] - seg_max[segment_ids[i]]);
        seg_sum[segment_ids[i]] += out->value[i];
    }
    for (std::size_t i = 0; i < segment_ids.size(); ++i) out->value[i] /= seg_sum[segment_ids[i]];

    out->backward_rule = [segment_ids, num_seg](Node& self) {
        auto& L = *self.parents[0];
        if (!L.requires_grad) return;
        std::vector<double> seg_dot(num_seg, 0.0);
        for (std::size_t i = 0; i < self.size(); ++i)
            seg_dot[segment_ids[i]] += self.value[i] * self.grad[i];
        for (std::size_t i = 0; i < self.size(); ++i)
            L.grad[i] += self.value[i] * (self.grad[i] - seg_dot[segment_ids[i]]);
    };
    return Tensor(out);
}

Tensor segment_weighted_sum(const Tensor& weights, const Tensor& values,
                            const std::vector<int>& segment_ids, std::size_t num_segments) {
    check_defined(weights);
    check_defined(values);
    if (weights.cols() != 1 || weights.rows() != values.rows() ||
        weights.rows() != segment_ids.size())
        throw std::invalid_argument("segment_weighted_sum shape mismatch");
    const std::size_t c = values.cols();
    for (int s : segment_ids)
        if (s < 0 || static_cast<std::size_t>(s) >= num_segments)
            throw std::out_of_range("segment id out of range");
    auto out = make_node(num_segments, c, {weights.node(), values.node()});
    for (std::size_t e = 0; e < segment_ids.size(); ++e) {
        const double w = weights.values()[e];
        const std::size_t s = static_cast<std::size_t>(segment_ids[e]);
        for (std::size_t j = 0; j < c; ++j) out->value[s * c + j] += w * values.values()[e * c + j];
    }
    out->backward_rule = [segment_ids, c](Node& self) {
        auto& W = *self.parents[0];
        auto& V = *self.parents[1];
        for (std::size_t e = 0; e < segment_ids.size(); ++e) {
            const std::size_t s = static_cast<std::size_t>(segment_ids[e]);
            if (W.requires_grad) {
                double acc = 0.0;
                for (std::size_t j = 0; j < c; ++j)
                    acc += self.grad[s * c + j] * V.value[e * c + j];
                W.grad[e] += acc;
            }
            if (V.requires_grad) {
                const double w = W.value[e];
                for (std::size_t j = 0; j < c; ++j)
                    V.grad[e * c + j] += w * self.grad[s * c + j];
            }
        }
    };
    return Tensor(out);
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
    check_defined(a);
    check_defined(b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("rowwise_dot shape mismatch");
    const std::size_t c = a.cols();
    auto out = make_node(a.rows(), 1, {a.node(), b.node()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += a.values()[i * c + j] * b.values()[i * c + j];
        out->value[i] = acc;
    }
    out->backward_rule = [c](Node& self) {
        auto& A = *self.parents[0];
        auto& B = *self.parents[1];
        for (std::size_t i = 0; i < self.rows; ++i) {
            const double g = self.grad[i];
            if (A.requires_grad)
                for (std::size_t j = 0; j < c; ++j) A.grad[i * c + j] += g * B.value[i * c + j];
            if (B.requires_grad)
                for (std::size_t j = 0; j < c; ++j) B.grad[i * c + j] += g * A.value[i * c + j];
        }
    };
    return Tensor(out);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    check_defined(x);
    check_defined(gamma);
    check_defined(beta);
    const std::size_t r = x.rows(), c = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c)
        throw std::invalid_argument("layer_norm gamma/beta must be 1xC");
    if (eps <= 0.0) throw std::invalid_argument("layer_norm eps must be positive");

    auto out = make_node(r, c, {x.node(), gamma.node(), beta.node()});
    auto xhat = std::make_shared<std::vector<double>>(r * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += x.values()[i * c + j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = x.values()[i * c + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = inv;
        for (std::size_t j = 0; j < c; ++j) {
            const double h = (x.values()[i * c + j] - mean) * inv;
            (*xhat)[i * c + j] = h;
            out->value[i * c + j] = gamma.values()[j] * h + beta.values()[j];
        }
    }
    out->backward_rule = [r, c, xhat, inv_std](Node& self) {
        auto& X = *self.parents[0];
        auto& G = *self.parents[1];
        auto& B = *self.parents[2];
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double g = self.grad[i * c + j];
                if (G.requires_grad) G.grad[j] += g * (*xhat)[i * c + j];
                if (B.requires_grad) B.grad[j] += g;
            }
            if (!X.requires_grad) continue;
            double mean_dh = 0.0, mean_dh_xhat = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double dh = self.grad[i * c + j] * G.value[j];
                mean_dh += dh;
                mean_dh_xhat += dh * (*xhat)[i * c + j];
            }
            mean_dh /= static_cast<double>(c);
            mean_dh_xhat /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j) {
                const double dh = self.grad[i * c + j] * G.value[j];
                X.grad[i * c + j] +=
                    (*inv_std)[i] * (dh - mean_dh - (*xhat)[i * c + j] * mean_dh_xhat);
            }
        }
    };
    return Tensor(out);
}

Tensor bce_loss(const Tensor& probs, const std::vector<double>& labels, double clip) {
    check_defined(probs);
    if (probs.cols() != 1 || probs.rows() != labels.size())
        throw std::invalid_argument("bce_loss expects an Mx1 probability column");
    for (double y : labels)
        if (y != 0.0 && y != 1.0) throw std::invalid_argument("bce labels must be 0 or 1");
    const std::size_t m = labels.size();
    auto clipped = std::make_shared<std::vector<double>>(m);
    auto out = make_node(1, 1, {probs.node()});
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = std::clamp(probs.values()[i], clip, 1.0 - clip);
        (*clipped)[i] = p;
        total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    out->value[0] = total / static_cast<double>(m);
    if (!std::isfinite(out->value[0])) throw std::runtime_error("non-finite BCE loss");
    out->backward_rule = [labels, clipped, m](Node& self) {
        auto& P = *self.parents[0];
        if (!P.requires_grad) return;
        const double g = self.grad[0] / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double p = (*clipped)[i];
            P.grad[i] += g * (p - labels[i]) / (p * (1.0 - p));
        }
    };
    return Tensor(out);
}

Tensor sum(const Tensor& a) {
    check_defined(a);
    auto out = make_node(1, 1, {a.node()});
    for (double v : a.values()) out->value[0] += v;
    out->backward_rule = [](Node& self) {
        auto& A = *self.parents[0];
        if (!A.requires_grad) return;
        for (double& g : A.grad) g += self.grad[0];
    };
    return Tensor(out);
}

void backward(const Tensor& loss) {
    check_defined(loss);
    if (loss.size() != 1) throw std::invalid_argument("backward requires a scalar loss");
    Node* root = loss.node().get();
    if (root->backward_done) throw std::logic_error("backward already ran on this tape");
    if (!root->requires_grad) return;

    // iterative post-order DFS -> topological order
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx++].get();
            if (parent->requires_grad && !visited.contains(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    root->grad.assign(1, 1.0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* node = *it;
        node->backward_done = true;
        if (node->backward_rule) node->backward_rule(*node);
    }
}

AdamState::AdamState(const std::vector<Tensor>& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamState::step(const std::vector<Tensor>& params) {
    if (params.size() != m_.size()) throw std::invalid_argument("Adam parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& g = params[k].grad();
        auto& vals = params[k].node()->value;
        if (g.size() != m_[k].size()) throw std::invalid_argument("Adam shape mismatch");
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(g[i])) throw std::runtime_error("non-finite gradient in Adam step");
            m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g[i];
            v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m_[k][i] / bc1;
            const double vhat = v_[k][i] / bc2;
            vals[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void zero_all_grads(const std::vector<Tensor>& params) {
    for (Tensor p : params) p.zero_grad();
}

}  // namespace fgat::ad
