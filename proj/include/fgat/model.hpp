#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fgat/autodiff.hpp"
#include "fgat/graph.hpp"

namespace fgat::model {

struct ModelConfig {
    int embedding_dim = 128;
    int num_heads = 4;
    int head_dim = 32;  // num_heads * head_dim must equal embedding_dim
    int num_layers = 4;
    double dropout_p = 0.1;
    double leaky_slope = 0.2;
    double layer_norm_eps = 1e-5;

    int hidden_dim() const { return num_heads * head_dim; }
    void validate() const;
};

struct LayerParams {
    std::vector<ad::Tensor> head_weight;  // per head: F_in x head_dim
    std::vector<ad::Tensor> head_attn;    // per head: 2*head_dim x 1
    ad::Tensor proj_weight;               // hidden x F_out
    ad::Tensor proj_bias;                 // 1 x F_out
    ad::Tensor ln_gamma;                  // 1 x F_in
    ad::Tensor ln_beta;                   // 1 x F_in
};

// Message-passing topology: directed (dst <- src) entries including both
// directions of every input edge and one self-loop per node, ordered by
// (dst, src) so each destination forms a contiguous softmax segment.
struct MessageGraph {
    int num_nodes = 0;
    std::vector<int> src;
    std::vector<int> dst;
};

MessageGraph build_message_graph(int num_nodes, const std::vector<graph::Edge>& edges);

struct Model {
    ModelConfig cfg;
    ad::Tensor embeddings;  // N x embedding_dim, trainable
    std::vector<LayerParams> layers;

    std::vector<ad::Tensor> parameters() const;
    // deep copies of all parameter values, aligned with parameters()
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& snap);
};

Model init_model(const ModelConfig& cfg, int num_nodes, std::uint64_t seed);

// Per-edge attention logits for one head, Mx1.
ad::Tensor attention_logits(const LayerParams& layer, int head, const ad::Tensor& h,
                            const MessageGraph& mg, double leaky_slope);

// One FGAT block: pre-norm, multi-head attention, concat, linear
// projection, ReLU, dropout, identity residual.
ad::Tensor fgat_layer_forward(const ModelConfig& cfg, const LayerParams& layer,
                              const ad::Tensor& h, const MessageGraph& mg, bool train,
                              std::mt19937_64& dropout_gen);

ad::Tensor model_forward(const Model& m, const MessageGraph& mg, bool train,
                         std::mt19937_64& dropout_gen);

// Sigmoid of the dot products between endpoint rows of H; Mx1.
ad::Tensor link_probability(const ad::Tensor& h_final, const std::vector<graph::Edge>& pairs);
double link_probability(const Matrix& h_final, int x, int y);

// Versioned text checkpoint: config, graph metadata, and every parameter
// tensor with shape headers, full double precision.
struct Checkpoint {
    ModelConfig cfg;
    int num_nodes = 0;
    std::uint64_t seed = 0;
    std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
    std::string graph_path;
};

void save_checkpoint(const std::string& path, const Model& m, const Checkpoint& meta);
Model load_checkpoint(const std::string& path, Checkpoint& meta_out);

}  // namespace fgat::model
