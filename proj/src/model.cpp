#include "fgat/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fgat/rng.hpp"

namespace fgat::model {

void ModelConfig::validate() const {
    if (embedding_dim <= 0 || num_heads <= 0 || head_dim <= 0 || num_layers < 0)
        throw std::invalid_argument("model dimensions must be positive");
    if (hidden_dim() != embedding_dim)
        throw std::invalid_argument("num_heads * head_dim must equal embedding_dim "
                                    "so residual shapes align");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
        throw std::invalid_argument("dropout_p must lie in [0,1)");
    if (layer_norm_eps <= 0.0) throw std::invalid_argument("layer_norm_eps must be positive");
}

MessageGraph build_message_graph(int num_nodes, const std::vector<graph::Edge>& edges) {
    std::vector<std::vector<int>> incoming(num_nodes);
    for (const graph::Edge& e : edges) {
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes)
            throw std::invalid_argument("message edge endpoint out of range");
        if (e.src == e.dst) continue;
        incoming[e.dst].push_back(e.src);
        incoming[e.src].push_back(e.dst);
    }
    MessageGraph mg;
    mg.num_nodes = num_nodes;
    for (int v = 0; v < num_nodes; ++v) {
        auto& in = incoming[v];
        in.push_back(v);  // self-loop
        std::sort(in.begin(), in.end());
        in.erase(std::unique(in.begin(), in.end()), in.end());
        for (int u : in) {
            mg.dst.push_back(v);
            mg.src.push_back(u);
        }
    }
    return mg;
}

namespace {

ad::Tensor uniform_tensor(std::size_t rows, std::size_t cols, double scale,
                          std::mt19937_64& gen) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = (2.0 * rng::uniform01(gen) - 1.0) * scale;
    return ad::Tensor::from_values(rows, cols, std::move(v), /*requires_grad=*/true);
}

ad::Tensor const_tensor(std::size_t rows, std::size_t cols, double fill) {
    return ad::Tensor::from_values(rows, cols, std::vector<double>(rows * cols, fill),
                                   /*requires_grad=*/true);
}

}  // namespace

Model init_model(const ModelConfig& cfg, int num_nodes, std::uint64_t seed) {
    cfg.validate();
    if (num_nodes <= 0) throw std::invalid_argument("model needs at least one node");
    std::mt19937_64 gen(rng::mix_seed(seed, 0x6d6f64656cULL));

    Model m;
    m.cfg = cfg;
    const auto f = static_cast<std::size_t>(cfg.embedding_dim);
    const auto fh = static_cast<std::size_t>(cfg.head_dim);
    const auto hidden = static_cast<std::size_t>(cfg.hidden_dim());
    m.embeddings = uniform_tensor(static_cast<std::size_t>(num_nodes), f,
                                  1.0 / std::sqrt(static_cast<double>(f)), gen);
    for (int l = 0; l < cfg.num_layers; ++l) {
        LayerParams lp;
        const double w_scale = std::sqrt(6.0 / static_cast<double>(f + fh));
        const double a_scale = std::sqrt(6.0 / static_cast<double>(2 * fh + 1));
        for (int k = 0; k < cfg.num_heads; ++k) {
            lp.head_weight.push_back(uniform_tensor(f, fh, w_scale, gen));
            lp.head_attn.push_back(uniform_tensor(2 * fh, 1, a_scale, gen));
        }
        // small gain keeps the residual branch near zero at init, so stacked
        // layers do not blow up the embedding norms and saturate the decoder
        lp.proj_weight = uniform_tensor(
            hidden, f, 0.1 * std::sqrt(6.0 / static_cast<double>(hidden + f)), gen);
        lp.proj_bias = const_tensor(1, f, 0.0);
        lp.ln_gamma = const_tensor(1, f, 1.0);
        lp.ln_beta = const_tensor(1, f, 0.0);
        m.layers.push_back(std::move(lp));
    }
    return m;
}

std::vector<ad::Tensor> Model::parameters() const {
    std::vector<ad::Tensor> out{embeddings};
    for (const LayerParams& lp : layers) {
        for (const auto& w : lp.head_weight) out.push_back(w);
        for (const auto& a : lp.head_attn) out.push_back(a);
        out.push_back(lp.proj_weight);
        out.push_back(lp.proj_bias);
        out.push_back(lp.ln_gamma);
        out.push_back(lp.ln_beta);
    }
    return out;
}

std::vector<std::vector<double>> Model::snapshot() const {
    std::vector<std::vector<double>> snap;
    for (const ad::Tensor& p : parameters()) snap.push_back(p.values());
    return snap;
}

void Model::restore(const std::vector<std::vector<double>>& snap) {
    auto params = parameters();
    if (snap.size() != params.size()) throw std::invalid_argument("snapshot size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (snap[i].size() != params[i].size())
            throw std::invalid_argument("snapshot shape mismatch");
        params[i].values() = snap[i];
    }
}

namespace {

struct HeadAttention {
    ad::Tensor logits;           // Mx1, before softmax
    ad::Tensor transformed_src;  // Mxhead_dim rows of W h_u
};

HeadAttention head_attention(const LayerParams& layer, int head, const ad::Tensor& h,
                             const MessageGraph& mg, double leaky_slope) {
    ad::Tensor wh = ad::matmul(h, layer.head_weight[head]);
    ad::Tensor wh_dst = ad::gather_rows(wh, mg.dst);
    ad::Tensor wh_src = ad::gather_rows(wh, mg.src);
    ad::Tensor cat = ad::concat_cols({wh_dst, wh_src});
    ad::Tensor logits = ad::leaky_relu(ad::matmul(cat, layer.head_attn[head]), leaky_slope);
    return {logits, wh_src};
}

}  // namespace

ad::Tensor attention_logits(const LayerParams& layer, int head, const ad::Tensor& h,
                            const MessageGraph& mg, double leaky_slope) {
    return head_attention(layer, head, h, mg, leaky_slope).logits;
}

ad::Tensor fgat_layer_forward(const ModelConfig& cfg, const LayerParams& layer,
                              const ad::Tensor& h, const MessageGraph& mg, bool train,
                              std::mt19937_64& dropout_gen) {
    ad::Tensor z = ad::layer_norm(h, layer.ln_gamma, layer.ln_beta, cfg.layer_norm_eps);
    std::vector<ad::Tensor> heads;
    heads.reserve(cfg.num_heads);
    for (int k = 0; k < cfg.num_heads; ++k) {
        HeadAttention att = head_attention(layer, k, z, mg, cfg.leaky_slope);
        ad::Tensor weights = ad::segment_softmax(att.logits, mg.dst);
        heads.push_back(ad::segment_weighted_sum(weights, att.transformed_src, mg.dst,
                                                 static_cast<std::size_t>(mg.num_nodes)));
    }
    ad::Tensor cat = heads.size() == 1 ? heads[0] : ad::concat_cols(heads);
    ad::Tensor proj = ad::add(ad::matmul(cat, layer.proj_weight), layer.proj_bias);
    ad::Tensor activated = ad::relu(proj);
    ad::Tensor dropped = ad::dropout(activated, cfg.dropout_p, dropout_gen, train);
    return ad::add(dropped, h);
}

ad::Tensor model_forward(const Model& m, const MessageGraph& mg, bool train,
                         std::mt19937_64& dropout_gen) {
    ad::Tensor h = m.embeddings;
    for (const LayerParams& layer : m.layers)
        h = fgat_layer_forward(m.cfg, layer, h, mg, train, dropout_gen);
    return h;
}

ad::Tensor link_probability(const ad::Tensor& h_final, const std::vector<graph::Edge>& pairs) {
    std::vector<int> xs, ys;
    xs.reserve(pairs.size());
    ys.reserve(pairs.size());
    for (const graph::Edge& e : pairs) {
        xs.push_back(e.src);
        ys.push_back(e.dst);
    }
    ad::Tensor hx = ad::gather_rows(h_final, xs);
    ad::Tensor hy = ad::gather_rows(h_final, ys);
    return ad::sigmoid(ad::rowwise_dot(hx, hy));
}

double link_probability(const Matrix& h_final, int x, int y) {
    if (x < 0 || y < 0 || static_cast<std::size_t>(x) >= h_final.rows ||
        static_cast<std::size_t>(y) >= h_final.rows)
        throw std::out_of_range("node id out of range");
    double dot = 0.0;
    for (std::size_t j = 0; j < h_final.cols; ++j) dot += h_final(x, j) * h_final(y, j);
    return 1.0 / (1.0 + std::exp(-dot));
}

namespace {

void write_tensor(std::ofstream& out, const std::string& name, const ad::Tensor& t) {
    out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", t.values()[i]);
        out << buf << (((i + 1) % 8 == 0 || i + 1 == t.size()) ? '\n' : ' ');
    }
}

void read_tensor(std::istream& in, const std::string& expect_name, ad::Tensor& t) {
    std::string tag, name;
    std::size_t rows, cols;
    if (!(in >> tag >> name >> rows >> cols) || tag != "tensor" || name != expect_name)
        throw std::runtime_error("checkpoint: expected tensor " + expect_name);
    if (rows != t.rows() || cols != t.cols())
        throw std::runtime_error("checkpoint: shape mismatch for " + expect_name);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!(in >> t.values()[i])) throw std::runtime_error("checkpoint: truncated " + expect_name);
}

template <typename Fn>
void for_each_named_tensor(Model& m, Fn fn) {
    fn("embeddings", m.embeddings);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        LayerParams& lp = m.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (std::size_t k = 0; k < lp.head_weight.size(); ++k) {
            fn(prefix + "head" + std::to_string(k) + ".weight", lp.head_weight[k]);
            fn(prefix + "head" + std::to_string(k) + ".attn", lp.head_attn[k]);
        }
        fn(prefix + "proj.weight", lp.proj_weight);
        fn(prefix + "proj.bias", lp.proj_bias);
        fn(prefix + "ln.gamma", lp.ln_gamma);
        fn(prefix + "ln.beta", lp.ln_beta);
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m, const Checkpoint& meta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << "FGAT-CHECKPOINT v1\n";
    out << "embedding_dim " << m.cfg.embedding_dim << '\n';
    out << "num_heads " << m.cfg.num_heads << '\n';
    out << "head_dim " << m.cfg.head_dim << '\n';
    out << "num_layers " << m.cfg.num_layers << '\n';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", m.cfg.dropout_p);
    out << "dropout_p " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", m.cfg.leaky_slope);
    out << "leaky_slope " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", m.cfg.layer_norm_eps);
    out << "layer_norm_eps " << buf << '\n';
    out << "num_nodes " << meta.num_nodes << '\n';
    out << "seed " << meta.seed << '\n';
    out << "split_ratios";
    for (double r : meta.split_ratios) {
        std::snprintf(buf, sizeof buf, "%.17g", r);
        out << ' ' << buf;
    }
    out << '\n';
    out << "graph_path " << meta.graph_path << '\n';
    Model& mut = const_cast<Model&>(m);
    for_each_named_tensor(mut, [&](const std::string& name, ad::Tensor& t) {
        write_tensor(out, name, t);
    });
    out << "end\n";
}

Model load_checkpoint(const std::string& path, Checkpoint& meta_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "FGAT-CHECKPOINT v1")
        throw std::runtime_error("unrecognized checkpoint header: " + line);

    ModelConfig cfg;
    Checkpoint meta;
    std::string key;
    while (in >> key) {
        if (key == "tensor") {
            in.seekg(-static_cast<std::streamoff>(key.size()), std::ios::cur);
            break;
        }
        if (key == "embedding_dim") in >> cfg.embedding_dim;
        else if (key == "num_heads") in >> cfg.num_heads;
        else if (key == "head_dim") in >> cfg.head_dim;
        else if (key == "num_layers") in >> cfg.num_layers;
        else if (key == "dropout_p") in >> cfg.dropout_p;
        else if (key == "leaky_slope") in >> cfg.leaky_slope;
        else if (key == "layer_norm_eps") in >> cfg.layer_norm_eps;
        else if (key == "num_nodes") in >> meta.num_nodes;
        else if (key == "seed") in >> meta.seed;
        else if (key == "split_ratios")
            in >> meta.split_ratios[0] >> meta.split_ratios[1] >> meta.split_ratios[2];
        else if (key == "graph_path") {
            std::getline(in, line);
            std::size_t first = line.find_first_not_of(' ');
            meta.graph_path = first == std::string::npos ? "" : line.substr(first);
        } else {
            throw std::runtime_error("checkpoint: unknown key " + key);
        }
        if (!in) throw std::runtime_error("checkpoint: bad value for " + key);
    }
    meta.cfg = cfg;

    Model m = init_model(cfg, meta.num_nodes, 0);
    for_each_named_tensor(m, [&](const std::string& name, ad::Tensor& t) {
        read_tensor(in, name, t);
    });
    std::string tail;
    if (!(in >> tail) || tail != "end") throw std::runtime_error("checkpoint: missing end marker");
    meta_out = meta;
    return m;
}

}  // namespace fgat::model
