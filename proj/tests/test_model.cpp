#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fgat/model.hpp"
#include "fgat/rng.hpp"

using namespace fgat;
using namespace fgat::model;

namespace {

ModelConfig tiny_config(int dim, int heads, int layers, double dropout = 0.0) {
    ModelConfig cfg;
    cfg.embedding_dim = dim;
    cfg.num_heads = heads;
    cfg.head_dim = dim / heads;
    cfg.num_layers = layers;
    cfg.dropout_p = dropout;
    return cfg;
}

void set_values(ad::Tensor& t, const std::vector<double>& v) { t.values() = v; }

std::vector<double> identity(std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    return v;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig cfg = tiny_config(8, 2, 1);
    CHECK_NOTHROW(cfg.validate());
    cfg.head_dim = 3;  // 2*3 != 8
    CHECK_THROWS(cfg.validate());
    cfg = tiny_config(8, 2, 1);
    cfg.dropout_p = 1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("message graph is bidirectional with contiguous destination segments") {
    MessageGraph mg = build_message_graph(3, {{0, 1}});
    // node 0: {0,1}; node 1: {0,1}; node 2: {2}
    REQUIRE(mg.src.size() == 5);
    CHECK(mg.dst == std::vector<int>{0, 0, 1, 1, 2});
    CHECK(mg.src == std::vector<int>{0, 1, 0, 1, 2});
}

TEST_CASE("attention logits fixed cases") {
    ModelConfig cfg = tiny_config(2, 1, 1);
    Model m = init_model(cfg, 3, 0);
    MessageGraph mg = build_message_graph(3, {{0, 1}, {1, 2}});

    SUBCASE("zero attention vector gives zero logits") {
        set_values(m.layers[0].head_attn[0], std::vector<double>(4, 0.0));
        ad::Tensor logits = attention_logits(m.layers[0], 0, m.embeddings, mg, 0.2);
        for (double v : logits.values()) CHECK(v == 0.0);
    }
    SUBCASE("zero features give zero logits for identity transform") {
        set_values(m.layers[0].head_weight[0], identity(2));
        set_values(m.layers[0].head_attn[0], std::vector<double>(4, 1.0));
        set_values(m.embeddings, std::vector<double>(6, 0.0));
        ad::Tensor logits = attention_logits(m.layers[0], 0, m.embeddings, mg, 0.2);
        for (double v : logits.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("attention logits match a straight-line evaluation") {
    std::mt19937_64 gen(5);
    ModelConfig cfg = tiny_config(3, 1, 1);
    cfg.head_dim = 3;
    Model m = init_model(cfg, 3, 7);
    MessageGraph mg = build_message_graph(3, {{0, 1}, {0, 2}});
    ad::Tensor logits = attention_logits(m.layers[0], 0, m.embeddings, mg, 0.2);

    const auto& W = m.layers[0].head_weight[0].values();   // 3x3, row major F_in x F'
    const auto& a = m.layers[0].head_attn[0].values();     // 6x1
    const auto& h = m.embeddings.values();                 // 3x3
    for (std::size_t e = 0; e < mg.src.size(); ++e) {
        const int v = mg.dst[e], u = mg.src[e];
        double dot = 0.0;
        for (int j = 0; j < 3; ++j) {
            double whv = 0.0, whu = 0.0;
            for (int p = 0; p < 3; ++p) {
                whv += h[v * 3 + p] * W[p * 3 + j];
                whu += h[u * 3 + p] * W[p * 3 + j];
            }
            dot += a[j] * whv + a[3 + j] * whu;
        }
        const double expected = dot > 0.0 ? dot : 0.2 * dot;
        CHECK(logits.values()[e] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("singleton layer reduces to relu(norm(h)) + h") {
    ModelConfig cfg = tiny_config(4, 1, 1);
    cfg.head_dim = 4;
    Model m = init_model(cfg, 1, 3);
    set_values(m.embeddings, {0.5, -1.0, 2.0, 0.25});
    set_values(m.layers[0].head_weight[0], identity(4));
    set_values(m.layers[0].proj_weight, identity(4));
    set_values(m.layers[0].proj_bias, {0.0, 0.0, 0.0, 0.0});

    MessageGraph mg = build_message_graph(1, {});
    std::mt19937_64 gen(0);
    ad::Tensor out = fgat_layer_forward(cfg, m.layers[0], m.embeddings, mg, false, gen);

    // manual layer norm of the single row
    std::vector<double> h{0.5, -1.0, 2.0, 0.25};
    double mean = std::accumulate(h.begin(), h.end(), 0.0) / 4.0;
    double var = 0.0;
    for (double x : h) var += (x - mean) * (x - mean);
    var /= 4.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double normed = (h[i] - mean) / std::sqrt(var + cfg.layer_norm_eps);
        double expected = std::max(normed, 0.0) + h[i];
        CHECK(out.values()[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("tied logits give uniform attention on a star") {
    ModelConfig cfg = tiny_config(2, 1, 1);
    Model m = init_model(cfg, 4, 9);
    // identical features everywhere force all logits within a segment to tie
    set_values(m.embeddings, std::vector<double>(8, 0.7));
    MessageGraph mg = build_message_graph(4, {{0, 1}, {0, 2}, {0, 3}});
    ad::Tensor z = ad::layer_norm(m.embeddings, m.layers[0].ln_gamma, m.layers[0].ln_beta,
                                  cfg.layer_norm_eps);
    ad::Tensor logits = attention_logits(m.layers[0], 0, z, mg, cfg.leaky_slope);
    ad::Tensor weights = ad::segment_softmax(logits, mg.dst);
    // center node 0 has 4 incoming entries: self + 3 leaves
    for (std::size_t e = 0; e < mg.src.size(); ++e)
        if (mg.dst[e] == 0) CHECK(weights.values()[e] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("zero layers return the embedding table") {
    ModelConfig cfg = tiny_config(4, 2, 0);
    Model m = init_model(cfg, 5, 1);
    MessageGraph mg = build_message_graph(5, {{0, 1}});
    std::mt19937_64 gen(0);
    ad::Tensor h = model_forward(m, mg, false, gen);
    CHECK(h.values() == m.embeddings.values());
}

TEST_CASE("forward is deterministic") {
    ModelConfig cfg = tiny_config(8, 2, 2, 0.2);
    Model m = init_model(cfg, 6, 4);
    MessageGraph mg = build_message_graph(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});

    std::mt19937_64 g1(0), g2(0);
    CHECK(model_forward(m, mg, false, g1).values() == model_forward(m, mg, false, g2).values());

    std::mt19937_64 t1(11), t2(11);
    CHECK(model_forward(m, mg, true, t1).values() == model_forward(m, mg, true, t2).values());
}

TEST_CASE("permuting node ids permutes output rows") {
    ModelConfig cfg = tiny_config(6, 2, 2);
    const int n = 5;
    Model m = init_model(cfg, n, 8);
    std::vector<graph::Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
    MessageGraph mg = build_message_graph(n, edges);
    std::mt19937_64 gen(0);
    Matrix h = model_forward(m, mg, false, gen).to_matrix();

    std::vector<int> perm{2, 0, 4, 1, 3};  // new id of old node i
    Model pm = init_model(cfg, n, 8);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 6; ++c)
            pm.embeddings.values()[perm[i] * 6 + c] = m.embeddings.values()[i * 6 + c];
    std::vector<graph::Edge> pedges;
    for (const auto& e : edges) pedges.push_back({perm[e.src], perm[e.dst]});
    MessageGraph pmg = build_message_graph(n, pedges);
    std::mt19937_64 gen2(0);
    Matrix ph = model_forward(pm, pmg, false, gen2).to_matrix();

    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 6; ++c)
            CHECK(ph(perm[i], c) == doctest::Approx(h(i, c)).epsilon(1e-12));
}

TEST_CASE("link probability basics") {
    Matrix h(3, 2);
    h(0, 0) = 1.0;  // h0 = (1, 0)
    h(1, 1) = 1.0;  // h1 = (0, 1), orthogonal
    h(2, 0) = 1.0;  // h2 = h0, unit norm
    CHECK(link_probability(h, 0, 1) == doctest::Approx(0.5));
    CHECK(link_probability(h, 0, 2) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK_THROWS(link_probability(h, 0, 7));

    std::mt19937_64 gen(44);
    Matrix r(6, 4);
    for (double& v : r.data) v = 2.0 * rng::uniform01(gen) - 1.0;
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y)
            CHECK(link_probability(r, x, y) == link_probability(r, y, x));
}

TEST_CASE("batched link probability matches the scalar path") {
    std::mt19937_64 gen(3);
    ModelConfig cfg = tiny_config(4, 1, 1);
    cfg.head_dim = 4;
    Model m = init_model(cfg, 4, 12);
    Matrix h = m.embeddings.to_matrix();
    std::vector<graph::Edge> pairs{{0, 1}, {2, 3}, {1, 1}};
    ad::Tensor probs = link_probability(m.embeddings, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i)
        CHECK(probs.values()[i] ==
              doctest::Approx(link_probability(h, pairs[i].src, pairs[i].dst)).epsilon(1e-15));
}

TEST_CASE("attention weights per destination form a distribution") {
    std::mt19937_64 seeds(55);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + static_cast<int>(seeds() % 8);
        std::vector<graph::Edge> edges;
        for (int i = 0; i + 1 < n; ++i) edges.push_back({i, (i * 3 + 1) % n});
        ModelConfig cfg = tiny_config(6, 2, 1);
        Model m = init_model(cfg, n, seeds());
        MessageGraph mg = build_message_graph(n, edges);
        ad::Tensor logits = attention_logits(m.layers[0], 0, m.embeddings, mg, 0.2);
        ad::Tensor w = ad::segment_softmax(logits, mg.dst);
        std::vector<double> sums(n, 0.0);
        for (std::size_t e = 0; e < mg.dst.size(); ++e) {
            CHECK(w.values()[e] >= 0.0);
            sums[mg.dst[e]] += w.values()[e];
        }
        for (double s : sums) CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("checkpoint round trip") {
    ModelConfig cfg = tiny_config(8, 2, 2, 0.1);
    Model m = init_model(cfg, 7, 21);
    Checkpoint meta;
    meta.cfg = cfg;
    meta.num_nodes = 7;
    meta.seed = 21;
    meta.split_ratios = {0.7, 0.1, 0.2};
    meta.graph_path = "data/example.edges";

    auto path = (std::filesystem::temp_directory_path() / "fgat_ckpt_test.txt").string();
    save_checkpoint(path, m, meta);

    Checkpoint loaded_meta;
    Model loaded = load_checkpoint(path, loaded_meta);
    CHECK(loaded_meta.num_nodes == 7);
    CHECK(loaded_meta.seed == 21);
    CHECK(loaded_meta.graph_path == "data/example.edges");
    CHECK(loaded_meta.cfg.num_heads == 2);

    auto orig = m.parameters();
    auto back = loaded.parameters();
    REQUIRE(orig.size() == back.size());
    for (std::size_t i = 0; i < orig.size(); ++i) CHECK(orig[i].values() == back[i].values());
}

TEST_CASE("checkpoint rejects garbage") {
    auto path = (std::filesystem::temp_directory_path() / "fgat_ckpt_bad.txt").string();
    {
        std::ofstream out(path);
        out << "not a checkpoint\n";
    }
    Checkpoint meta;
    CHECK_THROWS(load_checkpoint(path, meta));
}
