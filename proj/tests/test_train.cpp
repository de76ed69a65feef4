#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fgat/rng.hpp"
#include "fgat/train.hpp"

using namespace fgat;
using namespace fgat::train;

namespace {

// independent O(P*N) pairwise count with half credit for ties
double roc_oracle(const std::vector<double>& pos, const std::vector<double>& neg) {
    double acc = 0.0;
    for (double p : pos)
        for (double n : neg) {
            if (p > n) acc += 1.0;
            else if (p == n) acc += 0.5;
        }
    return acc / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

graph::Graph small_graph() {
    std::vector<graph::Edge> edges;
    for (int i = 0; i < 20; ++i) edges.push_back({i, (i + 1) % 20});
    for (int i = 0; i < 10; ++i) edges.push_back({i, (i + 5) % 20});
    return graph::graph_from_edges(20, edges);
}

model::ModelConfig small_model() {
    model::ModelConfig cfg;
    cfg.embedding_dim = 8;
    cfg.num_heads = 2;
    cfg.head_dim = 4;
    cfg.num_layers = 2;
    cfg.dropout_p = 0.1;
    return cfg;
}

}  // namespace

TEST_CASE("roc fixed examples") {
    CHECK(roc_auc({0.9, 0.4}, {0.6, 0.1}) == 0.75);
    CHECK(roc_auc({0.9, 0.6}, {0.4, 0.1}) == 1.0);
    CHECK(roc_auc({0.5, 0.5, 0.5}, {0.5, 0.5}) == 0.5);
    CHECK_THROWS(roc_auc({}, {0.5}));
}

TEST_CASE("roc equals the pairwise oracle bitwise") {
    std::mt19937_64 gen(61);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 1 + gen() % 40, n = 1 + gen() % 40;
        std::vector<double> pos(p), neg(n);
        // coarse grid so ties actually happen
        for (auto& v : pos) v = static_cast<double>(gen() % 10) / 10.0;
        for (auto& v : neg) v = static_cast<double>(gen() % 10) / 10.0;
        CHECK(roc_auc(pos, neg) == roc_oracle(pos, neg));
    }
}

TEST_CASE("roc is invariant under strictly increasing transforms") {
    std::mt19937_64 gen(67);
    std::vector<double> pos(15), neg(12);
    for (auto& v : pos) v = rng::uniform01(gen);
    for (auto& v : neg) v = rng::uniform01(gen);
    const double base = roc_auc(pos, neg);
    auto monotone = [](double x) { return std::exp(3.0 * x) - 0.5; };
    for (auto& v : pos) v = monotone(v);
    for (auto& v : neg) v = monotone(v);
    CHECK(roc_auc(pos, neg) == base);
}

TEST_CASE("evaluate counts and metrics") {
    // embed scores directly: rows chosen so dot products give the probabilities
    Matrix h(4, 1);
    h(0, 0) = 2.0;
    h(1, 0) = 1.1;   // sigmoid(2.2) ~ 0.9
    h(2, 0) = 0.2;   // sigmoid(0.4) ~ 0.6 with node 0
    h(3, 0) = -1.0;  // sigmoid(-2) ~ 0.12
    std::vector<graph::Edge> pos{{0, 1}, {0, 2}};
    std::vector<graph::Edge> neg{{0, 3}, {1, 3}};
    MetricsReport r = evaluate(h, pos, neg, 0.5);
    CHECK(r.tp == 2);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    CHECK(r.tn == 2);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.roc_auc == 1.0);
    CHECK_THROWS(evaluate(h, {}, neg, 0.5));
}

TEST_CASE("f1 is the harmonic mean when defined") {
    std::mt19937_64 gen(71);
    Matrix h(10, 3);
    for (double& v : h.data) v = 2.0 * rng::uniform01(gen) - 1.0;
    std::vector<graph::Edge> pos, neg;
    for (int i = 0; i < 9; ++i) {
        pos.push_back({i, i + 1});
        neg.push_back({(i + 3) % 10, i});
    }
    MetricsReport r = evaluate(h, pos, neg, 0.5);
    if (r.precision + r.recall > 0.0)
        CHECK(r.f1 == doctest::Approx(2.0 * r.precision * r.recall / (r.precision + r.recall))
                          .epsilon(1e-15));
    CHECK(r.tp + r.fn == 9);
    CHECK(r.fp + r.tn == 9);
}

TEST_CASE("train epoch uses as many negatives as train positives") {
    graph::Graph g = small_graph();
    auto split = graph::split_edges(g, {0.7, 0.1, 0.2}, 0);
    TrainConfig cfg;
    cfg.seed = 0;
    TrainState state = make_train_state(g, split, cfg, small_model());
    EpochReport r = train_epoch(state, 1);
    CHECK(std::isfinite(r.train_loss));
    // fuzzy mode summarizes exactly |train| selected scores
    CHECK(r.neg_score_min <= r.neg_score_mean);
    CHECK(r.neg_score_mean <= r.neg_score_max);
}

TEST_CASE("training is deterministic for a fixed seed") {
    graph::Graph g = small_graph();
    auto run = [&](Sampling mode) {
        auto split = graph::split_edges(g, {0.7, 0.1, 0.2}, 3);
        TrainConfig cfg;
        cfg.seed = 3;
        cfg.sampling = mode;
        cfg.epochs_max = 5;
        TrainState state = make_train_state(g, split, cfg, small_model());
        std::vector<double> losses;
        for (int e = 1; e <= 5; ++e) losses.push_back(train_epoch(state, e).train_loss);
        return losses;
    };
    CHECK(run(Sampling::fuzzy) == run(Sampling::fuzzy));
    CHECK(run(Sampling::random_uniform) == run(Sampling::random_uniform));
}

TEST_CASE("zero learning rate freezes the parameters") {
    graph::Graph g = small_graph();
    auto split = graph::split_edges(g, {0.7, 0.1, 0.2}, 1);
    TrainConfig cfg;
    cfg.seed = 1;
    cfg.lr = 0.0;
    TrainState state = make_train_state(g, split, cfg, small_model());
    auto before = state.net.snapshot();
    double first_loss = train_epoch(state, 1).train_loss;
    double second_loss = train_epoch(state, 2).train_loss;
    CHECK(state.net.snapshot() == before);
    // same params and same per-epoch dropout/negative seeds differ, so only
    // check the loss stays finite and the weights froze
    CHECK(std::isfinite(first_loss));
    CHECK(std::isfinite(second_loss));
}

TEST_CASE("fit trains at most epochs_max and restores the best state") {
    graph::Graph g = small_graph();
    auto split = graph::split_edges(g, {0.7, 0.1, 0.2}, 2);
    TrainConfig cfg;
    cfg.seed = 2;
    cfg.epochs_max = 1;
    TrainState state = make_train_state(g, split, cfg, small_model());
    FitResult r = fit(state);
    CHECK(r.epochs_trained == 1);
    CHECK(r.history.size() == 1);
    CHECK(r.best_epoch == 1);

    cfg.epochs_max = 8;
    cfg.patience = 2;
    TrainState state2 = make_train_state(g, split, cfg, small_model());
    FitResult r2 = fit(state2);
    CHECK(r2.epochs_trained <= 8);
    double best = -1.0;
    for (const auto& e : r2.history) best = std::max(best, e.val_roc_auc);
    CHECK(r2.best_val_roc == best);
    // restored state reproduces the best validation score
    auto val_neg = graph::sample_negative_candidates(g.num_nodes, state2.exclusion,
                                                     split.validation.size(),
                                                     validation_negative_seed(cfg.seed))
                       .candidates;
    Matrix h = final_embeddings(state2);
    MetricsReport m = evaluate(h, split.validation, val_neg, 0.5);
    CHECK(m.roc_auc == doctest::Approx(r2.best_val_roc).epsilon(1e-12));
}

TEST_CASE("evaluation negatives never intersect positives") {
    graph::Graph g = small_graph();
    auto split = graph::split_edges(g, {0.7, 0.1, 0.2}, 5);
    auto excl = graph::all_positive_pairs(split);
    auto neg = graph::sample_negative_candidates(g.num_nodes, excl, split.test.size(),
                                                 test_negative_seed(5))
                   .candidates;
    for (const auto& e : neg) {
        CHECK_FALSE(excl.contains(e));
        CHECK_FALSE(excl.contains({e.dst, e.src}));
    }
}

TEST_CASE("run_experiment aggregates across seeds") {
    graph::Graph g = small_graph();
    ExperimentConfig cfg;
    cfg.model = small_model();
    cfg.train.epochs_max = 3;
    cfg.train.patience = 3;
    auto runs = run_experiment(g, cfg, {0, 1});
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].seed == 0);
    CHECK(runs[1].seed == 1);
    AggregateReport agg = aggregate(runs);
    CHECK(agg.roc_auc.mean ==
          doctest::Approx((runs[0].test.roc_auc + runs[1].test.roc_auc) / 2.0).epsilon(1e-15));
    CHECK(agg.mean_of_means > 0.0);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.patience = 0;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.epochs_max = 0;
    CHECK_THROWS(cfg.validate());
}
