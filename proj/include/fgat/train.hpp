#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fgat/fuzzy.hpp"
#include "fgat/graph.hpp"
#include "fgat/model.hpp"

namespace fgat::train {

enum class Sampling { fuzzy, random_uniform };

Sampling sampling_from_name(const std::string& name);
std::string sampling_name(Sampling s);

struct TrainConfig {
    int epochs_max = 200;
    int patience = 20;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    Sampling sampling = Sampling::fuzzy;
    double alpha = 0.5;
    fuzzy::RelationConfig relation;
    std::uint64_t seed = 0;
    double threshold = 0.5;

    void validate() const;
};

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

struct EpochReport {
    int epoch = 0;
    double train_loss = 0.0;
    double val_roc_auc = 0.0;
    // summary of the fuzzy quality scores of the selected negatives;
    // zeros in random mode
    double neg_score_min = 0.0;
    double neg_score_mean = 0.0;
    double neg_score_max = 0.0;
};

// Everything owned by one training run: the model, the train-edge message
// topology, the candidate exclusion set, and the optimizer.
struct TrainState {
    model::Model net;
    model::MessageGraph message_graph;  // built from train edges only
    graph::Graph train_view;            // train edges, for neighborhood decision classes
    graph::PairSet exclusion;           // every positive edge, both directions
    ad::AdamState adam;
    graph::EdgeSplit split;
    TrainConfig cfg;
    int num_nodes = 0;
};

TrainState make_train_state(const graph::Graph& g, const graph::EdgeSplit& split,
                            const TrainConfig& cfg, const model::ModelConfig& mcfg);

// Samples negatives (per-epoch candidate seed = base seed + epoch), runs one
// forward/backward pass over train positives + negatives, applies Adam.
EpochReport train_epoch(TrainState& state, int epoch);

// Final node representations with dropout disabled.
Matrix final_embeddings(const TrainState& state);

// Tie-aware rank statistic: P(pos > neg) + 0.5 P(pos == neg), exact.
double roc_auc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

MetricsReport evaluate(const Matrix& h_final, const std::vector<graph::Edge>& positives,
                       const std::vector<graph::Edge>& negatives, double threshold);

struct FitResult {
    std::vector<EpochReport> history;
    int best_epoch = 0;
    double best_val_roc = 0.0;
    int epochs_trained = 0;
};

// Trains with early stopping on validation ROC-AUC (fixed seeded random
// validation negatives) and restores the best parameters.
FitResult fit(TrainState& state);

struct ExperimentConfig {
    TrainConfig train;
    model::ModelConfig model;
    std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
};

struct RunResult {
    std::uint64_t seed = 0;
    MetricsReport test;
    FitResult fit;
    double wall_seconds = 0.0;
    model::Model net;
    graph::EdgeSplit split;
};

// One full train+test cycle per seed.
std::vector<RunResult> run_experiment(const graph::Graph& g, const ExperimentConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds);

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

struct AggregateReport {
    MetricSummary precision, recall, f1, roc_auc;
    double mean_of_means = 0.0;  // average of the four metric means
};

AggregateReport aggregate(const std::vector<RunResult>& runs);

// Seeds for the fixed evaluation negative sets, derived from the run seed.
std::uint64_t validation_negative_seed(std::uint64_t base);
std::uint64_t test_negative_seed(std::uint64_t base);

}  // namespace fgat::train
