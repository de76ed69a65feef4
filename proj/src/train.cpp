#include "fgat/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fgat/rng.hpp"

namespace fgat::train {

Sampling sampling_from_name(const std::string& name) {
    if (name == "fuzzy") return Sampling::fuzzy;
    if (name == "random") return Sampling::random_uniform;
    throw std::invalid_argument("unknown sampling mode: " + name);
}

std::string sampling_name(Sampling s) {
    return s == Sampling::fuzzy ? "fuzzy" : "random";
}

void TrainConfig::validate() const {
    if (epochs_max < 1) throw std::invalid_argument("epochs_max must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (lr < 0.0) throw std::invalid_argument("lr must be non-negative");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0,1]");
    if (!relation.auto_delta && relation.delta <= 0.0)
        throw std::invalid_argument("delta must be positive");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("threshold must lie in (0,1)");
}

std::uint64_t validation_negative_seed(std::uint64_t base) {
    return rng::mix_seed(base, 0x76616cULL);  // "val"
}

std::uint64_t test_negative_seed(std::uint64_t base) {
    return rng::mix_seed(base, 0x74657374ULL);  // "test"
}

TrainState make_train_state(const graph::Graph& g, const graph::EdgeSplit& split,
                            const TrainConfig& cfg, const model::ModelConfig& mcfg) {
    cfg.validate();
    mcfg.validate();
    model::Model net = model::init_model(mcfg, g.num_nodes, cfg.seed);
    ad::AdamState adam(net.parameters(),
                       ad::AdamConfig{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8});
    return TrainState{
        .net = std::move(net),
        .message_graph = model::build_message_graph(g.num_nodes, split.train),
        .train_view = graph::graph_from_edges(g.num_nodes, split.train),
        .exclusion = graph::all_positive_pairs(split),
        .adam = std::move(adam),
        .split = split,
        .cfg = cfg,
        .num_nodes = g.num_nodes,
    };
}

namespace {

std::vector<graph::Edge> sample_epoch_negatives(TrainState& state, int epoch,
                                                std::array<double, 3>& score_summary) {
    const std::size_t e_count = state.split.train.size();
    const std::uint64_t seed = state.cfg.seed + static_cast<std::uint64_t>(epoch);
    score_summary = {0.0, 0.0, 0.0};
    if (state.cfg.sampling == Sampling::random_uniform)
        return graph::sample_negative_candidates(state.num_nodes, state.exclusion, e_count, seed)
            .candidates;

    auto ctx = fuzzy::make_scoring_context(state.net.embeddings.to_matrix(), state.train_view,
                                           state.cfg.relation, state.cfg.alpha);
    auto scored = fuzzy::score_candidates(state.train_view, ctx, state.exclusion, e_count, seed);
    std::vector<graph::Edge> negatives;
    negatives.reserve(e_count);
    double lo = 1.0, hi = 0.0, total = 0.0;
    for (const fuzzy::ScoredEdge& s : scored) {
        if (!s.selected) continue;
        negatives.push_back(s.edge);
        lo = std::min(lo, s.score);
        hi = std::max(hi, s.score);
        total += s.score;
    }
    if (!negatives.empty())
        score_summary = {lo, total / static_cast<double>(negatives.size()), hi};
    return negatives;
}

std::vector<double> link_scores(const Matrix& h, const std::vector<graph::Edge>& edges) {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const graph::Edge& e : edges) out.push_back(model::link_probability(h, e.src, e.dst));
    return out;
}

}  // namespace

EpochReport train_epoch(TrainState& state, int epoch) {
    std::array<double, 3> score_summary{};
    std::vector<graph::Edge> negatives = sample_epoch_negatives(state, epoch, score_summary);

    std::vector<graph::Edge> batch = state.split.train;
    batch.insert(batch.end(), negatives.begin(), negatives.end());
    std::vector<double> labels(batch.size(), 0.0);
    std::fill(labels.begin(), labels.begin() + state.split.train.size(), 1.0);

    std::mt19937_64 dropout_gen(rng::mix_seed(state.cfg.seed, 0x64726f70ULL + epoch));
    ad::Tensor h = model::model_forward(state.net, state.message_graph, /*train=*/true, dropout_gen);
    ad::Tensor probs = model::link_probability(h, batch);
    ad::Tensor loss = ad::bce_loss(probs, labels);
    if (!std::isfinite(loss.item()))
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));

    auto params = state.net.parameters();
    ad::zero_all_grads(params);
    ad::backward(loss);
    state.adam.step(params);

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss.item();
    report.neg_score_min = score_summary[0];
    report.neg_score_mean = score_summary[1];
    report.neg_score_max = score_summary[2];
    return report;
}

Matrix final_embeddings(const TrainState& state) {
    std::mt19937_64 unused(0);
    return model::model_forward(state.net, state.message_graph, /*train=*/false, unused)
        .to_matrix();
}

double roc_auc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty())
        throw std::invalid_argument("roc_auc needs non-empty score lists");
    std::vector<double> neg = neg_scores;
    std::sort(neg.begin(), neg.end());
    double wins = 0.0, ties = 0.0;
    for (double p : pos_scores) {
        auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        auto hi = std::upper_bound(lo, neg.end(), p);
        wins += static_cast<double>(lo - neg.begin());
        ties += static_cast<double>(hi - lo);
    }
    return (wins + 0.5 * ties) /
           (static_cast<double>(pos_scores.size()) * static_cast<double>(neg_scores.size()));
}

MetricsReport evaluate(const Matrix& h_final, const std::vector<graph::Edge>& positives,
                       const std::vector<graph::Edge>& negatives, double threshold) {
    if (positives.empty() || negatives.empty())
        throw std::invalid_argument("evaluate needs non-empty edge lists");
    std::vector<double> pos = link_scores(h_final, positives);
    std::vector<double> neg = link_scores(h_final, negatives);

    MetricsReport r;
    for (double p : pos) (p >= threshold ? r.tp : r.fn) += 1;
    for (double p : neg) (p >= threshold ? r.fp : r.tn) += 1;
    r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp)
                                    : 0.0;
    r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn)
                                 : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    r.roc_auc = roc_auc(pos, neg);
    return r;
}

FitResult fit(TrainState& state) {
    const auto val_negatives =
        graph::sample_negative_candidates(state.num_nodes, state.exclusion,
                                          state.split.validation.size(),
                                          validation_negative_seed(state.cfg.seed))
            .candidates;

    FitResult result;
    result.best_val_roc = -1.0;
    std::vector<std::vector<double>> best_snapshot = state.net.snapshot();
    int since_best = 0;
    for (int epoch = 1; epoch <= state.cfg.epochs_max; ++epoch) {
        EpochReport report = train_epoch(state, epoch);
        Matrix h = final_embeddings(state);
        report.val_roc_auc = roc_auc(link_scores(h, state.split.validation),
                                     link_scores(h, val_negatives));
        result.history.push_back(report);
        result.epochs_trained = epoch;
        if (report.val_roc_auc > result.best_val_roc) {
            result.best_val_roc = report.val_roc_auc;
            result.best_epoch = epoch;
            best_snapshot = state.net.snapshot();
            since_best = 0;
        } else if (++since_best >= state.cfg.patience) {
            break;
        }
    }
    state.net.restore(best_snapshot);
    return result;
}

std::vector<RunResult> run_experiment(const graph::Graph& g, const ExperimentConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("run_experiment needs at least one seed");
    std::vector<RunResult> runs;
    for (std::uint64_t seed : seeds) {
        const auto start = std::chrono::steady_clock::now();
        TrainConfig tcfg = cfg.train;
        tcfg.seed = seed;
        graph::EdgeSplit split = graph::split_edges(g, cfg.split_ratios, seed);
        TrainState state = make_train_state(g, split, tcfg, cfg.model);

        RunResult run;
        run.seed = seed;
        run.fit = fit(state);
        const auto test_negatives =
            graph::sample_negative_candidates(g.num_nodes, state.exclusion, split.test.size(),
                                              test_negative_seed(seed))
                .candidates;
        run.test = evaluate(final_embeddings(state), split.test, test_negatives, tcfg.threshold);
        run.net = std::move(state.net);
        run.split = std::move(state.split);
        run.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        runs.push_back(std::move(run));
    }
    return runs;
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

}  // namespace

AggregateReport aggregate(const std::vector<RunResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("nothing to aggregate");
    std::vector<double> p, r, f, roc;
    for (const RunResult& run : runs) {
        p.push_back(run.test.precision);
        r.push_back(run.test.recall);
        f.push_back(run.test.f1);
        roc.push_back(run.test.roc_auc);
    }
    AggregateReport agg;
    agg.precision = summarize(p);
    agg.recall = summarize(r);
    agg.f1 = summarize(f);
    agg.roc_auc = summarize(roc);
    agg.mean_of_means =
        (agg.precision.mean + agg.recall.mean + agg.f1.mean + agg.roc_auc.mean) / 4.0;
    return agg;
}

}  // namespace fgat::train
