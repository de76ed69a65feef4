// Command-line entry point: train / evaluate / sample / split.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fgat/fuzzy.hpp"
#include "fgat/graph.hpp"
#include "fgat/model.hpp"
#include "fgat/rng.hpp"
#include "fgat/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("FGAT_LOG");
    if (!env) return LogLevel::info;
    std::string v = env;
    if (v == "error") return LogLevel::error;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::info;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[fgat] " << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[fgat:debug] " << msg << '\n';
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "needs at least one seed");
    return seeds;
}

std::array<double, 3> parse_split(const std::string& s) {
    std::array<double, 3> r{};
    std::stringstream ss(s);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, tok, ',')) throw CLI::ValidationError("--split", "expects a,b,c");
        r[i] = std::stod(tok);
    }
    return r;
}

// Options shared by the subcommands that run the model.
struct RunOptions {
    std::string graph_path;
    std::string out_dir = "runs";
    std::string seeds_str = "0";
    std::string sampling = "fuzzy";
    std::string kernel = "gaussian";
    std::string delta = "auto";
    double alpha = 0.5;
    int heads = 4;
    int layers = 4;
    int dim = 128;
    double dropout = 0.1;
    double lr = 1e-3;
    int epochs = 200;
    int patience = 20;
    std::string split_str = "0.7,0.1,0.2";

    fgat::train::ExperimentConfig to_experiment() const {
        fgat::train::ExperimentConfig cfg;
        cfg.train.sampling = fgat::train::sampling_from_name(sampling);
        cfg.train.alpha = alpha;
        cfg.train.lr = lr;
        cfg.train.epochs_max = epochs;
        cfg.train.patience = patience;
        cfg.train.relation.kernel = fgat::fuzzy::kernel_from_name(kernel);
        if (delta == "auto") {
            cfg.train.relation.auto_delta = true;
        } else {
            cfg.train.relation.auto_delta = false;
            cfg.train.relation.delta = std::stod(delta);
        }
        cfg.model.embedding_dim = dim;
        cfg.model.num_heads = heads;
        if (dim % heads != 0)
            throw CLI::ValidationError("--dim", "must be divisible by --heads");
        cfg.model.head_dim = dim / heads;
        cfg.model.num_layers = layers;
        cfg.model.dropout_p = dropout;
        cfg.split_ratios = parse_split(split_str);
        return cfg;
    }
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool graph_required) {
    auto* g = cmd->add_option("--graph", o.graph_path, "edge-list file");
    if (graph_required) g->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seeds", o.seeds_str, "comma-separated RNG seeds");
    cmd->add_option("--sampling", o.sampling, "negative sampling mode")
        ->check(CLI::IsMember({"fuzzy", "random"}));
    cmd->add_option("--kernel", o.kernel, "fuzzy relation kernel")
        ->check(CLI::IsMember({"gaussian", "exponential", "rational-quadratic"}));
    cmd->add_option("--delta", o.delta, "kernel bandwidth, or 'auto'");
    cmd->add_option("--alpha", o.alpha, "quality score mixing weight");
    cmd->add_option("--heads", o.heads, "attention heads per layer");
    cmd->add_option("--layers", o.layers, "stacked FGAT layers");
    cmd->add_option("--dim", o.dim, "embedding dimension");
    cmd->add_option("--dropout", o.dropout, "dropout probability");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--epochs", o.epochs, "maximum training epochs");
    cmd->add_option("--patience", o.patience, "early-stopping patience");
    cmd->add_option("--split", o.split_str, "train,val,test ratios");
}

void validate_run_options(const RunOptions& o) {
    if (o.alpha < 0.0 || o.alpha > 1.0)
        throw CLI::ValidationError("--alpha", "alpha must lie in [0,1]");
    if (o.dropout < 0.0 || o.dropout >= 1.0)
        throw CLI::ValidationError("--dropout", "dropout must lie in [0,1)");
    if (o.delta != "auto" && std::stod(o.delta) <= 0.0)
        throw CLI::ValidationError("--delta", "delta must be positive or 'auto'");
    if (o.epochs < 1) throw CLI::ValidationError("--epochs", "epochs must be >= 1");
    if (o.patience < 1) throw CLI::ValidationError("--patience", "patience must be >= 1");
}

json metrics_json(const std::string& dataset, std::uint64_t seed, const RunOptions& o,
                  const fgat::train::MetricsReport& m, int epochs_trained) {
    return json{{"dataset", dataset},
                {"seed", seed},
                {"sampling_mode", o.sampling},
                {"kernel", o.kernel},
                {"alpha", o.alpha},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"roc_auc", m.roc_auc},
                {"epochs_trained", epochs_trained}};
}

int cmd_train(const RunOptions& o, const CLI::App& app) {
    validate_run_options(o);
    auto seeds = parse_seeds(o.seeds_str);
    auto cfg = o.to_experiment();

    fgat::graph::Graph g;
    try {
        g = fgat::graph::load_edge_list(o.graph_path);
    } catch (const std::exception& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 2;
    }
    log_info("loaded " + o.graph_path + ": " + std::to_string(g.num_nodes) + " nodes, " +
             std::to_string(g.edges.size()) + " edges");

    fs::create_directories(o.out_dir);
    const std::string stem = fs::path(o.graph_path).stem().string();
    const std::string tag = stem + "_" + o.sampling;

    auto runs = fgat::train::run_experiment(g, cfg, seeds);

    std::ofstream csv(fs::path(o.out_dir) / (tag + "_aggregate.csv"));
    csv << "dataset,sampling,seed,precision,recall,f1,roc_auc,epochs_trained,wall_seconds\n";
    char buf[32];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& run : runs) {
        json j = metrics_json(stem, run.seed, o, run.test, run.fit.epochs_trained);
        std::ofstream jf(fs::path(o.out_dir) /
                         (tag + "_seed" + std::to_string(run.seed) + ".metrics.json"));
        jf << j.dump(2) << '\n';

        fgat::model::Checkpoint meta;
        meta.cfg = cfg.model;
        meta.num_nodes = g.num_nodes;
        meta.seed = run.seed;
        meta.split_ratios = cfg.split_ratios;
        meta.graph_path = o.graph_path;
        fgat::model::save_checkpoint(
            (fs::path(o.out_dir) / (tag + "_seed" + std::to_string(run.seed) + ".ckpt")).string(),
            run.net, meta);

        csv << stem << ',' << o.sampling << ',' << run.seed << ',' << num(run.test.precision)
            << ',' << num(run.test.recall) << ',' << num(run.test.f1) << ','
            << num(run.test.roc_auc) << ',' << run.fit.epochs_trained << ','
            << num(run.wall_seconds) << '\n';
        log_info("seed " + std::to_string(run.seed) + ": roc=" + num(run.test.roc_auc) +
                 " f1=" + num(run.test.f1) + " (" + std::to_string(run.fit.epochs_trained) +
                 " epochs)");
    }

    auto agg = fgat::train::aggregate(runs);
    log_info("mean roc=" + num(agg.roc_auc.mean) + " +- " + num(agg.roc_auc.stddev) +
             ", mean f1=" + num(agg.f1.mean));

    std::ofstream eff(fs::path(o.out_dir) / (tag + "_config.txt"));
    eff << app.config_to_str(true, false);
    return 0;
}

int cmd_evaluate(const std::string& ckpt_path, std::string graph_path) {
    fgat::model::Checkpoint meta;
    fgat::model::Model net = fgat::model::load_checkpoint(ckpt_path, meta);
    if (graph_path.empty()) graph_path = meta.graph_path;

    fgat::graph::Graph g;
    try {
        g = fgat::graph::load_edge_list(graph_path);
    } catch (const std::exception& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 2;
    }
    if (g.num_nodes != meta.num_nodes) {
        std::cerr << "checkpoint was trained on a " << meta.num_nodes << "-node graph, got "
                  << g.num_nodes << '\n';
        return 2;
    }

    auto split = fgat::graph::split_edges(g, meta.split_ratios, meta.seed);
    auto exclusion = fgat::graph::all_positive_pairs(split);
    auto mg = fgat::model::build_message_graph(g.num_nodes, split.train);
    auto negatives = fgat::graph::sample_negative_candidates(
                         g.num_nodes, exclusion, split.test.size(),
                         fgat::train::test_negative_seed(meta.seed))
                         .candidates;
    std::mt19937_64 unused(0);
    fgat::Matrix h = fgat::model::model_forward(net, mg, false, unused).to_matrix();
    auto m = fgat::train::evaluate(h, split.test, negatives, 0.5);

    json j{{"dataset", fs::path(graph_path).stem().string()},
           {"seed", meta.seed},
           {"precision", m.precision},
           {"recall", m.recall},
           {"f1", m.f1},
           {"roc_auc", m.roc_auc},
           {"tp", m.tp},
           {"fp", m.fp},
           {"tn", m.tn},
           {"fn", m.fn}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_sample(const RunOptions& o, const std::string& ckpt_path, const std::string& csv_out) {
    validate_run_options(o);
    auto seeds = parse_seeds(o.seeds_str);
    const std::uint64_t seed = seeds.front();
    auto cfg = o.to_experiment();
    cfg.train.seed = seed;

    fgat::graph::Graph g;
    try {
        g = fgat::graph::load_edge_list(o.graph_path);
    } catch (const std::exception& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 2;
    }

    fgat::model::Model net;
    if (!ckpt_path.empty()) {
        fgat::model::Checkpoint meta;
        net = fgat::model::load_checkpoint(ckpt_path, meta);
    } else {
        log_debug("no checkpoint given; scoring with randomly initialized embeddings");
        net = fgat::model::init_model(cfg.model, g.num_nodes, seed);
    }

    auto split = fgat::graph::split_edges(g, cfg.split_ratios, seed);
    auto exclusion = fgat::graph::all_positive_pairs(split);
    auto train_view = fgat::graph::graph_from_edges(g.num_nodes, split.train);
    auto ctx = fgat::fuzzy::make_scoring_context(net.embeddings.to_matrix(), train_view,
                                                 cfg.train.relation, cfg.train.alpha);
    auto scored = fgat::fuzzy::score_candidates(train_view, ctx, exclusion, split.train.size(),
                                                seed);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!csv_out.empty()) {
        file.open(csv_out);
        out = &file;
    }
    char buf[32];
    *out << "src,dst,score,selected\n";
    for (const auto& s : scored) {
        std::snprintf(buf, sizeof buf, "%.17g", s.score);
        *out << s.edge.src << ',' << s.edge.dst << ',' << buf << ',' << (s.selected ? 1 : 0)
             << '\n';
    }
    return 0;
}

int cmd_split(const std::string& graph_path, std::uint64_t seed, const std::string& split_str,
              const std::string& out_prefix) {
    fgat::graph::Graph g;
    try {
        g = fgat::graph::load_edge_list(graph_path);
    } catch (const std::exception& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 2;
    }
    auto split = fgat::graph::split_edges(g, parse_split(split_str), seed);
    auto dump = [&](const std::string& name, const std::vector<fgat::graph::Edge>& edges) {
        std::ofstream out(out_prefix + "." + name + ".edges");
        for (const auto& e : edges)
            out << g.original_ids[e.src] << ' ' << g.original_ids[e.dst] << '\n';
    };
    dump("train", split.train);
    dump("val", split.validation);
    dump("test", split.test);
    log_info("wrote " + out_prefix + ".{train,val,test}.edges");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FGAT link prediction: fuzzy negative sampling + stacked graph attention"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags override");

    RunOptions train_opts;
    auto* train_cmd = app.add_subcommand("train", "train and evaluate over a seed list");
    add_run_options(train_cmd, train_opts, true);

    std::string eval_ckpt, eval_graph;
    auto* eval_cmd = app.add_subcommand("evaluate", "re-evaluate a checkpoint on its test split");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--graph", eval_graph, "edge-list file (default: path in checkpoint)");

    RunOptions sample_opts;
    std::string sample_ckpt, sample_csv;
    auto* sample_cmd = app.add_subcommand("sample", "dump scored negative candidates as CSV");
    add_run_options(sample_cmd, sample_opts, true);
    sample_cmd->add_option("--checkpoint", sample_ckpt, "score with a trained model's embeddings");
    sample_cmd->add_option("--csv", sample_csv, "CSV output path (default: stdout)");

    std::string split_graph, split_prefix = "split", split_ratios = "0.7,0.1,0.2";
    std::uint64_t split_seed = 0;
    auto* split_cmd = app.add_subcommand("split", "materialize a seeded edge split");
    split_cmd->add_option("--graph", split_graph, "edge-list file")->required();
    split_cmd->add_option("--seed", split_seed, "RNG seed");
    split_cmd->add_option("--split", split_ratios, "train,val,test ratios");
    split_cmd->add_option("--out", split_prefix, "output file prefix");

    try {
        app.parse(argc, argv);
        if (*train_cmd) return cmd_train(train_opts, app);
        if (*eval_cmd) return cmd_evaluate(eval_ckpt, eval_graph);
        if (*sample_cmd) return cmd_sample(sample_opts, sample_ckpt, sample_csv);
        if (*split_cmd) return cmd_split(split_graph, split_seed, split_ratios, split_prefix);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
