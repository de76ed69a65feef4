#include "fgat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "fgat/rng.hpp"

namespace fgat::graph {

Graph graph_from_edges(int num_nodes, std::vector<Edge> edges) {
    Graph g;
    g.num_nodes = num_nodes;
    g.edges = std::move(edges);
    g.original_ids.resize(num_nodes);
    for (int v = 0; v < num_nodes; ++v) g.original_ids[v] = v;

    std::vector<std::unordered_set<int>> nbr(num_nodes);
    for (const Edge& e : g.edges) {
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes)
            throw std::invalid_argument("edge endpoint out of range");
        nbr[e.src].insert(e.dst);
        nbr[e.dst].insert(e.src);
    }
    g.neighbors.resize(num_nodes);
    for (int v = 0; v < num_nodes; ++v) {
        nbr[v].insert(v);  // self-loop
        g.neighbors[v].assign(nbr[v].begin(), nbr[v].end());
        std::sort(g.neighbors[v].begin(), g.neighbors[v].end());
    }
    return g;
}

Graph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);

    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '%' || line[first] == '#') continue;
        std::istringstream ls(line);
        std::int64_t a, b;
        if (!(ls >> a >> b))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed edge line: " + line);
        raw.emplace_back(a, b);
    }
    if (raw.empty()) throw std::runtime_error(path + ": no edges found");

    std::map<std::int64_t, int> relabel;
    for (auto [a, b] : raw) {
        relabel.emplace(a, 0);
        relabel.emplace(b, 0);
    }
    int next = 0;
    for (auto& [id, dense] : relabel) dense = next++;

    Graph g;
    g.num_nodes = next;
    g.original_ids.resize(next);
    for (const auto& [id, dense] : relabel) g.original_ids[dense] = id;

    PairSet seen;
    for (auto [a, b] : raw) {
        Edge e{relabel.at(a), relabel.at(b)};
        if (e.src == e.dst) {
            ++g.dropped_self_loops;
            continue;
        }
        if (seen.contains(e)) {
            ++g.dropped_duplicates;
            continue;
        }
        seen.insert(e);
        g.edges.push_back(e);
    }
    if (g.edges.empty()) throw std::runtime_error(path + ": edge set empty after cleaning");

    Graph built = graph_from_edges(g.num_nodes, g.edges);
    built.original_ids = g.original_ids;
    built.dropped_self_loops = g.dropped_self_loops;
    built.dropped_duplicates = g.dropped_duplicates;
    return built;
}

void write_edge_list(const std::string& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge list: " + path);
    for (const Edge& e : g.edges)
        out << g.original_ids[e.src] << ' ' << g.original_ids[e.dst] << '\n';
}

EdgeSplit split_edges(const Graph& g, std::array<double, 3> ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
    for (double r : ratios)
        if (r <= 0.0) throw std::invalid_argument("split ratios must be positive");

    const std::size_t total = g.edges.size();
    const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(total)));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(total)));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= total)
        throw std::invalid_argument("graph too small for the requested split ratios");

    std::vector<Edge> shuffled = g.edges;
    std::mt19937_64 gen(seed);
    rng::shuffle(shuffled, gen);

    EdgeSplit split;
    split.seed = seed;
    split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
    split.validation.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
    split.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
    return split;
}

CandidateSet sample_negative_candidates(int num_nodes, const PairSet& exclusion,
                                        std::size_t count, std::uint64_t seed) {
    std::vector<Edge> pool;
    for (int s = 0; s < num_nodes; ++s)
        for (int d = 0; d < num_nodes; ++d) {
            if (s == d) continue;
            Edge e{s, d};
            if (!exclusion.contains(e)) pool.push_back(e);
        }
    if (count > pool.size())
        throw std::invalid_argument("requested " + std::to_string(count) +
                                    " negative candidates but only " +
                                    std::to_string(pool.size()) + " pairs are eligible");

    // partial Fisher-Yates: the first `count` slots end up a uniform sample
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng::bounded(gen, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return CandidateSet{std::move(pool)};
}

PairSet all_positive_pairs(const EdgeSplit& split) {
    PairSet set;
    for (const auto* part : {&split.train, &split.validation, &split.test})
        for (const Edge& e : *part) {
            set.insert(e);
            set.insert(Edge{e.dst, e.src});
        }
    return set;
}

}  // namespace fgat::graph
