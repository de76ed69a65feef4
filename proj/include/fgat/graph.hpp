#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace fgat::graph {

struct Edge {
    int src = 0;
    int dst = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Hashable set of ordered (src, dst) pairs.
class PairSet {
public:
    void insert(Edge e) { pairs_.insert(key(e)); }
    bool contains(Edge e) const { return pairs_.contains(key(e)); }
    std::size_t size() const { return pairs_.size(); }

private:
    static std::uint64_t key(Edge e) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.src)) << 32) |
               static_cast<std::uint32_t>(e.dst);
    }
    std::unordered_set<std::uint64_t> pairs_;
};

// Directed graph with a dense 0-based node range. The neighbor index is
// built for message passing: every stored edge contributes both directions
// and every node carries a self-loop, so neighbors(v) is never empty.
struct Graph {
    int num_nodes = 0;
    std::vector<Edge> edges;
    bool directed = true;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::int64_t> original_ids;  // dense id -> id in the input file
    int dropped_self_loops = 0;
    int dropped_duplicates = 0;
};

struct EdgeSplit {
    std::vector<Edge> train;
    std::vector<Edge> validation;
    std::vector<Edge> test;
    std::uint64_t seed = 0;
};

struct CandidateSet {
    std::vector<Edge> candidates;
};

// Builds a Graph (with the self-loop-augmented bidirectional neighbor index)
// from an already-clean edge list over nodes [0, num_nodes).
Graph graph_from_edges(int num_nodes, std::vector<Edge> edges);

// Parses a whitespace-separated edge list. Lines starting with '%' or '#'
// are comments; a third numeric token per line is ignored. Node ids are
// relabeled to a dense 0-based range; self-loops and duplicate pairs are
// dropped and counted.
Graph load_edge_list(const std::string& path);

void write_edge_list(const std::string& path, const Graph& g);

// Seeded shuffle, then contiguous floor/floor/remainder partition.
EdgeSplit split_edges(const Graph& g, std::array<double, 3> ratios, std::uint64_t seed);

// `count` distinct ordered non-self-loop pairs outside `exclusion`,
// sampled uniformly without replacement.
CandidateSet sample_negative_candidates(int num_nodes, const PairSet& exclusion,
                                        std::size_t count, std::uint64_t seed);

// Exclusion set containing every split edge in both directions.
PairSet all_positive_pairs(const EdgeSplit& split);

}  // namespace fgat::graph
