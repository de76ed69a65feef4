#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fgat/graph.hpp"
#include "fgat/matrix.hpp"

namespace fgat::fuzzy {

enum class Kernel { gaussian, exponential, rational_quadratic };

Kernel kernel_from_name(const std::string& name);
std::string kernel_name(Kernel k);

struct RelationConfig {
    Kernel kernel = Kernel::gaussian;
    double delta = 1.0;      // bandwidth; ignored when auto_delta
    bool auto_delta = true;  // delta = mean squared pairwise embedding distance
};

// N x N fuzzy relation R(x, y) in (0, 1], reflexive and symmetric.
struct SimilarityMatrix {
    Matrix values;
    std::size_t size() const { return values.rows; }
    double operator()(std::size_t x, std::size_t y) const { return values(x, y); }
};

double kernel_similarity(std::span<const double> x, std::span<const double> y,
                         const RelationConfig& cfg);

// Resolves auto_delta against the given embeddings (mean squared pairwise
// distance over ordered pairs, floored away from zero).
double resolve_delta(const Matrix& embeddings, const RelationConfig& cfg);

SimilarityMatrix relation_matrix(const Matrix& embeddings, const RelationConfig& cfg);

// Min-max approximations over the whole universe, d(y) in [0, 1].
double lower_approximation(const SimilarityMatrix& R, const std::vector<double>& d, int x);
double upper_approximation(const SimilarityMatrix& R, const std::vector<double>& d, int x);

// Everything needed to score candidate negative edges against the model's
// current state. `membership[v]` is the fuzzy decision class d_v: 1 for
// members of N(v) plus v itself, and the relation value R(v, u) elsewhere.
// A crisp indicator would make the lower approximation identically zero for
// every non-member (the u = x term of the infimum collapses to zero under a
// reflexive relation), so the class is fuzzified through the relation.
struct ScoringContext {
    SimilarityMatrix relation;
    std::vector<std::vector<double>> membership;
    double alpha = 0.5;
};

ScoringContext make_scoring_context(const Matrix& embeddings, const graph::Graph& g,
                                    const RelationConfig& cfg, double alpha);

// alpha * lower(x in d_y) + (1 - alpha) * lower(y in d_x).
double edge_quality_score(const ScoringContext& ctx, int x, int y);

struct ScoredEdge {
    graph::Edge edge;
    double score = 0.0;
    bool selected = false;
};

// Scores 2*e_count random candidates and flags the top e_count.
// Ties break by (score desc, src asc, dst asc).
std::vector<ScoredEdge> score_candidates(const graph::Graph& g, const ScoringContext& ctx,
                                         const graph::PairSet& exclusion, std::size_t e_count,
                                         std::uint64_t seed);

std::vector<graph::Edge> fuzzy_negative_sample(const graph::Graph& g, const ScoringContext& ctx,
                                               const graph::PairSet& exclusion,
                                               std::size_t e_count, std::uint64_t seed);

}  // namespace fgat::fuzzy
