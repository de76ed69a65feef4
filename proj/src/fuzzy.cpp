#include "fgat/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fgat::fuzzy {

Kernel kernel_from_name(const std::string& name) {
    if (name == "gaussian") return Kernel::gaussian;
    if (name == "exponential") return Kernel::exponential;
    if (name == "rational-quadratic") return Kernel::rational_quadratic;
    throw std::invalid_argument("unknown kernel: " + name);
}

std::string kernel_name(Kernel k) {
    switch (k) {
        case Kernel::gaussian: return "gaussian";
        case Kernel::exponential: return "exponential";
        case Kernel::rational_quadratic: return "rational-quadratic";
    }
    throw std::logic_error("bad kernel enum");
}

namespace {

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

double kernel_from_sqdist(double sq, const RelationConfig& cfg) {
    switch (cfg.kernel) {
        case Kernel::gaussian: return std::exp(-sq / cfg.delta);
        case Kernel::exponential: return std::exp(-std::sqrt(sq) / cfg.delta);
        case Kernel::rational_quadratic: return 1.0 - sq / (sq + cfg.delta);
    }
    throw std::logic_error("bad kernel enum");
}

}  // namespace

double kernel_similarity(std::span<const double> x, std::span<const double> y,
                         const RelationConfig& cfg) {
    if (x.size() != y.size()) throw std::invalid_argument("kernel inputs differ in dimension");
    if (cfg.delta <= 0.0) throw std::invalid_argument("kernel bandwidth must be positive");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument("non-finite kernel input");
    return kernel_from_sqdist(squared_distance(x, y), cfg);
}

double resolve_delta(const Matrix& embeddings, const RelationConfig& cfg) {
    if (!cfg.auto_delta) {
        if (cfg.delta <= 0.0) throw std::invalid_argument("kernel bandwidth must be positive");
        return cfg.delta;
    }
    const std::size_t n = embeddings.rows;
    if (n < 2) return 1.0;
    // sum_{i,j} ||x_i - x_j||^2 = 2n * sum_i ||x_i||^2 - 2 * ||sum_i x_i||^2
    double sum_sq = 0.0;
    std::vector<double> total(embeddings.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = embeddings.row(i);
        for (std::size_t c = 0; c < r.size(); ++c) {
            sum_sq += r[c] * r[c];
            total[c] += r[c];
        }
    }
    double total_sq = 0.0;
    for (double t : total) total_sq += t * t;
    double nd = static_cast<double>(n);
    double mean = (2.0 * nd * sum_sq - 2.0 * total_sq) / (nd * (nd - 1.0));
    return std::max(mean, 1e-12);
}

SimilarityMatrix relation_matrix(const Matrix& embeddings, const RelationConfig& cfg) {
    const std::size_t n = embeddings.rows;
    if (n == 0) throw std::invalid_argument("empty embedding matrix");
    for (double v : embeddings.data)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite embeddings");

    RelationConfig resolved = cfg;
    resolved.delta = resolve_delta(embeddings, cfg);
    resolved.auto_delta = false;

    SimilarityMatrix R;
    R.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        R.values(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double k = kernel_from_sqdist(squared_distance(embeddings.row(i), embeddings.row(j)),
                                          resolved);
            R.values(i, j) = k;
            R.values(j, i) = k;
        }
    }
    return R;
}

double lower_approximation(const SimilarityMatrix& R, const std::vector<double>& d, int x) {
    const std::size_t n = R.size();
    if (d.size() != n) throw std::invalid_argument("decision membership length mismatch");
    if (x < 0 || static_cast<std::size_t>(x) >= n) throw std::out_of_range("node id out of range");
    double lo = 1.0;
    for (std::size_t y = 0; y < n; ++y)
        lo = std::min(lo, std::max(1.0 - R(x, y), d[y]));
    return lo;
}

double upper_approximation(const SimilarityMatrix& R, const std::vector<double>& d, int x) {
    const std::size_t n = R.size();
    if (d.size() != n) throw std::invalid_argument("decision membership length mismatch");
    if (x < 0 || static_cast<std::size_t>(x) >= n) throw std::out_of_range("node id out of range");
    double hi = 0.0;
    for (std::size_t y = 0; y < n; ++y)
        hi = std::max(hi, std::min(R(x, y), d[y]));
    return hi;
}

ScoringContext make_scoring_context(const Matrix& embeddings, const graph::Graph& g,
                                    const RelationConfig& cfg, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must lie in [0,1]");
    ScoringContext ctx;
    ctx.relation = relation_matrix(embeddings, cfg);
    ctx.alpha = alpha;
    ctx.membership.resize(g.num_nodes);
    for (int v = 0; v < g.num_nodes; ++v) {
        std::vector<double> d(g.num_nodes);
        for (int u = 0; u < g.num_nodes; ++u) d[u] = ctx.relation(v, u);
        for (int u : g.neighbors[v]) d[u] = 1.0;  // neighbor index already contains v
        ctx.membership[v] = std::move(d);
    }
    return ctx;
}

double edge_quality_score(const ScoringContext& ctx, int x, int y) {
    if (x == y) throw std::invalid_argument("edge quality score needs distinct endpoints");
    double in_y = lower_approximation(ctx.relation, ctx.membership[y], x);
    double in_x = lower_approximation(ctx.relation, ctx.membership[x], y);
    return ctx.alpha * in_y + (1.0 - ctx.alpha) * in_x;
}

std::vector<ScoredEdge> score_candidates(const graph::Graph& g, const ScoringContext& ctx,
                                         const graph::PairSet& exclusion, std::size_t e_count,
                                         std::uint64_t seed) {
    auto candidates = graph::sample_negative_candidates(g.num_nodes, exclusion, 2 * e_count, seed);
    std::vector<ScoredEdge> scored;
    scored.reserve(candidates.candidates.size());
    for (const graph::Edge& e : candidates.candidates)
        scored.push_back({e, edge_quality_score(ctx, e.src, e.dst), false});

    std::sort(scored.begin(), scored.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.edge < b.edge;
    });
    for (std::size_t i = 0; i < e_count && i < scored.size(); ++i) scored[i].selected = true;
    return scored;
}

std::vector<graph::Edge> fuzzy_negative_sample(const graph::Graph& g, const ScoringContext& ctx,
                                               const graph::PairSet& exclusion,
                                               std::size_t e_count, std::uint64_t seed) {
    auto scored = score_candidates(g, ctx, exclusion, e_count, seed);
    std::vector<graph::Edge> out;
    out.reserve(e_count);
    for (const ScoredEdge& s : scored)
        if (s.selected) out.push_back(s.edge);
    return out;
}

}  // namespace fgat::fuzzy
