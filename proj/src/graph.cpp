#include "zskg/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

#include "zskg/errors.hpp"

namespace zskg {

ClassGraph::ClassGraph(std::vector<ClassNode> nodes,
                       std::vector<std::pair<std::size_t, std::size_t>> edges)
    : nodes_(std::move(nodes)) {
    std::set<int> ids;
    for (const ClassNode& n : nodes_) {
        if (!ids.insert(n.id).second) {
            throw data_error("graph: duplicate node id " + std::to_string(n.id));
        }
    }
    std::set<std::pair<std::size_t, std::size_t>> seen_edges;
    edges_.reserve(edges.size());
    for (auto [a, b] : edges) {
        if (a >= nodes_.size() || b >= nodes_.size()) {
            throw data_error("graph: edge (" + std::to_string(a) + "," + std::to_string(b) +
                             ") out of range for " + std::to_string(nodes_.size()) + " nodes");
        }
        if (a == b) {
            throw data_error("graph: self edge at node " + std::to_string(a));
        }
        auto canon = std::minmax(a, b);
        if (!seen_edges.insert(canon).second) {
            throw data_error("graph: duplicate edge (" + std::to_string(canon.first) + "," +
                             std::to_string(canon.second) + ")");
        }
        edges_.emplace_back(canon.first, canon.second);
    }
    adjacency_.assign(nodes_.size(), {});
    for (auto [a, b] : edges_) {
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

std::vector<std::size_t> ClassGraph::seen_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].seen) out.push_back(i);
    return out;
}

std::vector<std::size_t> ClassGraph::unseen_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].seen) out.push_back(i);
    return out;
}

std::size_t ClassGraph::index_of_id(int class_id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].id == class_id) return i;
    throw index_error("graph: unknown class id " + std::to_string(class_id));
}

void ClassGraph::require_pipeline_ready() const {
    if (seen_indices().empty() || unseen_indices().empty()) {
        throw data_error("graph: pipeline use needs at least one seen and one unseen node");
    }
}

Matrix AdjacencyOperator::apply(const Matrix& f) const {
    if (f.rows() != entries_.size()) {
        throw shape_error("adjacency apply: " + std::to_string(f.rows()) + " feature rows for " +
                          std::to_string(entries_.size()) + " nodes");
    }
    Matrix out(f.rows(), f.cols());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        double* oi = out.row_ptr(i);
        for (auto [j, v] : entries_[i]) {
            const double* fj = f.row_ptr(j);
            for (std::size_t c = 0; c < f.cols(); ++c) oi[c] += v * fj[c];
        }
    }
    return out;
}

Matrix AdjacencyOperator::apply_transpose(const Matrix& g) const {
    if (g.rows() != entries_.size()) {
        throw shape_error("adjacency apply_transpose: row count mismatch");
    }
    Matrix out(g.rows(), g.cols());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const double* gi = g.row_ptr(i);
        for (auto [j, v] : entries_[i]) {
            double* oj = out.row_ptr(j);
            for (std::size_t c = 0; c < g.cols(); ++c) oj[c] += v * gi[c];
        }
    }
    return out;
}

Matrix AdjacencyOperator::dense() const {
    Matrix m(entries_.size(), entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
        for (auto [j, v] : entries_[i]) m(i, j) = v;
    return m;
}

double AdjacencyOperator::row_sum(std::size_t i) const {
    double s = 0.0;
    for (auto [j, v] : entries_[i]) s += v;
    return s;
}

AdjacencyOperator normalized_adjacency(const ClassGraph& g) {
    AdjacencyOperator op;
    op.entries_.resize(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        std::vector<std::size_t> cols = g.neighbors(i);
        cols.push_back(i); // self-loop guarantees positive degree
        std::sort(cols.begin(), cols.end());
        const double inv_deg = 1.0 / static_cast<double>(cols.size());
        op.entries_[i].reserve(cols.size());
        for (std::size_t j : cols) op.entries_[i].emplace_back(j, inv_deg);
    }
    return op;
}

HopPartition hop_partition(const ClassGraph& g) {
    const auto seen = g.seen_indices();
    if (seen.empty()) {
        throw domain_error("hop_partition: seen set is empty");
    }
    constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(g.node_count(), kUnreached);
    std::deque<std::size_t> queue;
    for (std::size_t s : seen) {
        dist[s] = 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t v : g.neighbors(u)) {
            if (dist[v] == kUnreached) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    HopPartition part;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (g.node(i).seen) continue;
        const int id = g.node(i).id;
        part.all.insert(id);
        if (dist[i] <= 2) part.two_hop.insert(id);
        if (dist[i] <= 3) part.three_hop.insert(id);
    }
    return part;
}

} // namespace zskg
