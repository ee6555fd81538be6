#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "zskg/matrix.hpp"

namespace zskg {

struct ClassNode {
    int id = 0;
    std::string label;
    bool seen = false;

    bool operator==(const ClassNode&) const = default;
};

/// Undirected class knowledge graph. Edges reference node indices; ids are
/// the class identifiers used by feature stores and sample files.
class ClassGraph {
public:
    ClassGraph() = default;

    /// Validates: unique ids, endpoints in range, no self edges, no duplicate
    /// undirected edges. Edges are canonicalized as (min,max).
    ClassGraph(std::vector<ClassNode> nodes, std::vector<std::pair<std::size_t, std::size_t>> edges);

    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<ClassNode>& nodes() const { return nodes_; }
    const ClassNode& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_[i]; }

    std::vector<std::size_t> seen_indices() const;
    std::vector<std::size_t> unseen_indices() const;
    std::size_t index_of_id(int class_id) const; // throws if unknown

    /// Pipelines need at least one seen and one unseen node.
    void require_pipeline_ready() const;

    bool operator==(const ClassGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_;
    }

private:
    std::vector<ClassNode> nodes_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

/// Sparse row-normalized propagation operator D^-1 (A + I). Every row sums
/// to 1; the sparsity pattern is the edge set plus self-loops.
class AdjacencyOperator {
public:
    AdjacencyOperator() = default;

    std::size_t size() const { return entries_.size(); }

    /// A_hat * f. f must have one row per graph node.
    Matrix apply(const Matrix& f) const;

    /// A_hat^T * g, used by backward passes.
    Matrix apply_transpose(const Matrix& g) const;

    Matrix dense() const;

    double row_sum(std::size_t i) const;

    friend AdjacencyOperator normalized_adjacency(const ClassGraph& g);

private:
    // per row: (column, value), sorted by column
    std::vector<std::vector<std::pair<std::size_t, double>>> entries_;
};

AdjacencyOperator normalized_adjacency(const ClassGraph& g);

/// Unseen nodes grouped by BFS distance from the seen set, keyed by class id.
/// two_hop: distance <= 2; three_hop: distance <= 3; all: every unseen node,
/// including ones unreachable from the seen set.
struct HopPartition {
    std::set<int> two_hop;
    std::set<int> three_hop;
    std::set<int> all;
};

HopPartition hop_partition(const ClassGraph& g);

} // namespace zskg
