/*
 * Copyright 2026 The splitarch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "splitarch/dataplane.hpp"

namespace splitarch {

struct Edge {
    NodeId a = 0;
    NodeId b = 0;
    PortId port_a = 0;
    PortId port_b = 0;
    std::uint32_t weight = 1;
    bool up = true;

    NodeId other(NodeId n) const { return n == a ? b : a; }
    PortId port_at(NodeId n) const { return n == a ? port_a : port_b; }
};

using EdgeId = std::size_t;

/// Undirected weighted multigraph over switch ids.
class DomainGraph {
public:
    void add_node(NodeId n);
    EdgeId add_edge(const Edge& e);

    bool has_node(NodeId n) const;
    const std::vector<NodeId>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    Edge& edge(EdgeId id) { return edges_.at(id); }
    const Edge& edge(EdgeId id) const { return edges_.at(id); }

    /// Incident edges that are up, in edge-id order.
    const std::vector<EdgeId>& incident(NodeId n) const;
    std::optional<EdgeId> edge_at(NodeId n, PortId port) const;

    /// Dense index of a node, used for bitset keys.
    std::size_t index_of(NodeId n) const;

private:
    std::vector<NodeId> nodes_;
    std::vector<Edge> edges_;
    std::map<NodeId, std::vector<EdgeId>> incident_;
};

struct TreeHop {
    NodeId next = 0;
    PortId out_port = 0;
    EdgeId edge = 0;
    bool operator==(const TreeHop&) const = default;
};

/// Shortest-path tree toward `dst`. Labels are assigned by the controller.
struct MergingTree {
    NodeId dst = 0;
    std::map<NodeId, TreeHop> parent;
    std::map<NodeId, std::uint64_t> distance;
    std::map<NodeId, std::uint32_t> labels;

    bool reaches(NodeId n) const { return n == dst || parent.count(n) != 0; }
    /// Node sequence from `from` to dst following parent pointers.
    std::vector<NodeId> path_from(NodeId from) const;
};

/// Among equal-weight paths the one whose node set, then edge set, read as a
/// binary number (bit i = dense index i) is smallest wins. The key depends
/// only on the path, so the a->b and b->a choices coincide.
MergingTree compute_merging_tree(const DomainGraph& g, NodeId dst);

std::vector<MergingTree> compute_all_merging_trees(const DomainGraph& g,
                                                   const std::vector<NodeId>& dsts);
/// Same result as compute_all_merging_trees, one destination per thread.
std::vector<MergingTree> compute_all_merging_trees_parallel(const DomainGraph& g,
                                                            const std::vector<NodeId>& dsts);

struct Path {
    std::vector<NodeId> nodes;
    std::vector<EdgeId> edges;
    std::uint64_t weight = 0;
    bool operator==(const Path&) const = default;
};

/// Minimum total weight pair of edge-disjoint a-b paths. The lighter path is
/// returned first; equal weights are ordered by node sequence.
std::pair<Path, Path> compute_disjoint_pair(const DomainGraph& g, NodeId a, NodeId b);

Path reversed(const Path& p);

} // namespace splitarch
