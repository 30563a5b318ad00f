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

#include "splitarch/graph.hpp"

#include <algorithm>
#include <limits>

#include "splitarch/error.hpp"

namespace splitarch {

void DomainGraph::add_node(NodeId n)
{
    if (has_node(n))
        return;
    nodes_.insert(std::lower_bound(nodes_.begin(), nodes_.end(), n), n);
    incident_[n];
}

EdgeId DomainGraph::add_edge(const Edge& e)
{
    if (!has_node(e.a) || !has_node(e.b))
        throw Error(ErrorCode::ConfigError, "edge endpoint not in graph");
    edges_.push_back(e);
    const EdgeId id = edges_.size() - 1;
    incident_[e.a].push_back(id);
    if (e.b != e.a)
        incident_[e.b].push_back(id);
    return id;
}

bool DomainGraph::has_node(NodeId n) const
{
    return std::binary_search(nodes_.begin(), nodes_.end(), n);
}

const std::vector<EdgeId>& DomainGraph::incident(NodeId n) const
{
    return incident_.at(n);
}

std::optional<EdgeId> DomainGraph::edge_at(NodeId n, PortId port) const
{
    auto it = incident_.find(n);
    if (it == incident_.end())
        return std::nullopt;
    for (EdgeId id : it->second) {
        const Edge& e = edges_[id];
        if ((e.a == n && e.port_a == port) || (e.b == n && e.port_b == port))
            return id;
    }
    return std::nullopt;
}

std::size_t DomainGraph::index_of(NodeId n) const
{
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), n);
    if (it == nodes_.end() || *it != n)
        throw Error(ErrorCode::Unreachable, "node " + std::to_string(n) + " not in graph");
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::vector<NodeId> MergingTree::path_from(NodeId from) const
{
    std::vector<NodeId> out{from};
    NodeId at = from;
    while (at != dst) {
        auto it = parent.find(at);
        if (it == parent.end())
            throw Error(ErrorCode::Unreachable, "node " + std::to_string(from));
        at = it->second.next;
        out.push_back(at);
        if (out.size() > parent.size() + 1)
            throw Error(ErrorCode::Unreachable, "parent loop");
    }
    return out;
}

namespace {

class Bits {
public:
    explicit Bits(std::size_t n = 0) : words_((n + 63) / 64, 0) { }

    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }

    friend int compare(const Bits& x, const Bits& y)
    {
        for (std::size_t i = x.words_.size(); i-- > 0;) {
            if (x.words_[i] != y.words_[i])
                return x.words_[i] < y.words_[i] ? -1 : 1;
        }
        return 0;
    }

private:
    std::vector<std::uint64_t> words_;
};

struct PathKey {
    std::uint64_t weight = 0;
    Bits nodes;
    Bits edges;

    bool operator<(const PathKey& o) const
    {
        if (weight != o.weight)
            return weight < o.weight;
        if (int c = compare(nodes, o.nodes))
            return c < 0;
        return compare(edges, o.edges) < 0;
    }
};

} // namespace

MergingTree compute_merging_tree(const DomainGraph& g, NodeId dst)
{
    const std::size_t n = g.nodes().size();
    const std::size_t root = g.index_of(dst);

    std::vector<std::optional<PathKey>> key(n);
    std::vector<bool> done(n, false);
    std::vector<std::optional<TreeHop>> hop(n);

    key[root] = PathKey{0, Bits(n), Bits(g.edges().size())};
    key[root]->nodes.set(root);

    MergingTree t;
    t.dst = dst;
    for (;;) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < n; ++i) {
            if (!done[i] && key[i] && (!best || *key[i] < *key[*best]))
                best = i;
        }
        if (!best)
            break;
        const std::size_t u = *best;
        done[u] = true;
        const NodeId un = g.nodes()[u];
        t.distance[un] = key[u]->weight;
        if (hop[u])
            t.parent[un] = *hop[u];

        for (EdgeId eid : g.incident(un)) {
            const Edge& e = g.edge(eid);
            if (!e.up || e.a == e.b)
                continue;
            const NodeId vn = e.other(un);
            const std::size_t v = g.index_of(vn);
            if (done[v])
                continue;
            PathKey cand = *key[u];
            cand.weight += e.weight;
            cand.nodes.set(v);
            cand.edges.set(eid);
            if (!key[v] || cand < *key[v]) {
                key[v] = std::move(cand);
                hop[v] = TreeHop{un, e.port_at(vn), eid};
            }
        }
    }
    return t;
}

std::vector<MergingTree> compute_all_merging_trees(const DomainGraph& g,
                                                   const std::vector<NodeId>& dsts)
{
    std::vector<MergingTree> out;
    out.reserve(dsts.size());
    for (NodeId d : dsts)
        out.push_back(compute_merging_tree(g, d));
    return out;
}

std::vector<MergingTree> compute_all_merging_trees_parallel(const DomainGraph& g,
                                                            const std::vector<NodeId>& dsts)
{
    std::vector<MergingTree> out(dsts.size());
    const long count = static_cast<long>(dsts.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = compute_merging_tree(g, dsts[static_cast<std::size_t>(i)]);
    return out;
}

Path reversed(const Path& p)
{
    Path r = p;
    std::reverse(r.nodes.begin(), r.nodes.end());
    std::reverse(r.edges.begin(), r.edges.end());
    return r;
}

namespace {

struct Arc {
    std::size_t from = 0;
    std::size_t to = 0;
    EdgeId edge = 0;
    std::int64_t cost = 0;
    int flow = 0;
};

// One augmentation of the successive-shortest-path min-cost flow. Residual
// arcs are either unused forward arcs or used arcs traversed backwards.
bool augment(std::vector<Arc>& arcs, std::size_t n, std::size_t s, std::size_t t)
{
    constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> dist(n, inf);
    std::vector<std::optional<std::pair<std::size_t, bool>>> via(n);
    dist[s] = 0;
    for (std::size_t round = 0; round < n; ++round) {
        bool changed = false;
        for (std::size_t i = 0; i < arcs.size(); ++i) {
            const Arc& a = arcs[i];
            if (a.flow == 0 && dist[a.from] != inf && dist[a.from] + a.cost < dist[a.to]) {
                dist[a.to] = dist[a.from] + a.cost;
                via[a.to] = std::pair{i, true};
                changed = true;
            }
            if (a.flow == 1 && dist[a.to] != inf && dist[a.to] - a.cost < dist[a.from]) {
                dist[a.from] = dist[a.to] - a.cost;
                via[a.from] = std::pair{i, false};
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    if (dist[t] == inf)
        return false;
    std::size_t at = t;
    std::size_t guard = 0;
    while (at != s) {
        const auto [i, forward] = *via[at];
        arcs[i].flow = forward ? 1 : 0;
        at = forward ? arcs[i].from : arcs[i].to;
        if (++guard > arcs.size())
            throw Error(ErrorCode::NoDisjointPair, "negative cycle in residual graph");
    }
    return true;
}

bool path_less(const Path& x, const Path& y)
{
    if (x.weight != y.weight)
        return x.weight < y.weight;
    return x.nodes < y.nodes;
}

} // namespace

std::pair<Path, Path> compute_disjoint_pair(const DomainGraph& g, NodeId a, NodeId b)
{
    if (a == b)
        throw Error(ErrorCode::NoDisjointPair, "endpoints coincide");
    const std::size_t n = g.nodes().size();
    const std::size_t s = g.index_of(a);
    const std::size_t t = g.index_of(b);

    std::vector<Arc> arcs;
    for (EdgeId id = 0; id < g.edges().size(); ++id) {
        const Edge& e = g.edge(id);
        if (!e.up || e.a == e.b)
            continue;
        const std::size_t u = g.index_of(e.a);
        const std::size_t v = g.index_of(e.b);
        arcs.push_back(Arc{u, v, id, e.weight, 0});
        arcs.push_back(Arc{v, u, id, e.weight, 0});
    }
    for (int k = 0; k < 2; ++k) {
        if (!augment(arcs, n, s, t))
            throw Error(ErrorCode::NoDisjointPair,
                        std::to_string(a) + "-" + std::to_string(b));
    }
    // Opposite flows on one edge cancel.
    for (std::size_t i = 0; i + 1 < arcs.size(); i += 2) {
        if (arcs[i].flow == 1 && arcs[i + 1].flow == 1)
            arcs[i].flow = arcs[i + 1].flow = 0;
    }

    auto walk = [&]() {
        Path p;
        std::size_t at = s;
        p.nodes.push_back(a);
        while (at != t) {
            std::optional<std::size_t> pick;
            for (std::size_t i = 0; i < arcs.size(); ++i) {
                const Arc& arc = arcs[i];
                if (arc.flow != 1 || arc.from != at)
                    continue;
                if (!pick || arc.to < arcs[*pick].to)
                    pick = i;
            }
            if (!pick)
                throw Error(ErrorCode::NoDisjointPair, "flow decomposition failed");
            Arc& arc = arcs[*pick];
            arc.flow = 0;
            p.edges.push_back(arc.edge);
            p.weight += g.edge(arc.edge).weight;
            at = arc.to;
            p.nodes.push_back(g.nodes()[at]);
        }
        return p;
    };
    Path first = walk();
    Path second = walk();
    if (path_less(second, first))
        std::swap(first, second);
    return {std::move(first), std::move(second)};
}

} // namespace splitarch
