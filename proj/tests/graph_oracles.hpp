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

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "splitarch/graph.hpp"
#include "splitarch/rng.hpp"

namespace splitarch::testing {

/// Random spanning tree plus extra edges; ports are numbered per node in
/// order of creation.
inline DomainGraph random_connected_graph(Rng& rng, std::size_t n, std::size_t extra,
                                          std::uint32_t max_weight)
{
    DomainGraph g;
    std::vector<PortId> next_port(n + 1, 1);
    for (NodeId v = 1; v <= n; ++v)
        g.add_node(v);
    auto link = [&](NodeId a, NodeId b) {
        const auto w = static_cast<std::uint32_t>(rng.uniform(1, max_weight));
        g.add_edge(Edge{a, b, next_port[a]++, next_port[b]++, w, true});
    };
    for (NodeId v = 2; v <= n; ++v)
        link(static_cast<NodeId>(rng.uniform(1, v - 1)), v);
    for (std::size_t i = 0; i < extra && n > 1; ++i) {
        const auto a = static_cast<NodeId>(rng.uniform(1, n));
        auto b = static_cast<NodeId>(rng.uniform(1, n - 1));
        if (b >= a)
            ++b;
        link(a, b);
    }
    return g;
}

/// A Hamiltonian ring over a random permutation plus chords: always
/// 2-edge-connected.
inline DomainGraph random_biconnected_graph(Rng& rng, std::size_t n, std::size_t chords,
                                            std::uint32_t max_weight)
{
    DomainGraph g;
    std::vector<PortId> next_port(n + 1, 1);
    std::vector<NodeId> order;
    for (NodeId v = 1; v <= n; ++v) {
        g.add_node(v);
        order.push_back(v);
    }
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform(0, i - 1)]);
    auto link = [&](NodeId a, NodeId b) {
        const auto w = static_cast<std::uint32_t>(rng.uniform(1, max_weight));
        g.add_edge(Edge{a, b, next_port[a]++, next_port[b]++, w, true});
    };
    for (std::size_t i = 0; i < n; ++i)
        link(order[i], order[(i + 1) % n]);
    for (std::size_t i = 0; i < chords; ++i) {
        const auto a = static_cast<NodeId>(rng.uniform(1, n));
        auto b = static_cast<NodeId>(rng.uniform(1, n - 1));
        if (b >= a)
            ++b;
        link(a, b);
    }
    return g;
}

/// Textbook O(V^2) Dijkstra on an adjacency matrix of minimum edge weights.
inline std::vector<std::optional<std::uint64_t>> oracle_distances(const DomainGraph& g, NodeId dst)
{
    const std::size_t n = g.nodes().size();
    constexpr std::uint64_t inf = std::numeric_limits<std::uint64_t>::max();
    std::vector<std::vector<std::uint64_t>> w(n, std::vector<std::uint64_t>(n, inf));
    for (const Edge& e : g.edges()) {
        if (!e.up)
            continue;
        const auto a = g.index_of(e.a);
        const auto b = g.index_of(e.b);
        w[a][b] = std::min<std::uint64_t>(w[a][b], e.weight);
        w[b][a] = w[a][b];
    }
    std::vector<std::uint64_t> dist(n, inf);
    std::vector<bool> done(n, false);
    dist[g.index_of(dst)] = 0;
    for (std::size_t round = 0; round < n; ++round) {
        std::size_t u = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!done[i] && dist[i] != inf && (u == n || dist[i] < dist[u]))
                u = i;
        }
        if (u == n)
            break;
        done[u] = true;
        for (std::size_t v = 0; v < n; ++v) {
            if (w[u][v] != inf && dist[u] + w[u][v] < dist[v])
                dist[v] = dist[u] + w[u][v];
        }
    }
    std::vector<std::optional<std::uint64_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] != inf)
            out[i] = dist[i];
    }
    return out;
}

struct SimplePath {
    std::vector<NodeId> nodes;
    std::uint64_t edge_mask = 0; // graphs under 64 edges
    std::uint64_t weight = 0;
};

/// Every simple a-b path over up edges, by depth-first enumeration.
inline std::vector<SimplePath> enumerate_paths(const DomainGraph& g, NodeId a, NodeId b)
{
    std::vector<SimplePath> out;
    SimplePath cur{{a}, 0, 0};
    auto dfs = [&](auto& self, NodeId at) -> void {
        if (at == b) {
            out.push_back(cur);
            return;
        }
        for (EdgeId id = 0; id < g.edges().size(); ++id) {
            const Edge& e = g.edge(id);
            if (!e.up || (e.a != at && e.b != at) || e.a == e.b)
                continue;
            const NodeId next = e.other(at);
            if (std::find(cur.nodes.begin(), cur.nodes.end(), next) != cur.nodes.end())
                continue;
            cur.nodes.push_back(next);
            cur.edge_mask |= std::uint64_t{1} << id;
            cur.weight += e.weight;
            self(self, next);
            cur.weight -= e.weight;
            cur.edge_mask &= ~(std::uint64_t{1} << id);
            cur.nodes.pop_back();
        }
    };
    dfs(dfs, a);
    return out;
}

/// Minimum total weight over edge-disjoint pairs of simple paths.
inline std::optional<std::uint64_t> oracle_disjoint_weight(const DomainGraph& g, NodeId a, NodeId b)
{
    const auto paths = enumerate_paths(g, a, b);
    std::optional<std::uint64_t> best;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (std::size_t j = i + 1; j < paths.size(); ++j) {
            if (paths[i].edge_mask & paths[j].edge_mask)
                continue;
            const auto w = paths[i].weight + paths[j].weight;
            if (!best || w < *best)
                best = w;
        }
    }
    return best;
}

} // namespace splitarch::testing
