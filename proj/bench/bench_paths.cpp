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

#include <benchmark/benchmark.h>

#include "splitarch/graph.hpp"
#include "splitarch/rng.hpp"

using namespace splitarch;

namespace {

// Random spanning tree plus 2n chords, weights 1..9.
DomainGraph make_graph(std::size_t n)
{
    Rng rng(n);
    DomainGraph g;
    std::vector<PortId> next_port(n + 1, 1);
    for (NodeId v = 1; v <= n; ++v)
        g.add_node(v);
    auto link = [&](NodeId a, NodeId b) {
        g.add_edge(Edge{a, b, next_port[a]++, next_port[b]++, static_cast<std::uint32_t>(rng.uniform(1, 9)), true});
    };
    for (NodeId v = 2; v <= n; ++v)
        link(static_cast<NodeId>(rng.uniform(1, v - 1)), v);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const auto a = static_cast<NodeId>(rng.uniform(1, n));
        const auto b = static_cast<NodeId>(rng.uniform(1, n));
        if (a != b)
            link(a, b);
    }
    return g;
}

void BM_AllTreesSerial(benchmark::State& state)
{
    const DomainGraph g = make_graph(static_cast<std::size_t>(state.range(0)));
    const auto dsts = g.nodes();
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_all_merging_trees(g, dsts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dsts.size()));
}

void BM_AllTreesParallel(benchmark::State& state)
{
    const DomainGraph g = make_graph(static_cast<std::size_t>(state.range(0)));
    const auto dsts = g.nodes();
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_all_merging_trees_parallel(g, dsts));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dsts.size()));
}

void BM_DisjointPair(benchmark::State& state)
{
    const DomainGraph g = make_graph(static_cast<std::size_t>(state.range(0)));
    const auto n = static_cast<NodeId>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_disjoint_pair(g, 1, n));
}

} // namespace

BENCHMARK(BM_AllTreesSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AllTreesParallel)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DisjointPair)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
