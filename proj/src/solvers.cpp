// Copyright 2026-present the scd project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scd/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "scd/error.hpp"

namespace scd {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> costs)
    : rows_(rows), cols_(cols), costs_(std::move(costs)) {
    if (costs_.size() != rows_ * cols_) {
        throw Error(ErrorCode::InvalidArgument, "cost matrix data does not match its shape");
    }
}

CostMatrix CostMatrix::transposed() const {
    CostMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

Assignment hungarian(const CostMatrix& costs) {
    const std::size_t n = costs.rows();
    const std::size_t m = costs.cols();
    if (n > m) {
        throw Error(ErrorCode::InvalidArgument, "assignment needs rows <= cols (got " +
                                                    std::to_string(n) + "x" + std::to_string(m) +
                                                    "); transpose first");
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            if (!std::isfinite(costs(r, c))) {
                throw Error(ErrorCode::NonFiniteCost,
                            "cell (" + std::to_string(r) + ", " + std::to_string(c) + ")");
            }
        }
    }
    Assignment result;
    if (n == 0) {
        return result;
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based: column 0 is the virtual column holding the row being inserted.
    std::vector<double> row_pot(n + 1, 0.0);
    std::vector<double> col_pot(m + 1, 0.0);
    std::vector<std::size_t> row_of_col(m + 1, 0);
    std::vector<std::size_t> way(m + 1, 0);
    std::vector<double> min_slack(m + 1);
    std::vector<char> used(m + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        std::size_t col = 0;
        std::fill(min_slack.begin(), min_slack.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[col] = 1;
            const std::size_t row = row_of_col[col];
            double delta = kInf;
            std::size_t next_col = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double slack = costs(row - 1, j - 1) - row_pot[row] - col_pot[j];
                if (slack < min_slack[j]) {
                    min_slack[j] = slack;
                    way[j] = col;
                }
                if (min_slack[j] < delta) {
                    delta = min_slack[j];
                    next_col = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    row_pot[row_of_col[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col = next_col;
        } while (row_of_col[col] != 0);
        do {
            const std::size_t prev = way[col];
            row_of_col[col] = row_of_col[prev];
            col = prev;
        } while (col != 0);
    }

    result.column_of_row.assign(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (row_of_col[j] != 0) {
            result.column_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        result.total_cost += costs(r, result.column_of_row[r]);
    }
    return result;
}

std::size_t FlowNetwork::add_node(std::int64_t node_supply) {
    supply.push_back(node_supply);
    return num_nodes++;
}

std::size_t FlowNetwork::add_arc(std::size_t from, std::size_t to, std::int64_t capacity,
                                 double cost, std::int64_t lower_bound) {
    arcs.push_back(FlowArc{from, to, capacity, lower_bound, cost});
    return arcs.size() - 1;
}

void FlowNetwork::validate() const {
    if (supply.size() != num_nodes) {
        throw Error(ErrorCode::InvalidNetwork, "supply vector length differs from node count");
    }
    std::int64_t total = 0;
    for (auto s : supply) {
        total += s;
    }
    if (total != 0) {
        throw Error(ErrorCode::InvalidNetwork, "supplies sum to " + std::to_string(total));
    }
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        const auto& arc = arcs[a];
        if (arc.from >= num_nodes || arc.to >= num_nodes) {
            throw Error(ErrorCode::InvalidNetwork, "arc " + std::to_string(a) + " has an endpoint outside the network");
        }
        if (arc.lower_bound < 0 || arc.capacity < arc.lower_bound) {
            throw Error(ErrorCode::InvalidNetwork,
                        "arc " + std::to_string(a) + " needs 0 <= lower_bound <= capacity");
        }
        if (!std::isfinite(arc.cost)) {
            throw Error(ErrorCode::NonFiniteCost, "arc " + std::to_string(a));
        }
    }
}

ReducedNetwork remove_lower_bounds(const FlowNetwork& net) {
    ReducedNetwork out{net, 0.0};
    for (auto& arc : out.network.arcs) {
        if (arc.lower_bound == 0) {
            continue;
        }
        out.network.supply[arc.from] -= arc.lower_bound;
        out.network.supply[arc.to] += arc.lower_bound;
        out.constant_cost += static_cast<double>(arc.lower_bound) * arc.cost;
        arc.capacity -= arc.lower_bound;
        arc.lower_bound = 0;
    }
    return out;
}

namespace {

struct ResidualEdge {
    std::size_t to;
    std::size_t rev;
    std::int64_t cap;
    double cost;
};

class Residual {
public:
    explicit Residual(std::size_t nodes) : adj_(nodes) {}

    // Returns (node, position) of the forward edge.
    std::pair<std::size_t, std::size_t> add(std::size_t from, std::size_t to, std::int64_t cap,
                                            double cost) {
        const std::size_t fwd = adj_[from].size();
        const std::size_t bwd = adj_[to].size() + (from == to ? 1 : 0);
        adj_[from].push_back({to, bwd, cap, cost});
        adj_[to].push_back({from, fwd, 0, -cost});
        return {from, fwd};
    }

    void push(std::size_t node, std::size_t pos, std::int64_t amount) {
        auto& e = adj_[node][pos];
        e.cap -= amount;
        adj_[e.to][e.rev].cap += amount;
    }

    std::vector<std::vector<ResidualEdge>>& adj() { return adj_; }
    [[nodiscard]] std::size_t size() const { return adj_.size(); }

private:
    std::vector<std::vector<ResidualEdge>> adj_;
};

std::string describe_cut(const std::vector<char>& reachable, std::size_t real_nodes,
                         std::int64_t unrouted) {
    std::string nodes;
    std::size_t listed = 0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < real_nodes; ++v) {
        if (!reachable[v]) {
            continue;
        }
        ++count;
        if (listed < 16) {
            nodes += (listed ? "," : "") + std::to_string(v);
            ++listed;
        }
    }
    if (count > listed) {
        nodes += ",...";
    }
    return std::to_string(unrouted) + " units of supply cannot reach any demand; every arc leaving {" +
           nodes + "} (" + std::to_string(count) + " nodes) is saturated";
}

}  // namespace

FlowSolution solve_mcf(const FlowNetwork& net) {
    net.validate();
    const ReducedNetwork reduced = remove_lower_bounds(net);
    const FlowNetwork& g = reduced.network;
    const std::size_t n = g.num_nodes;
    const std::size_t source = n;
    const std::size_t sink = n + 1;

    Residual res(n + 2);
    std::vector<std::int64_t> excess = g.supply;
    std::vector<std::pair<std::size_t, std::size_t>> handle(g.arcs.size());
    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        const auto& arc = g.arcs[a];
        handle[a] = res.add(arc.from, arc.to, arc.capacity, arc.cost);
        if (arc.cost < 0.0 && arc.capacity > 0) {
            // Saturate up front; the residual reverse edge then has positive cost.
            res.push(handle[a].first, handle[a].second, arc.capacity);
            excess[arc.from] -= arc.capacity;
            excess[arc.to] += arc.capacity;
        }
    }
    std::int64_t required = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (excess[v] > 0) {
            res.add(source, v, excess[v], 0.0);
            required += excess[v];
        } else if (excess[v] < 0) {
            res.add(v, sink, -excess[v], 0.0);
        }
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    auto& adj = res.adj();
    std::vector<double> potential(res.size(), 0.0);
    std::vector<double> dist(res.size());
    std::vector<std::size_t> prev_node(res.size());
    std::vector<std::size_t> prev_edge(res.size());
    std::vector<char> done(res.size());
    using Item = std::pair<double, std::size_t>;

    std::int64_t routed = 0;
    while (routed < required) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(done.begin(), done.end(), 0);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
        dist[source] = 0.0;
        queue.emplace(0.0, source);
        while (!queue.empty()) {
            const auto [d, u] = queue.top();
            queue.pop();
            if (done[u]) {
                continue;
            }
            done[u] = 1;
            for (std::size_t k = 0; k < adj[u].size(); ++k) {
                const auto& e = adj[u][k];
                if (e.cap <= 0 || done[e.to]) {
                    continue;
                }
                // Potentials keep reduced costs non-negative up to rounding.
                const double reduced_cost = std::max(0.0, e.cost + potential[u] - potential[e.to]);
                const double nd = d + reduced_cost;
                if (dist[e.to] == kInf || nd < dist[e.to] - kCostTolerance) {
                    dist[e.to] = nd;
                    prev_node[e.to] = u;
                    prev_edge[e.to] = k;
                    queue.emplace(nd, e.to);
                }
            }
        }
        if (!done[sink]) {
            throw Error(ErrorCode::Infeasible, describe_cut(done, n, required - routed));
        }
        for (std::size_t v = 0; v < res.size(); ++v) {
            if (done[v]) {
                potential[v] += dist[v];
            }
        }
        std::int64_t bottleneck = required - routed;
        for (std::size_t v = sink; v != source; v = prev_node[v]) {
            bottleneck = std::min(bottleneck, adj[prev_node[v]][prev_edge[v]].cap);
        }
        for (std::size_t v = sink; v != source; v = prev_node[v]) {
            res.push(prev_node[v], prev_edge[v], bottleneck);
        }
        routed += bottleneck;
    }

    FlowSolution sol;
    sol.flow.resize(net.arcs.size());
    for (std::size_t a = 0; a < net.arcs.size(); ++a) {
        const auto [node, pos] = handle[a];
        const std::int64_t residual_cap = adj[node][pos].cap;
        sol.flow[a] = net.arcs[a].lower_bound + (g.arcs[a].capacity - residual_cap);
        sol.total_cost += net.arcs[a].cost * static_cast<double>(sol.flow[a]);
    }
    return sol;
}

}  // namespace scd
