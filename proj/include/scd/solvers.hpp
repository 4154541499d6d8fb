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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace scd {

/// Row-major matrix of finite 64-bit costs.
class CostMatrix {
public:
    CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), costs_(rows * cols, fill) {}
    CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> costs);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return costs_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return costs_[r * cols_ + c]; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return costs_; }

    [[nodiscard]] CostMatrix transposed() const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> costs_;
};

struct Assignment {
    std::vector<std::size_t> column_of_row;
    /// Sum of c[i, column_of_row[i]] accumulated in row order.
    double total_cost = 0.0;
};

/// Minimum-cost injective row-to-column assignment for rows <= cols.
///
/// Shortest augmenting paths with dual potentials, one row at a time, so
/// rectangular inputs need no padding. O(rows^2 * cols). Equal-cost optima are
/// resolved by scan order, deterministically.
Assignment hungarian(const CostMatrix& costs);

struct FlowArc {
    std::size_t from = 0;
    std::size_t to = 0;
    std::int64_t capacity = 0;
    std::int64_t lower_bound = 0;
    double cost = 0.0;
};

/// Single-commodity network. Positive supply is a source, negative is a
/// demand; supplies sum to zero.
struct FlowNetwork {
    std::size_t num_nodes = 0;
    std::vector<FlowArc> arcs;
    std::vector<std::int64_t> supply;

    std::size_t add_node(std::int64_t node_supply = 0);
    std::size_t add_arc(std::size_t from, std::size_t to, std::int64_t capacity, double cost,
                        std::int64_t lower_bound = 0);

    /// Throws InvalidNetwork / NonFiniteCost when the invariants fail.
    void validate() const;
};

struct FlowSolution {
    std::vector<std::int64_t> flow;  // per arc, in FlowNetwork::arcs order
    double total_cost = 0.0;
};

/// Absolute tolerance used for floating-point cost comparisons.
inline constexpr double kCostTolerance = 1e-9;

/// Integral minimum cost flow by successive shortest paths with node
/// potentials. Lower bounds are removed by shifting supplies; negative-cost
/// arcs are pre-saturated so every residual reduced cost starts non-negative.
/// Throws Infeasible naming the saturated cut when supplies cannot be routed.
FlowSolution solve_mcf(const FlowNetwork& net);

/// The lower-bound-free network equivalent to `net`: every arc's lower bound
/// is moved into the endpoint supplies. Flows map back by adding the bounds.
struct ReducedNetwork {
    FlowNetwork network;
    double constant_cost = 0.0;
};
ReducedNetwork remove_lower_bounds(const FlowNetwork& net);

}  // namespace scd
