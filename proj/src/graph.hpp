#pragma once

// Internal helpers for strongly connected components on compressed-row graphs.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace vaoi::detail {

struct CsrGraph {
    std::size_t num_vertices = 0;
    std::vector<std::size_t> row_start{0};
    std::vector<std::uint32_t> target;

    auto out_edges(std::size_t v) const {
        struct Range {
            const std::uint32_t* b;
            const std::uint32_t* e;
            const std::uint32_t* begin() const { return b; }
            const std::uint32_t* end() const { return e; }
        };
        return Range{target.data() + row_start[v], target.data() + row_start[v + 1]};
    }
};

struct Components {
    std::vector<int> component;   // per vertex
    int count = 0;
    std::vector<bool> closed;     // per component: no edge leaves it
    std::vector<std::size_t> size;
};

/// Strongly connected components plus closedness of each component.
Components closed_components(const CsrGraph& g);

}  // namespace vaoi::detail
