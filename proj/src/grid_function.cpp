#include "drbsde/grid_function.hpp"

#include <stdexcept>

namespace drbsde {

GridFunction GridFunction::rectangular(std::size_t levels, std::size_t width, double init) {
    if (levels == 0 || width == 0) {
        throw std::invalid_argument("GridFunction: levels and width must be positive");
    }
    GridFunction g;
    g.offsets_.resize(levels + 1);
    for (std::size_t i = 0; i <= levels; ++i) g.offsets_[i] = i * width;
    g.values_.assign(levels * width, init);
    return g;
}

GridFunction GridFunction::triangular(std::size_t levels, double init) {
    if (levels == 0) {
        throw std::invalid_argument("GridFunction: levels must be positive");
    }
    GridFunction g;
    g.offsets_.resize(levels + 1);
    std::size_t off = 0;
    for (std::size_t i = 0; i < levels; ++i) {
        g.offsets_[i] = off;
        off += i + 1;
    }
    g.offsets_[levels] = off;
    g.values_.assign(off, init);
    return g;
}

}  // namespace drbsde
