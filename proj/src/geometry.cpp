#include "dbf/geometry.hpp"

namespace dbf {

double euclidean_range(Position2D a, Position2D b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace dbf
