#include "numsense/choice.hpp"

#include "numsense/errors.hpp"

namespace numsense {

const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

Side parse_side(const std::string& s) {
    if (s == "left" || s == "L" || s == "l" || s == "0") return Side::Left;
    if (s == "right" || s == "R" || s == "r" || s == "1") return Side::Right;
    throw SchemaError("side must be 'left' or 'right', got '" + s + "'");
}

std::optional<Side> larger_side(double r_num) {
    if (r_num > 1.0) return Side::Right;
    if (r_num < 1.0) return Side::Left;
    return std::nullopt;
}

}  // namespace numsense
