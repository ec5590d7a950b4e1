#pragma once

#include <optional>
#include <string>

namespace numsense {

enum class Side { Left, Right };

const char* side_name(Side s);
/// Accepts left/right, L/R, l/r and 0/1.
Side parse_side(const std::string& s);

inline Side opposite(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

/// One answered comparison. Ratios are right/left.
struct ChoiceRecord {
    int id = 0;
    double r_num = 1.0;
    double r_size = 1.0;
    double r_spacing = 1.0;
    Side choice = Side::Left;
    bool correct = false;
    std::optional<double> rt_ms;
};

/// The larger-numerosity side, or nullopt when r_num == 1.
std::optional<Side> larger_side(double r_num);

}  // namespace numsense
