#include "numsense/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "numsense/errors.hpp"

namespace numsense::geometry {

double DiscriminationVector::norm() const {
    const auto& c = components;
    return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
}

double project_onto_feature(const DiscriminationVector& v, stimspace::Feature f) {
    const stimspace::Vec3 axis = stimspace::feature_axis(f).direction;
    return v.components[0] * axis[0] + v.components[1] * axis[1] + v.components[2] * axis[2];
}

double angle_to_feature(const DiscriminationVector& v, stimspace::Feature f) {
    const double n = v.norm();
    if (!(n > 0.0)) throw DomainError("angle undefined for a zero discrimination vector");
    const double c = std::clamp(project_onto_feature(v, f) / n, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

std::vector<FeatureGeometry> analyze(const std::string& id, const DiscriminationVector& v,
                                     std::span<const stimspace::Feature> features) {
    std::vector<FeatureGeometry> rows;
    for (stimspace::Feature f : features) rows.push_back({id, f, project_onto_feature(v, f), angle_to_feature(v, f)});
    return rows;
}

void write_geometry_csv(const std::filesystem::path& path, std::span<const FeatureGeometry> rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "id,feature,projection,angle_deg\n" << std::setprecision(17);
    for (const FeatureGeometry& r : rows) {
        out << r.id << ',' << stimspace::feature_name(r.feature) << ',' << r.projection << ',' << r.angle_deg << '\n';
    }
}

}  // namespace numsense::geometry
