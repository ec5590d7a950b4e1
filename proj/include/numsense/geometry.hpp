#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "numsense/stimspace.hpp"

namespace numsense::geometry {

/// (beta_num, beta_size, beta_spacing) in log-space axis order.
struct DiscriminationVector {
    stimspace::Vec3 components{0.0, 0.0, 0.0};

    double norm() const;
};

/// Dot product with the unit feature axis.
double project_onto_feature(const DiscriminationVector& v, stimspace::Feature f);

/// Angle in degrees, [0, 180]. Throws DomainError for a zero vector.
double angle_to_feature(const DiscriminationVector& v, stimspace::Feature f);

struct FeatureGeometry {
    std::string id;  // subject or network
    stimspace::Feature feature;
    double projection;
    double angle_deg;
};

std::vector<FeatureGeometry> analyze(const std::string& id, const DiscriminationVector& v,
                                     std::span<const stimspace::Feature> features = stimspace::kAllFeatures);

/// Columns: id,feature,projection,angle_deg
void write_geometry_csv(const std::filesystem::path& path, std::span<const FeatureGeometry> rows);

}  // namespace numsense::geometry
