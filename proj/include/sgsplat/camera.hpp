#pragma once

#include "sgsplat/common.hpp"

#include <string>

namespace sgsplat {

// Pinhole camera. JSON schema: {"w2c": 4x4 row-major, "fx", "fy", "cx", "cy",
// "width", "height", "near" (optional, default 0.01)}.
struct Camera {
    Mat3 rotation = Mat3::Identity();  // world-to-camera
    Vec3 translation = Vec3::Zero();
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
    int width = 1, height = 1;
    double near = 0.01;

    Vec3 to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }
    Vec3 center() const { return -rotation.transpose() * translation; }

    void validate() const;
};

Camera load_camera_json(const std::string& path);
void save_camera_json(const Camera& cam, const std::string& path);

// Camera on a ring of radius `distance` around `target`, looking at it.
// `angle` is the azimuth in radians; `elevation` tilts the ring.
Camera make_orbit_camera(const Vec3& target, double distance, double angle, double elevation,
                         int width, int height, double focal);

}  // namespace sgsplat
