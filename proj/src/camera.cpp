#include "sgsplat/camera.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace sgsplat {

void Camera::validate() const {
    if (fx <= 0 || fy <= 0) throw InvalidArgument("camera focal lengths must be positive");
    if (width < 1 || height < 1) throw InvalidArgument("camera image size must be >= 1");
}

Camera load_camera_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open camera file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("camera json parse error in " + path + ": " + e.what());
    }
    Camera cam;
    try {
        const auto& m = j.at("w2c");
        if (m.size() != 4) throw FormatError("w2c must be a 4x4 matrix");
        for (int r = 0; r < 4; ++r) {
            if (m[static_cast<std::size_t>(r)].size() != 4) throw FormatError("w2c must be a 4x4 matrix");
        }
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c)
                cam.rotation(r, c) = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
            cam.translation[r] = m[static_cast<std::size_t>(r)][3].get<double>();
        }
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        cam.near = j.value("near", 0.01);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("camera json missing/invalid field in " + path + ": " + e.what());
    }
    cam.validate();
    return cam;
}

void save_camera_json(const Camera& cam, const std::string& path) {
    nlohmann::json j;
    auto m = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) {
            double v = 0.0;
            if (r < 3 && c < 3) v = cam.rotation(r, c);
            else if (r < 3) v = cam.translation[r];
            else v = (c == 3) ? 1.0 : 0.0;
            row.push_back(v);
        }
        m.push_back(row);
    }
    j["w2c"] = m;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["near"] = cam.near;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write camera file: " + path);
    out << j.dump(2) << "\n";
}

Camera make_orbit_camera(const Vec3& target, double distance, double angle, double elevation,
                         int width, int height, double focal) {
    Vec3 eye = target + distance * Vec3(std::cos(angle) * std::cos(elevation),
                                        std::sin(angle) * std::cos(elevation),
                                        std::sin(elevation));
    Vec3 forward = (target - eye).normalized();
    Vec3 up_hint(0, 0, 1);
    if (std::abs(forward.dot(up_hint)) > 0.99) up_hint = Vec3(0, 1, 0);
    Vec3 right = forward.cross(up_hint).normalized();
    Vec3 down = forward.cross(right);  // +y points down in image space

    Camera cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    cam.fx = cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.validate();
    return cam;
}

}  // namespace sgsplat
