#include "sgsplat/scene.hpp"

#include "sgsplat/ply.hpp"
#include "sgsplat/synth.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace sgsplat;

namespace {

std::string temp_path(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "sgsplat_scene_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("covariance of an axis-aligned gaussian is the squared scale diagonal") {
    Vec3 log_scale(std::log(1.0), std::log(2.0), std::log(3.0));
    Mat3 cov = covariance(Vec4(1, 0, 0, 0), log_scale);
    Mat3 expected = Vec3(1.0, 4.0, 9.0).asDiagonal();
    CHECK(cov.isApprox(expected, 1e-12));
}

TEST_CASE("a 90 degree z rotation swaps the x and y variances") {
    double s = std::sqrt(0.5);
    Vec4 q(s, 0, 0, s);  // 90 degrees about z
    Mat3 cov = covariance(q, Vec3(std::log(1.0), std::log(2.0), std::log(1.0)));
    Mat3 expected = Vec3(4.0, 1.0, 1.0).asDiagonal();
    CHECK(cov.isApprox(expected, 1e-9));
}

TEST_CASE("covariance equals an independently assembled R S S^T R^T") {
    std::mt19937_64 gen(41);
    for (int trial = 0; trial < 50; ++trial) {
        Vec4 q = random_unit_quaternion(gen);
        Vec3 ls = testing::small_vec(gen, 1.5);
        // Independent rotation route through Eigen's quaternion type.
        Eigen::Quaterniond eq(q[0], q[1], q[2], q[3]);
        Mat3 r = eq.toRotationMatrix();
        Mat3 s = Vec3(ls.array().exp()).asDiagonal();
        Mat3 expected = r * s * s.transpose() * r.transpose();
        CHECK(covariance(q, ls).isApprox(expected, 1e-9));

        // Symmetric and PSD: Cholesky succeeds after jitter.
        Mat3 cov = covariance(q, ls);
        CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
        Eigen::LLT<Mat3> llt(cov + 1e-9 * Mat3::Identity());
        CHECK(llt.info() == Eigen::Success);
    }
}

TEST_CASE("zero quaternion raises a degenerate-rotation error") {
    CHECK_THROWS_AS(covariance(Vec4::Zero(), Vec3::Zero()), NumericError);
}

TEST_CASE("gaussian density analytic values") {
    GaussianPrimitive g;
    g.position = Vec3(0.5, -1.0, 2.0);
    CHECK(gaussian_density(g, g.position) == doctest::Approx(1.0));

    GaussianPrimitive unit;  // identity covariance
    unit.log_scale = Vec3::Zero();
    CHECK(gaussian_density(unit, Vec3(1, 0, 0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

    GaussianPrimitive aniso;
    aniso.log_scale = Vec3(std::log(1.0), std::log(2.0), std::log(3.0));
    CHECK(gaussian_density(aniso, Vec3(1, 2, 3)) == doctest::Approx(std::exp(-1.5)).epsilon(1e-9));
}

TEST_CASE("scene flat parameter access covers every stored real") {
    Scene scene = make_synthetic_scene(3, 99);
    CHECK(scene.params_per_gaussian() == 11 + 48);
    CHECK(scene.total_params() == 3 * 59);
    for (std::size_t i = 0; i < scene.total_params(); ++i) {
        double v = scene.param(i);
        scene.set_param(i, v + 0.5);
        CHECK(scene.param(i) == doctest::Approx(v + 0.5));
        scene.set_param(i, v);
    }
    CHECK_THROWS_AS(scene.param(scene.total_params()), InvalidArgument);
}

TEST_CASE("homogeneity is enforced") {
    Scene scene;
    GaussianPrimitive a, b;
    a.color = SHOnlyModel{SHCoeffs::zeros(3)};
    b.color = DiffuseSGModel{};
    scene.gaussians = {a, b};
    CHECK_THROWS_AS(scene.check_homogeneous(), InvalidArgument);
    b.color = SHOnlyModel{SHCoeffs::zeros(2)};
    scene.gaussians = {a, b};
    CHECK_THROWS_AS(scene.check_homogeneous(), InvalidArgument);
    b.color = SHOnlyModel{SHCoeffs::zeros(3)};
    scene.gaussians = {a, b};
    CHECK_NOTHROW(scene.check_homogeneous());
}

TEST_CASE("reference checkpoint round-trips bit-exactly") {
    Scene scene = make_synthetic_scene(100, 4242);
    std::string path = temp_path("roundtrip_ref.ply");
    save_ply(scene, path, PlyLayout::Reference3DGS);
    Scene loaded = load_ply(path);
    REQUIRE(loaded.gaussians.size() == scene.gaussians.size());
    for (std::size_t i = 0; i < scene.total_params(); ++i)
        CHECK(loaded.param(i) == scene.param(i));

    // A second save must reproduce the file bytes exactly.
    std::string path2 = temp_path("roundtrip_ref2.ply");
    save_ply(loaded, path2, PlyLayout::Reference3DGS);
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("extended checkpoints round-trip for every SG variant") {
    for (auto kind : {ColorModelKind::DiffuseSG, ColorModelKind::DiffuseOrthoSG,
                      ColorModelKind::MixedSHSG}) {
        SynthOptions opts;
        opts.kind = kind;
        Scene scene = make_synthetic_scene(64, 1000 + static_cast<std::uint64_t>(kind), opts);
        scene.background = Vec3(0.125, 0.25, 0.5);
        std::string path = temp_path("roundtrip_ext.ply");
        save_ply(scene, path, PlyLayout::SGExtended);
        Scene loaded = load_ply(path);
        REQUIRE(loaded.gaussians.size() == scene.gaussians.size());
        CHECK(loaded.model_kind() == kind);
        CHECK(loaded.background.isApprox(scene.background, 0.0));
        CHECK(loaded.shared_axes.isApprox(scene.shared_axes, 0.0));
        for (std::size_t i = 0; i < scene.total_params(); ++i)
            CHECK(loaded.param(i) == scene.param(i));

        std::string path2 = temp_path("roundtrip_ext2.ply");
        save_ply(loaded, path2, PlyLayout::SGExtended);
        CHECK(read_file(path) == read_file(path2));
    }
}

TEST_CASE("per-gaussian stored float counts match the layout arithmetic") {
    CHECK(ply_floats_per_gaussian(PlyLayout::Reference3DGS, ColorModelKind::SHOnly) == 59);
    CHECK(ply_floats_per_gaussian(PlyLayout::SGExtended, ColorModelKind::DiffuseOrthoSG) == 29);
    CHECK(ply_floats_per_gaussian(PlyLayout::SGExtended, ColorModelKind::DiffuseSG) == 29);
    CHECK(ply_floats_per_gaussian(PlyLayout::SGExtended, ColorModelKind::MixedSHSG) == 53);

    // 59 floats = 236 bytes vs 29 floats = 116 bytes; ratio just under a half.
    CHECK(59 * 4 == 236);
    CHECK(29 * 4 == 116);
    CHECK(116.0 / 236.0 == doctest::Approx(0.4915).epsilon(1e-3));

    // Payload sizes on disk follow the same arithmetic.
    Scene ref = make_synthetic_scene(10, 5);
    std::string ref_path = temp_path("bytes_ref.ply");
    save_ply(ref, ref_path, PlyLayout::Reference3DGS);
    std::string header_end = "end_header\n";
    std::string content = read_file(ref_path);
    std::size_t payload = content.size() - (content.find(header_end) + header_end.size());
    CHECK(payload == 10 * 236);

    SynthOptions opts;
    opts.kind = ColorModelKind::DiffuseOrthoSG;
    Scene sg = make_synthetic_scene(10, 5, opts);
    std::string sg_path = temp_path("bytes_sg.ply");
    save_ply(sg, sg_path, PlyLayout::SGExtended);
    content = read_file(sg_path);
    payload = content.size() - (content.find(header_end) + header_end.size());
    CHECK(payload == 10 * 116);
}

TEST_CASE("reference file with zeroed f_rest loads as DC-only degree-3 SH") {
    Scene scene = make_synthetic_scene(5, 77);
    for (auto& g : scene.gaussians) {
        auto& m = std::get<SHOnlyModel>(g.color);
        for (int i = 1; i < 16; ++i) m.sh.coeffs[static_cast<std::size_t>(i)] = Vec3::Zero();
    }
    std::string path = temp_path("zero_rest.ply");
    save_ply(scene, path, PlyLayout::Reference3DGS);
    Scene loaded = load_ply(path);
    for (const auto& g : loaded.gaussians) {
        const auto& m = std::get<SHOnlyModel>(g.color);
        CHECK(m.sh.degree == 3);
        for (int i = 1; i < 16; ++i) CHECK(m.sh.coeffs[static_cast<std::size_t>(i)].isZero(0.0));
    }
}

TEST_CASE("unknown properties and truncated payloads are reported") {
    std::string path = temp_path("bad_field.ply");
    {
        std::ofstream out(path, std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n";
        out << "property float x\nproperty float y\nproperty float z\n";
        out << "property float f_rest_0\nproperty float mystery\nend_header\n";
        float row[5] = {0, 0, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
    CHECK_THROWS_WITH_AS(load_ply(path), doctest::Contains("mystery"), FormatError);

    std::string trunc = temp_path("truncated.ply");
    {
        Scene scene = make_synthetic_scene(4, 3);
        save_ply(scene, trunc, PlyLayout::Reference3DGS);
        auto content = read_file(trunc);
        std::ofstream out(trunc, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size() - 64));
    }
    CHECK_THROWS_AS(load_ply(trunc), IoError);

    CHECK_THROWS_AS(load_ply(temp_path("does_not_exist.ply")), IoError);
}

TEST_CASE("ascii PLY is accepted on read") {
    std::string path = temp_path("ascii.ply");
    {
        std::ofstream out(path);
        out << "ply\nformat ascii 1.0\nelement vertex 1\n";
        out << "property float x\nproperty float y\nproperty float z\n";
        for (int k = 0; k < 3; ++k) out << "property float f_dc_" << k << "\n";
        for (int k = 0; k < 45; ++k) out << "property float f_rest_" << k << "\n";
        out << "property float opacity\n";
        for (int k = 0; k < 3; ++k) out << "property float scale_" << k << "\n";
        for (int k = 0; k < 4; ++k) out << "property float rot_" << k << "\n";
        out << "end_header\n";
        out << "1 2 3";
        for (int k = 0; k < 48; ++k) out << " 0.25";
        out << " 0.5 -1 -1 -1 1 0 0 0\n";
    }
    Scene scene = load_ply(path);
    REQUIRE(scene.gaussians.size() == 1);
    CHECK(scene.gaussians[0].position.isApprox(Vec3(1, 2, 3), 0.0));
    CHECK(std::get<SHOnlyModel>(scene.gaussians[0].color).sh.coeffs[0][0] == doctest::Approx(0.25));
}

TEST_CASE("normals are tolerated on read and never written") {
    std::string path = temp_path("with_normals.ply");
    {
        std::ofstream out(path, std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n";
        out << "property float x\nproperty float y\nproperty float z\n";
        out << "property float nx\nproperty float ny\nproperty float nz\n";
        for (int k = 0; k < 3; ++k) out << "property float f_dc_" << k << "\n";
        for (int k = 0; k < 45; ++k) out << "property float f_rest_" << k << "\n";
        out << "property float opacity\n";
        for (int k = 0; k < 3; ++k) out << "property float scale_" << k << "\n";
        for (int k = 0; k < 4; ++k) out << "property float rot_" << k << "\n";
        out << "end_header\n";
        std::vector<float> row(62, 0.0f);
        row[0] = 7.0f;
        row[61] = 1.0f;
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    Scene scene = load_ply(path);
    REQUIRE(scene.gaussians.size() == 1);
    CHECK(scene.gaussians[0].position[0] == doctest::Approx(7.0));
}

TEST_CASE("sidecar metadata supplies axes and background") {
    Scene scene = make_synthetic_scene(3, 11);
    std::string path = temp_path("sidecar.ply");
    save_ply(scene, path, PlyLayout::Reference3DGS);
    {
        std::ofstream meta(path + ".meta");
        meta << "axes=0 1 0 -1 0 0 0 0 1\n";
        meta << "background=0.5 0.25 0.125\n";
    }
    Scene loaded = load_ply(path);
    Mat3 expected;
    expected << 0, 1, 0, -1, 0, 0, 0, 0, 1;
    CHECK(loaded.shared_axes.isApprox(expected, 0.0));
    CHECK(loaded.background.isApprox(Vec3(0.5, 0.25, 0.125), 0.0));
    std::remove((path + ".meta").c_str());
}

TEST_CASE("layout and model mismatches are rejected") {
    SynthOptions opts;
    opts.kind = ColorModelKind::DiffuseOrthoSG;
    Scene sg = make_synthetic_scene(3, 6, opts);
    CHECK_THROWS_AS(save_ply(sg, temp_path("bad.ply"), PlyLayout::Reference3DGS), InvalidArgument);
    Scene sh = make_synthetic_scene(3, 6);
    CHECK_THROWS_AS(save_ply(sh, temp_path("bad.ply"), PlyLayout::SGExtended), InvalidArgument);
}
