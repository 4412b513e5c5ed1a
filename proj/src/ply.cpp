#include "sgsplat/ply.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace sgsplat {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> reference_fields() {
    std::vector<std::string> f = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int k = 0; k < 45; ++k) f.push_back("f_rest_" + std::to_string(k));
    f.push_back("opacity");
    for (int k = 0; k < 3; ++k) f.push_back("scale_" + std::to_string(k));
    for (int k = 0; k < 4; ++k) f.push_back("rot_" + std::to_string(k));
    return f;
}

std::vector<std::string> extended_fields(bool with_sh2) {
    std::vector<std::string> f = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c)
            f.push_back("sg_alpha_" + std::to_string(i) + "_" + std::to_string(c));
    for (int i = 0; i < 3; ++i) f.push_back("sg_lambda_" + std::to_string(i));
    for (int k = 0; k < 3; ++k) f.push_back("sg_mu_" + std::to_string(k));
    if (with_sh2)
        for (int k = 0; k < 24; ++k) f.push_back("sh2_" + std::to_string(k));
    f.push_back("opacity");
    for (int k = 0; k < 3; ++k) f.push_back("scale_" + std::to_string(k));
    for (int k = 0; k < 4; ++k) f.push_back("rot_" + std::to_string(k));
    return f;
}

struct PlyHeader {
    bool binary = false;
    std::size_t vertex_count = 0;
    std::vector<std::string> properties;
    std::map<std::string, std::string> comments;  // first token -> rest of line
};

PlyHeader parse_header(std::istream& in, const std::string& path) {
    PlyHeader h;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ply") throw FormatError("not a PLY file: " + path);
    bool saw_format = false, in_vertex = false, done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string kind, version;
            ls >> kind >> version;
            if (kind == "binary_little_endian") h.binary = true;
            else if (kind == "ascii") h.binary = false;
            else throw FormatError("unsupported PLY format '" + kind + "' (little-endian binary or ascii only)");
            saw_format = true;
        } else if (tok == "comment") {
            std::string key;
            ls >> key;
            std::string rest;
            std::getline(ls, rest);
            if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
            h.comments[key] = rest;
        } else if (tok == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (name != "vertex")
                throw FormatError("unsupported PLY element '" + name + "'");
            if (in_vertex) throw FormatError("duplicate vertex element");
            h.vertex_count = count;
            in_vertex = true;
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            if (!in_vertex) throw FormatError("property outside vertex element");
            if (type != "float" && type != "float32")
                throw FormatError("unsupported property type '" + type + "' for " + name);
            h.properties.push_back(name);
        } else if (tok == "end_header") {
            done = true;
            break;
        } else if (tok == "obj_info" || tok.empty()) {
            continue;
        } else {
            throw FormatError("unrecognized PLY header line: " + line);
        }
    }
    if (!done || !saw_format) throw FormatError("truncated PLY header: " + path);
    return h;
}

std::vector<float> read_payload(std::istream& in, const PlyHeader& h, const std::string& path) {
    std::size_t n = h.vertex_count * h.properties.size();
    std::vector<float> data(n);
    if (h.binary) {
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
            throw IoError("truncated PLY payload: " + path);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double v;
            if (!(in >> v)) throw IoError("truncated ASCII PLY payload: " + path);
            data[i] = static_cast<float>(v);
        }
    }
    return data;
}

bool parse_vec(const std::string& text, double* out, int count) {
    std::istringstream ss(text);
    for (int i = 0; i < count; ++i)
        if (!(ss >> out[i])) return false;
    return true;
}

void apply_sidecar(const std::string& path, Mat3* axes, Vec3* background) {
    std::ifstream meta(path + ".meta");
    if (!meta) return;
    std::string line;
    while (std::getline(meta, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "axes") {
            double v[9];
            if (parse_vec(value, v, 9)) {
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) (*axes)(r, c) = v[3 * r + c];
            }
        } else if (key == "background") {
            double v[3];
            if (parse_vec(value, v, 3)) *background = Vec3(v[0], v[1], v[2]);
        }
    }
}

struct ColumnMap {
    std::vector<int> column_of;  // canonical field index -> payload column
};

ColumnMap map_columns(const PlyHeader& h, const std::vector<std::string>& canonical,
                      const std::vector<std::string>& ignored) {
    std::map<std::string, int> position;
    for (std::size_t i = 0; i < h.properties.size(); ++i) {
        const std::string& name = h.properties[i];
        if (position.count(name)) throw FormatError("duplicate PLY property: " + name);
        position[name] = static_cast<int>(i);
    }
    for (const auto& name : h.properties) {
        bool known = std::find(canonical.begin(), canonical.end(), name) != canonical.end() ||
                     std::find(ignored.begin(), ignored.end(), name) != ignored.end();
        if (!known) throw FormatError("unknown PLY property: " + name);
    }
    ColumnMap cm;
    cm.column_of.reserve(canonical.size());
    for (const auto& name : canonical) {
        auto it = position.find(name);
        if (it == position.end()) throw FormatError("missing PLY property: " + name);
        cm.column_of.push_back(it->second);
    }
    return cm;
}

Scene load_reference(const PlyHeader& h, const std::vector<float>& data, const std::string& path) {
    auto canonical = reference_fields();
    ColumnMap cm = map_columns(h, canonical, {"nx", "ny", "nz"});
    std::size_t stride = h.properties.size();
    Scene scene;
    scene.gaussians.resize(h.vertex_count);
    for (std::size_t gi = 0; gi < h.vertex_count; ++gi) {
        const float* row = data.data() + gi * stride;
        auto field = [&](int k) { return static_cast<double>(row[cm.column_of[static_cast<std::size_t>(k)]]); };
        auto& g = scene.gaussians[gi];
        g.position = Vec3(field(0), field(1), field(2));
        SHOnlyModel model{SHCoeffs::zeros(3)};
        for (int c = 0; c < 3; ++c) model.sh.coeffs[0][c] = field(3 + c);
        for (int k = 0; k < 45; ++k) {
            int ch = k / 15, idx = 1 + k % 15;
            model.sh.coeffs[static_cast<std::size_t>(idx)][ch] = field(6 + k);
        }
        g.opacity_logit = field(51);
        g.log_scale = Vec3(field(52), field(53), field(54));
        g.rotation = Vec4(field(55), field(56), field(57), field(58));
        g.color = std::move(model);
    }
    apply_sidecar(path, &scene.shared_axes, &scene.background);
    return scene;
}

Scene load_extended(const PlyHeader& h, const std::vector<float>& data, const std::string& path) {
    auto model_it = h.comments.find("sg_model");
    if (model_it == h.comments.end())
        throw FormatError("SG-extended PLY is missing the 'comment sg_model' header line");
    std::string model_name = model_it->second;
    // Trim trailing whitespace from the comment payload.
    while (!model_name.empty() && (model_name.back() == ' ' || model_name.back() == '\t'))
        model_name.pop_back();
    ColorModelKind kind = color_model_kind_from_string(model_name);
    if (kind == ColorModelKind::SHOnly)
        throw FormatError("sg_model comment names a non-SG model");
    bool with_sh2 = kind == ColorModelKind::MixedSHSG;

    auto canonical = extended_fields(with_sh2);
    ColumnMap cm = map_columns(h, canonical, {});
    std::size_t stride = h.properties.size();

    Scene scene;
    if (auto it = h.comments.find("sg_axes"); it != h.comments.end()) {
        double v[9];
        if (!parse_vec(it->second, v, 9)) throw FormatError("bad sg_axes comment");
        Mat3 axes;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) axes(r, c) = v[3 * r + c];
        scene.set_shared_axes(axes);
    }
    if (auto it = h.comments.find("sg_background"); it != h.comments.end()) {
        double v[3];
        if (!parse_vec(it->second, v, 3)) throw FormatError("bad sg_background comment");
        scene.background = Vec3(v[0], v[1], v[2]);
    }

    const int kAlphaBase = 6, kLambdaBase = 15, kMuBase = 18;
    const int kSh2Base = 21;
    const int kTailBase = with_sh2 ? 45 : 21;

    scene.gaussians.resize(h.vertex_count);
    for (std::size_t gi = 0; gi < h.vertex_count; ++gi) {
        const float* row = data.data() + gi * stride;
        auto field = [&](int k) { return static_cast<double>(row[cm.column_of[static_cast<std::size_t>(k)]]); };
        auto& g = scene.gaussians[gi];
        g.position = Vec3(field(0), field(1), field(2));
        Vec3 dc(field(3), field(4), field(5));
        if (kind == ColorModelKind::DiffuseSG) {
            DiffuseSGModel m;
            m.diffuse = dc;
            for (int c = 0; c < 3; ++c) m.alpha[c] = field(kAlphaBase + c);
            m.log_lambda = field(kLambdaBase);
            m.mu = Vec3(field(kMuBase), field(kMuBase + 1), field(kMuBase + 2));
            g.color = std::move(m);
        } else if (kind == ColorModelKind::DiffuseOrthoSG) {
            DiffuseOrthoSGModel m;
            m.diffuse = dc;
            for (int i = 0; i < 3; ++i) {
                for (int c = 0; c < 3; ++c) m.alpha[static_cast<std::size_t>(i)][c] = field(kAlphaBase + 3 * i + c);
                m.log_lambda[static_cast<std::size_t>(i)] = field(kLambdaBase + i);
            }
            g.color = std::move(m);
        } else {
            MixedSHSGModel m;
            m.sh = SHCoeffs::zeros(2);
            m.sh.coeffs[0] = dc;
            for (int k = 0; k < 24; ++k) {
                int ch = k / 8, idx = 1 + k % 8;
                m.sh.coeffs[static_cast<std::size_t>(idx)][ch] = field(kSh2Base + k);
            }
            for (int i = 0; i < 3; ++i) {
                for (int c = 0; c < 3; ++c) m.alpha[static_cast<std::size_t>(i)][c] = field(kAlphaBase + 3 * i + c);
                m.log_lambda[static_cast<std::size_t>(i)] = field(kLambdaBase + i);
            }
            g.color = std::move(m);
        }
        g.opacity_logit = field(kTailBase);
        g.log_scale = Vec3(field(kTailBase + 1), field(kTailBase + 2), field(kTailBase + 3));
        g.rotation = Vec4(field(kTailBase + 4), field(kTailBase + 5), field(kTailBase + 6),
                          field(kTailBase + 7));
    }
    apply_sidecar(path, &scene.shared_axes, &scene.background);
    return scene;
}

}  // namespace

int ply_floats_per_gaussian(PlyLayout layout, ColorModelKind kind) {
    if (layout == PlyLayout::Reference3DGS) return 59;
    return kind == ColorModelKind::MixedSHSG ? 53 : 29;
}

Scene load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    PlyHeader h = parse_header(in, path);
    std::vector<float> data = read_payload(in, h, path);
    bool has_rest = std::find(h.properties.begin(), h.properties.end(), "f_rest_0") != h.properties.end();
    bool has_sg = std::find(h.properties.begin(), h.properties.end(), "sg_alpha_0_0") != h.properties.end();
    if (has_rest && !has_sg) return load_reference(h, data, path);
    if (has_sg && !has_rest) return load_extended(h, data, path);
    throw FormatError("cannot detect checkpoint layout of " + path +
                      " (expected f_rest_* or sg_alpha_* properties)");
}

void save_ply(const Scene& scene, const std::string& path, PlyLayout layout) {
    scene.check_homogeneous();
    ColorModelKind kind =
        scene.gaussians.empty() ? ColorModelKind::SHOnly : kind_of(scene.gaussians.front().color);
    if (layout == PlyLayout::Reference3DGS && kind != ColorModelKind::SHOnly)
        throw InvalidArgument("Reference3DGS layout requires an SH-only scene");
    if (layout == PlyLayout::SGExtended && kind == ColorModelKind::SHOnly)
        throw InvalidArgument("SGExtended layout requires an SG-backed scene");

    bool with_sh2 = layout == PlyLayout::SGExtended && kind == ColorModelKind::MixedSHSG;
    auto fields = layout == PlyLayout::Reference3DGS ? reference_fields() : extended_fields(with_sh2);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "ply\nformat binary_little_endian 1.0\n";
    if (layout == PlyLayout::SGExtended) {
        out << "comment sg_model " << to_string(kind) << "\n";
        if (kind != ColorModelKind::DiffuseSG) {
            out << "comment sg_axes";
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) out << " " << fmt_double(scene.shared_axes(r, c));
            out << "\n";
        }
        out << "comment sg_background " << fmt_double(scene.background[0]) << " "
            << fmt_double(scene.background[1]) << " " << fmt_double(scene.background[2]) << "\n";
    }
    out << "element vertex " << scene.gaussians.size() << "\n";
    for (const auto& f : fields) out << "property float " << f << "\n";
    out << "end_header\n";

    std::vector<float> row(fields.size());
    for (const auto& g : scene.gaussians) {
        std::size_t k = 0;
        auto put = [&](double v) { row[k++] = static_cast<float>(v); };
        put(g.position[0]);
        put(g.position[1]);
        put(g.position[2]);
        if (layout == PlyLayout::Reference3DGS) {
            const auto& m = std::get<SHOnlyModel>(g.color);
            int stored = sh::coeff_count(m.sh.degree);
            for (int c = 0; c < 3; ++c) put(m.sh.coeffs[0][c]);
            for (int idx = 0; idx < 45; ++idx) {
                int ch = idx / 15, i = 1 + idx % 15;
                put(i < stored ? m.sh.coeffs[static_cast<std::size_t>(i)][ch] : 0.0);
            }
        } else if (kind == ColorModelKind::DiffuseSG) {
            const auto& m = std::get<DiffuseSGModel>(g.color);
            for (int c = 0; c < 3; ++c) put(m.diffuse[c]);
            for (int c = 0; c < 3; ++c) put(m.alpha[c]);
            for (int c = 0; c < 3; ++c) put(0.0);
            for (int c = 0; c < 3; ++c) put(0.0);
            put(m.log_lambda);
            put(0.0);
            put(0.0);
            for (int c = 0; c < 3; ++c) put(m.mu[c]);
        } else if (kind == ColorModelKind::DiffuseOrthoSG) {
            const auto& m = std::get<DiffuseOrthoSGModel>(g.color);
            for (int c = 0; c < 3; ++c) put(m.diffuse[c]);
            for (int i = 0; i < 3; ++i)
                for (int c = 0; c < 3; ++c) put(m.alpha[static_cast<std::size_t>(i)][c]);
            for (int i = 0; i < 3; ++i) put(m.log_lambda[static_cast<std::size_t>(i)]);
            for (int c = 0; c < 3; ++c) put(0.0);
        } else {
            const auto& m = std::get<MixedSHSGModel>(g.color);
            for (int c = 0; c < 3; ++c) put(m.sh.coeffs[0][c]);
            for (int i = 0; i < 3; ++i)
                for (int c = 0; c < 3; ++c) put(m.alpha[static_cast<std::size_t>(i)][c]);
            for (int i = 0; i < 3; ++i) put(m.log_lambda[static_cast<std::size_t>(i)]);
            for (int c = 0; c < 3; ++c) put(0.0);
            for (int k2 = 0; k2 < 24; ++k2) {
                int ch = k2 / 8, idx = 1 + k2 % 8;
                put(m.sh.coeffs[static_cast<std::size_t>(idx)][ch]);
            }
        }
        put(g.opacity_logit);
        for (int c = 0; c < 3; ++c) put(g.log_scale[c]);
        for (int c = 0; c < 4; ++c) put(g.rotation[c]);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

PlyLayout detect_layout(const Scene& scene) {
    if (scene.gaussians.empty()) return PlyLayout::Reference3DGS;
    return kind_of(scene.gaussians.front().color) == ColorModelKind::SHOnly
               ? PlyLayout::Reference3DGS
               : PlyLayout::SGExtended;
}

}  // namespace sgsplat
