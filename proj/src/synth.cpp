#include "flowdepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "flowdepth/random.hpp"

namespace flowdepth {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Texture {
    TextureKind kind = TextureKind::noise;
    struct Wave {
        double kx, ky, kz, phase, amplitude;
    };
    std::vector<Wave> waves;
    double cell = 0.25;
    double offset_x = 0.0, offset_y = 0.0;

    double eval(const Eigen::Vector3d& p) const {
        if (kind == TextureKind::checker) {
            const long long ix = static_cast<long long>(std::floor((p.x() - offset_x) / cell));
            const long long iy = static_cast<long long>(std::floor((p.y() - offset_y) / cell));
            return ((ix + iy) & 1) ? 0.85 : 0.15;
        }
        double v = 0.5;
        for (const Wave& w : waves)
            v += w.amplitude * std::sin(w.kx * p.x() + w.ky * p.y() + w.kz * p.z() + w.phase);
        return std::clamp(v, 0.0, 1.0);
    }
};

Texture make_texture(Rng& rng, TextureKind kind, double scale) {
    Texture tex;
    tex.kind = kind;
    if (kind == TextureKind::checker) {
        tex.cell = 0.25 / scale;
        tex.offset_x = rng.uniform(0.0, tex.cell);
        tex.offset_y = rng.uniform(0.0, tex.cell);
        return tex;
    }
    // Band-limited noise: a handful of random sinusoids with bounded total
    // amplitude so intensities stay inside [0, 1].
    const int count = 8;
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        Texture::Wave w;
        const double magnitude = rng.uniform(2.0, 9.0) * scale;
        const Eigen::Vector3d dir = rng.unit_vector();
        w.kx = magnitude * dir.x();
        w.ky = magnitude * dir.y();
        w.kz = magnitude * dir.z();
        w.phase = rng.uniform(0.0, 2.0 * kPi);
        w.amplitude = rng.uniform(0.3, 1.0);
        total += w.amplitude;
        tex.waves.push_back(w);
    }
    for (Texture::Wave& w : tex.waves)
        w.amplitude *= 0.42 / total;
    return tex;
}

struct Surface {
    int id = 0; // 0 = background, i = object i
    Eigen::Vector3d normal_t{0, 0, 1};
    double offset_t = 0.0; // plane n . X = c in frame-t coords
    Eigen::Vector3d normal_t1{0, 0, 1};
    double offset_t1 = 0.0;
    PoseSE3 world;     // frame-t point -> frame-t+1 point
    PoseSE3 world_inv; // frame-t+1 point -> frame-t point
    const ObjectSpec* object = nullptr;
    Texture texture;

    // Footprint containment of a point given in the surface's frame-t coords.
    bool contains(const Eigen::Vector3d& local, const Intrinsics& K) const {
        if (!object)
            return true;
        if (!(local.z() > 0.0))
            return false;
        const double u = K.fx * local.x() / local.z() + K.cx;
        const double v = K.fy * local.y() / local.z() + K.cy;
        if (object->shape == ObjectSpec::Shape::rectangle)
            return u >= object->p0 && u < object->p2 && v >= object->p1 && v < object->p3;
        const double eu = (u - object->p0) / object->p2;
        const double ev = (v - object->p1) / object->p3;
        return eu * eu + ev * ev <= 1.0;
    }
};

struct Hit {
    const Surface* surface = nullptr;
    double depth = 0.0;
    Eigen::Vector3d local{0, 0, 0}; // point in the surface's frame-t coords
};

// Nearest surface hit along the ray through normalized coordinates (rx, ry, 1).
Hit intersect(const std::vector<Surface>& surfaces, const Eigen::Vector3d& ray,
              const Intrinsics& K, bool frame_t1) {
    Hit best;
    for (const Surface& s : surfaces) {
        const Eigen::Vector3d& n = frame_t1 ? s.normal_t1 : s.normal_t;
        const double c = frame_t1 ? s.offset_t1 : s.offset_t;
        const double denom = n.dot(ray);
        if (std::abs(denom) < 1e-12)
            continue;
        const double depth = c / denom;
        if (!(depth > 0.0))
            continue;
        if (best.surface && depth >= best.depth)
            continue;
        const Eigen::Vector3d point = ray * depth;
        const Eigen::Vector3d local = frame_t1 ? s.world_inv.apply(point) : point;
        if (!s.contains(local, K))
            continue;
        best.surface = &s;
        best.depth = depth;
        best.local = local;
    }
    return best;
}

// Transform of the plane n . X = c under Y = R X + t.
void transform_plane(const PoseSE3& pose, const Eigen::Vector3d& n, double c,
                     Eigen::Vector3d& n_out, double& c_out) {
    n_out = pose.rotation * n;
    c_out = c + n_out.dot(pose.translation);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_vector(const Eigen::Vector3d& v) {
    return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

void append_pose(std::string& out, const std::string& prefix, const PoseSE3& pose) {
    const Eigen::AngleAxisd aa(pose.rotation);
    Eigen::Vector3d axis = aa.axis();
    if (aa.angle() == 0.0)
        axis = Eigen::Vector3d(1.0, 0.0, 0.0);
    out += prefix + "_rot_axis: " + format_vector(axis) + "\n";
    out += prefix + "_rot_deg: " + format_double(aa.angle() * 180.0 / kPi) + "\n";
    out += prefix + "_trans: " + format_vector(pose.translation) + "\n";
}

} // namespace

void SceneSpec::validate() const {
    intrinsics.validate();
    if (!(texture_scale > 0.0))
        throw DomainError("SceneSpec: texture scale must be positive");
    if (!(background_depth > 0.1) || !(background_depth < 200.0))
        throw DomainError("SceneSpec: background depth must lie in (0.1, 200) m");
    if (!(background_normal.norm() > 0.0) || !(background_normal.z() > 0.0))
        throw DomainError("SceneSpec: background normal must have positive z");
    for (const ObjectSpec& obj : objects) {
        if (!(obj.depth > 0.1) || !(obj.depth < 200.0))
            throw DomainError("SceneSpec: object depth must lie in (0.1, 200) m");
        if (obj.shape == ObjectSpec::Shape::rectangle) {
            if (!(obj.p0 >= 0.0 && obj.p0 < obj.p2 && obj.p2 <= intrinsics.width) ||
                !(obj.p1 >= 0.0 && obj.p1 < obj.p3 && obj.p3 <= intrinsics.height))
                throw DomainError("SceneSpec: rectangle footprint must lie inside the image");
        } else {
            if (!(obj.p2 > 0.0) || !(obj.p3 > 0.0) || obj.p0 - obj.p2 < 0.0 ||
                obj.p0 + obj.p2 > intrinsics.width || obj.p1 - obj.p3 < 0.0 ||
                obj.p1 + obj.p3 > intrinsics.height)
                throw DomainError("SceneSpec: ellipse footprint must lie inside the image");
        }
    }
}

SceneBundle generate(const SceneSpec& spec) {
    spec.validate();
    const Intrinsics& K = spec.intrinsics;
    const int W = K.width;
    const int H = K.height;

    Rng rng(spec.seed);
    std::vector<Surface> surfaces;
    {
        Surface bg;
        bg.id = 0;
        bg.normal_t = spec.background_normal.normalized();
        bg.offset_t = bg.normal_t.dot(Eigen::Vector3d(0.0, 0.0, spec.background_depth));
        bg.world = spec.ego;
        bg.world_inv = spec.ego.inverse();
        transform_plane(bg.world, bg.normal_t, bg.offset_t, bg.normal_t1, bg.offset_t1);
        bg.texture = make_texture(rng, spec.texture, spec.texture_scale);
        surfaces.push_back(bg);
    }
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        Surface s;
        s.id = static_cast<int>(i) + 1;
        s.object = &spec.objects[i];
        s.normal_t = Eigen::Vector3d(0.0, 0.0, 1.0);
        s.offset_t = spec.objects[i].depth;
        s.world = spec.ego * spec.objects[i].motion;
        s.world_inv = s.world.inverse();
        transform_plane(s.world, s.normal_t, s.offset_t, s.normal_t1, s.offset_t1);
        s.texture = make_texture(rng, spec.texture, spec.texture_scale);
        surfaces.push_back(s);
    }

    SceneBundle bundle;
    bundle.image_t = ImageBuffer(H, W, 1, 0.0, false);
    bundle.image_t1 = ImageBuffer(H, W, 1, 0.0, false);
    bundle.depth_t = DepthMap(H, W);
    bundle.depth_t1 = DepthMap(H, W);
    bundle.flow_gt = FlowField(H, W, 0.0, 0.0, false);
    bundle.occluded_t = BinaryMask(H, W);
    bundle.occluded_t1 = BinaryMask(H, W);
    bundle.ego = spec.ego;
    for (const ObjectSpec& obj : spec.objects)
        bundle.object_motions.push_back(obj.motion);

    std::vector<std::int32_t> raw_labels(static_cast<std::size_t>(H) * W, 0);

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const Eigen::Vector3d ray((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
            const std::size_t i = static_cast<std::size_t>(y) * W + x;

            // Frame t.
            const Hit hit_t = intersect(surfaces, ray, K, false);
            if (hit_t.surface) {
                bundle.image_t.data[i] = hit_t.surface->texture.eval(hit_t.local);
                bundle.image_t.valid[i] = 1;
                bundle.depth_t.depth[i] = hit_t.depth;
                bundle.depth_t.valid[i] = 1;
                raw_labels[i] = hit_t.surface->id;

                const Eigen::Vector3d target = hit_t.surface->world.apply(hit_t.local);
                if (target.z() > 0.0) {
                    // A static surface keeps its pixel exactly.
                    const bool still = hit_t.surface->world.is_identity();
                    const double tu = still ? x : K.fx * target.x() / target.z() + K.cx;
                    const double tv = still ? y : K.fy * target.y() / target.z() + K.cy;
                    bundle.flow_gt.du[i] = tu - x;
                    bundle.flow_gt.dv[i] = tv - y;
                    bundle.flow_gt.valid[i] = 1;

                    const Eigen::Vector3d target_ray((tu - K.cx) / K.fx, (tv - K.cy) / K.fy, 1.0);
                    const Hit blocker = intersect(surfaces, target_ray, K, true);
                    if (blocker.surface &&
                        blocker.depth < target.z() - 1e-9 * (1.0 + target.z()))
                        bundle.occluded_t.set(y, x, true);
                }
            }

            // Frame t+1.
            const Hit hit_t1 = intersect(surfaces, ray, K, true);
            if (hit_t1.surface) {
                bundle.image_t1.data[i] = hit_t1.surface->texture.eval(hit_t1.local);
                bundle.image_t1.valid[i] = 1;
                bundle.depth_t1.depth[i] = hit_t1.depth;
                bundle.depth_t1.valid[i] = 1;

                if (hit_t1.local.z() > 0.0) {
                    const double su = K.fx * hit_t1.local.x() / hit_t1.local.z() + K.cx;
                    const double sv = K.fy * hit_t1.local.y() / hit_t1.local.z() + K.cy;
                    const Eigen::Vector3d source_ray((su - K.cx) / K.fx, (sv - K.cy) / K.fy, 1.0);
                    const Hit blocker = intersect(surfaces, source_ray, K, false);
                    if (blocker.surface &&
                        blocker.depth < hit_t1.local.z() - 1e-9 * (1.0 + hit_t1.local.z()))
                        bundle.occluded_t1.set(y, x, true);
                }
            }
        }
    }

    // Compress footprint ids to contiguous labels, background first.
    std::vector<std::int32_t> mapping(surfaces.size() + 1, -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < raw_labels.size(); ++i)
        if (mapping[raw_labels[i]] < 0 && raw_labels[i] == 0)
            mapping[0] = next++;
    for (std::size_t i = 0; i < raw_labels.size(); ++i)
        if (mapping[raw_labels[i]] < 0)
            mapping[raw_labels[i]] = next++;
    bundle.labels_gt.height = H;
    bundle.labels_gt.width = W;
    bundle.labels_gt.labels.resize(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size(); ++i)
        bundle.labels_gt.labels[i] = mapping[raw_labels[i]];
    bundle.labels_gt.recount();

    return bundle;
}

PoseSE3 perturb_pose(const PoseSE3& pose, double rot_deg, double trans_m, std::uint64_t seed) {
    if (rot_deg < 0.0 || trans_m < 0.0)
        throw DomainError("perturb_pose: magnitudes must be non-negative");
    Rng rng(seed);
    const Eigen::Vector3d axis = rng.unit_vector();
    const Eigen::Vector3d direction = rng.unit_vector();
    PoseSE3 out;
    out.rotation =
        (Eigen::Quaterniond(Eigen::AngleAxisd(rot_deg * kPi / 180.0, axis)) * pose.rotation)
            .normalized();
    out.translation = pose.translation + trans_m * direction;
    return out;
}

std::string serialize_scene_spec(const SceneSpec& spec) {
    std::string out;
    out += "width: " + std::to_string(spec.intrinsics.width) + "\n";
    out += "height: " + std::to_string(spec.intrinsics.height) + "\n";
    out += "fx: " + format_double(spec.intrinsics.fx) + "\n";
    out += "fy: " + format_double(spec.intrinsics.fy) + "\n";
    out += "cx: " + format_double(spec.intrinsics.cx) + "\n";
    out += "cy: " + format_double(spec.intrinsics.cy) + "\n";
    out += "seed: " + std::to_string(spec.seed) + "\n";
    out += std::string("texture: ") + (spec.texture == TextureKind::checker ? "checker" : "noise") +
           "\n";
    out += "texture_scale: " + format_double(spec.texture_scale) + "\n";
    out += "background_depth: " + format_double(spec.background_depth) + "\n";
    out += "background_normal: " + format_vector(spec.background_normal) + "\n";
    append_pose(out, "ego", spec.ego);
    for (const ObjectSpec& obj : spec.objects) {
        out += std::string("object: ") +
               (obj.shape == ObjectSpec::Shape::rectangle ? "rect " : "ellipse ") +
               format_double(obj.p0) + " " + format_double(obj.p1) + " " + format_double(obj.p2) +
               " " + format_double(obj.p3) + " " + format_double(obj.depth) + "\n";
        append_pose(out, "object", obj.motion);
    }
    return out;
}

SceneSpec parse_scene_spec(const std::string& text) {
    SceneSpec spec;
    spec.objects.clear();

    struct PoseParts {
        Eigen::Vector3d axis{1.0, 0.0, 0.0};
        double angle_deg = 0.0;
        Eigen::Vector3d trans{0.0, 0.0, 0.0};
        PoseSE3 build() const {
            if (!(axis.norm() > 0.0))
                throw ParseError("scene spec: rotation axis must be nonzero");
            return PoseSE3(Eigen::Quaterniond(Eigen::AngleAxisd(angle_deg * kPi / 180.0,
                                                                axis.normalized())),
                           trans);
        }
    };
    PoseParts ego_parts;
    std::vector<PoseParts> object_parts;

    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const std::size_t colon = line.find(':');
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        if (colon == std::string::npos)
            throw ParseError("scene spec line " + std::to_string(line_no) + ": expected 'key: value'");
        std::string key = line.substr(0, colon);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        std::istringstream value(line.substr(colon + 1));

        auto read_double = [&](const char* what) {
            double v;
            if (!(value >> v))
                throw ParseError("scene spec line " + std::to_string(line_no) + ": bad " +
                                 std::string(what));
            return v;
        };
        auto read_vector = [&](const char* what) {
            Eigen::Vector3d v;
            v.x() = read_double(what);
            v.y() = read_double(what);
            v.z() = read_double(what);
            return v;
        };

        if (key == "width")
            spec.intrinsics.width = static_cast<int>(read_double("width"));
        else if (key == "height")
            spec.intrinsics.height = static_cast<int>(read_double("height"));
        else if (key == "fx")
            spec.intrinsics.fx = read_double("fx");
        else if (key == "fy")
            spec.intrinsics.fy = read_double("fy");
        else if (key == "cx")
            spec.intrinsics.cx = read_double("cx");
        else if (key == "cy")
            spec.intrinsics.cy = read_double("cy");
        else if (key == "seed")
            spec.seed = static_cast<std::uint64_t>(read_double("seed"));
        else if (key == "texture") {
            std::string kind;
            value >> kind;
            if (kind == "noise")
                spec.texture = TextureKind::noise;
            else if (kind == "checker")
                spec.texture = TextureKind::checker;
            else
                throw ParseError("scene spec line " + std::to_string(line_no) +
                                 ": texture must be 'noise' or 'checker'");
        } else if (key == "texture_scale")
            spec.texture_scale = read_double("texture_scale");
        else if (key == "background_depth")
            spec.background_depth = read_double("background_depth");
        else if (key == "background_normal")
            spec.background_normal = read_vector("background_normal");
        else if (key == "ego_rot_axis")
            ego_parts.axis = read_vector("ego_rot_axis");
        else if (key == "ego_rot_deg")
            ego_parts.angle_deg = read_double("ego_rot_deg");
        else if (key == "ego_trans")
            ego_parts.trans = read_vector("ego_trans");
        else if (key == "object") {
            std::string shape;
            value >> shape;
            ObjectSpec obj;
            if (shape == "rect")
                obj.shape = ObjectSpec::Shape::rectangle;
            else if (shape == "ellipse")
                obj.shape = ObjectSpec::Shape::ellipse;
            else
                throw ParseError("scene spec line " + std::to_string(line_no) +
                                 ": object shape must be 'rect' or 'ellipse'");
            obj.p0 = read_double("object");
            obj.p1 = read_double("object");
            obj.p2 = read_double("object");
            obj.p3 = read_double("object");
            obj.depth = read_double("object");
            spec.objects.push_back(obj);
            object_parts.emplace_back();
        } else if (key == "object_rot_axis" || key == "object_rot_deg" || key == "object_trans") {
            if (object_parts.empty())
                throw ParseError("scene spec line " + std::to_string(line_no) + ": '" + key +
                                 "' before any 'object:' line");
            if (key == "object_rot_axis")
                object_parts.back().axis = read_vector(key.c_str());
            else if (key == "object_rot_deg")
                object_parts.back().angle_deg = read_double(key.c_str());
            else
                object_parts.back().trans = read_vector(key.c_str());
        } else
            throw ParseError("scene spec line " + std::to_string(line_no) + ": unknown key '" +
                             key + "'");
    }

    spec.ego = ego_parts.build();
    for (std::size_t i = 0; i < object_parts.size(); ++i)
        spec.objects[i].motion = object_parts[i].build();
    spec.validate();
    return spec;
}

std::uint64_t scene_spec_digest(const SceneSpec& spec) {
    const std::string canonical = serialize_scene_spec(spec);
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

} // namespace flowdepth
