#include "handmotion/skeleton.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace handmotion {

namespace {

constexpr int kTemplateFileVersion = 1;

const char* kFingerNames[5] = {"thumb", "index", "middle", "ring", "pinky"};
const char* kSegmentNames[4] = {"mcp", "pip", "dip", "tip"};

}  // namespace

int rotation_index(int joint) {
    if (joint <= 0 || joint >= kJointCount) return -1;
    int finger = (joint - 1) / 4;
    int segment = (joint - 1) % 4;  // 0=MCP 1=PIP 2=DIP 3=TIP
    if (segment == 3) return -1;
    return finger * 3 + segment;
}

bool is_fingertip(int joint) {
    return joint > 0 && (joint - 1) % 4 == 3;
}

SkeletonTemplate default_template(Handedness handedness) {
    SkeletonTemplate tpl;
    tpl.handedness = handedness;
    tpl.parents[0] = kRootParent;
    tpl.joint_names[0] = "wrist";

    // right-hand layout: fingers along +x, thumb toward +y, palm plane z=0
    const Vec3 mcp[5] = {
        {0.025, 0.040, -0.010},   // thumb
        {0.088, 0.025, 0.0},      // index
        {0.092, 0.005, 0.0},      // middle
        {0.088, -0.015, 0.0},     // ring
        {0.080, -0.035, 0.0},     // pinky
    };
    const double segments[5][3] = {
        {0.035, 0.030, 0.025},
        {0.036, 0.022, 0.020},
        {0.040, 0.026, 0.021},
        {0.036, 0.024, 0.020},
        {0.030, 0.018, 0.017},
    };

    for (int f = 0; f < 5; ++f) {
        Vec3 dir = mcp[f].normalized();
        Vec3 p = mcp[f];
        for (int s = 0; s < 4; ++s) {
            int j = 1 + f * 4 + s;
            if (s > 0) p += dir * segments[f][s - 1];
            tpl.rest_joints[j] = p;
            tpl.parents[j] = (s == 0) ? 0 : j - 1;
            tpl.joint_names[j] = std::string(kFingerNames[f]) + "_" + kSegmentNames[s];
        }
    }

    // deterministic synthetic shape basis:
    //   mode 0      global scale
    //   modes 1..5  per-finger elongation, growing along the chain
    //   modes 6..9  palm spread / thickness modes
    tpl.joint_shape_basis.assign(kShapeDim, {});
    for (int j = 0; j < kJointCount; ++j)
        tpl.joint_shape_basis[0][j] = tpl.rest_joints[j] * 0.02;
    for (int f = 0; f < 5; ++f) {
        Vec3 dir = mcp[f].normalized();
        for (int s = 0; s < 4; ++s) {
            int j = 1 + f * 4 + s;
            tpl.joint_shape_basis[1 + f][j] = dir * (0.0015 * (s + 1));
        }
    }
    for (int f = 0; f < 5; ++f) {
        double spread = 0.002 * (f - 2);
        for (int s = 0; s < 4; ++s) {
            int j = 1 + f * 4 + s;
            tpl.joint_shape_basis[6][j] = Vec3{0.0, spread, 0.0};
            tpl.joint_shape_basis[7][j] = Vec3{0.0, 0.0, 0.001 * (s + 1)};
            tpl.joint_shape_basis[8][j] = Vec3{0.001 * (f % 2 ? 1 : -1), 0.0, 0.0};
            tpl.joint_shape_basis[9][j] = Vec3{0.0005 * s, -0.0005 * spread * 100.0, 0.0};
        }
    }

    if (handedness == Handedness::Left) {
        for (int j = 0; j < kJointCount; ++j) tpl.rest_joints[j].y = -tpl.rest_joints[j].y;
        for (auto& slice : tpl.joint_shape_basis)
            for (int j = 0; j < kJointCount; ++j) slice[j].y = -slice[j].y;
    }
    return tpl;
}

JointSet rest_joints(const SkeletonTemplate& tpl, const std::array<double, kShapeDim>& beta) {
    if (tpl.joint_shape_basis.size() != kShapeDim)
        throw std::invalid_argument("template shape basis must have exactly " +
                                    std::to_string(kShapeDim) + " slices");
    JointSet out;
    out.positions.resize(kJointCount);
    for (int j = 0; j < kJointCount; ++j) {
        Vec3 p = tpl.rest_joints[j];
        for (int b = 0; b < kShapeDim; ++b) p += tpl.joint_shape_basis[b][j] * beta[b];
        out.positions[j] = p;
    }
    return out;
}

JointSet forward_kinematics(const SkeletonTemplate& tpl, const HandParams& params) {
    JointSet rest = rest_joints(tpl, params.beta);
    JointSet out;
    out.positions.resize(kJointCount);
    std::array<Quat, kJointCount> world_rot;

    world_rot[0] = params.global_rot;
    out.positions[0] = quat_rotate(params.global_rot, rest.positions[0]) + params.translation;

    for (int j = 1; j < kJointCount; ++j) {
        int p = tpl.parents[j];
        Vec3 offset = rest.positions[j] - rest.positions[p];
        out.positions[j] = out.positions[p] + quat_rotate(world_rot[p], offset);
        int r = rotation_index(j);
        world_rot[j] = (r >= 0) ? quat_mul(world_rot[p], params.local_rots[r]) : world_rot[p];
    }
    return out;
}

JointSet palm_sample(const JointSet& joints21) {
    if (joints21.count() != kJointCount)
        throw std::invalid_argument("palm_sample expects 21 joints");
    JointSet out = joints21;
    const Vec3& wrist = joints21.positions[0];
    for (int f = 1; f < 5; ++f) {  // index/middle/ring/pinky MCPs
        const Vec3& mcp = joints21.positions[1 + f * 4];
        out.positions.push_back((wrist + mcp) * 0.5);
    }
    return out;
}

std::array<double, kBoneCount> bone_lengths(const JointSet& joints21,
                                            const SkeletonTemplate& tpl) {
    if (joints21.count() != kJointCount)
        throw std::invalid_argument("bone_lengths expects 21 joints");
    std::array<double, kBoneCount> out{};
    for (int j = 1; j < kJointCount; ++j)
        out[j - 1] = (joints21.positions[j] - joints21.positions[tpl.parents[j]]).norm();
    return out;
}

void save_template(const std::string& path, const SkeletonTemplate& tpl) {
    nlohmann::json j;
    j["format"] = "handmotion-template";
    j["version"] = kTemplateFileVersion;
    j["handedness"] = tpl.handedness == Handedness::Left ? "left" : "right";
    j["joint_names"] = tpl.joint_names;
    j["parents"] = tpl.parents;
    auto vec3_to_json = [](const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); };
    nlohmann::json rest = nlohmann::json::array();
    for (const auto& p : tpl.rest_joints) rest.push_back(vec3_to_json(p));
    j["rest_joints"] = rest;
    nlohmann::json basis = nlohmann::json::array();
    for (const auto& slice : tpl.joint_shape_basis) {
        nlohmann::json js = nlohmann::json::array();
        for (const auto& p : slice) js.push_back(vec3_to_json(p));
        basis.push_back(js);
    }
    j["joint_shape_basis"] = basis;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

SkeletonTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template file " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "handmotion-template")
        throw std::runtime_error("not a handmotion template file: " + path);
    if (j.value("version", 0) != kTemplateFileVersion)
        throw std::runtime_error("unsupported template file version in " + path);

    SkeletonTemplate tpl;
    tpl.handedness = j.at("handedness") == "left" ? Handedness::Left : Handedness::Right;
    auto names = j.at("joint_names");
    auto parents = j.at("parents");
    auto rest = j.at("rest_joints");
    auto basis = j.at("joint_shape_basis");
    if (names.size() != kJointCount || parents.size() != kJointCount ||
        rest.size() != kJointCount || basis.size() != kShapeDim)
        throw std::runtime_error("malformed template file " + path);

    auto to_vec3 = [](const nlohmann::json& a) {
        return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
    };
    for (int i = 0; i < kJointCount; ++i) {
        tpl.joint_names[i] = names[i].get<std::string>();
        tpl.parents[i] = parents[i].get<int>();
        tpl.rest_joints[i] = to_vec3(rest[i]);
    }
    tpl.joint_shape_basis.resize(kShapeDim);
    for (int b = 0; b < kShapeDim; ++b) {
        if (basis[b].size() != kJointCount)
            throw std::runtime_error("malformed shape basis in " + path);
        for (int i = 0; i < kJointCount; ++i)
            tpl.joint_shape_basis[b][i] = to_vec3(basis[b][i]);
    }
    return tpl;
}

}  // namespace handmotion
