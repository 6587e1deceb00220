#pragma once

#include <array>
#include <string>
#include <vector>

#include "handmotion/geometry.hpp"

namespace handmotion {

inline constexpr int kJointCount = 21;       // wrist + 5 fingers x (MCP, PIP, DIP, TIP)
inline constexpr int kBoneCount = 20;
inline constexpr int kShapeDim = 10;         // shape basis size B
inline constexpr int kRotatedJointCount = 15;  // MCP/PIP/DIP per finger
inline constexpr int kPalmJointCount = 25;   // 21 joints + 4 palm samples
inline constexpr int kRootParent = -1;

enum class Handedness { Left, Right };

/// Shape-dependent rest joints plus the linear joint shape basis: the
/// joints-only compressed form of the MANO hand model.
struct SkeletonTemplate {
    std::array<Vec3, kJointCount> rest_joints{};
    std::vector<std::array<Vec3, kJointCount>> joint_shape_basis;  // B slices
    std::array<int, kJointCount> parents{};
    std::array<std::string, kJointCount> joint_names{};
    Handedness handedness = Handedness::Left;
};

struct HandParams {
    std::array<double, kShapeDim> beta{};
    Quat global_rot;
    Vec3 translation;
    std::array<Quat, kRotatedJointCount> local_rots{};
};

struct JointSet {
    std::vector<Vec3> positions;

    int count() const { return static_cast<int>(positions.size()); }
};

/// Index of a joint's slot in HandParams::local_rots, or -1 for the wrist and
/// the five fingertips (leaves carry no rotation).
int rotation_index(int joint);

/// True for the five fingertip leaves.
bool is_fingertip(int joint);

/// Synthetic MANO-topology template with a deterministic 10-mode joint shape
/// basis. Stands in for externally derived bases (see load_template).
SkeletonTemplate default_template(Handedness handedness);

/// Versioned JSON template file, for users holding externally derived bases.
SkeletonTemplate load_template(const std::string& path);
void save_template(const std::string& path, const SkeletonTemplate& tpl);

/// rest_joints(tpl) + sum_b beta_b * basis_b
JointSet rest_joints(const SkeletonTemplate& tpl, const std::array<double, kShapeDim>& beta);

/// World-space joints from shape + global pose + 15 local rotations.
/// Fingertips inherit the parent rotation; bones are rigid.
JointSet forward_kinematics(const SkeletonTemplate& tpl, const HandParams& params);

/// Appends 4 palm points: midpoints wrist <-> MCP of index/middle/ring/pinky.
JointSet palm_sample(const JointSet& joints21);

/// One length per tree edge, ordered by child index (children 1..20).
std::array<double, kBoneCount> bone_lengths(const JointSet& joints21,
                                            const SkeletonTemplate& tpl);

}  // namespace handmotion
