#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "handmotion/geometry.hpp"
#include "handmotion/skeleton.hpp"

namespace handmotion {

struct HandTemplates {
    SkeletonTemplate left;
    SkeletonTemplate right;
};

HandTemplates default_templates();

struct FramePair {
    HandParams left;
    HandParams right;
};

struct FrameJoints {
    JointSet left;
    JointSet right;
};

/// N frames of two-hand parameters, optionally with cached FK joints.
struct MotionSequence {
    std::vector<FramePair> frames;
    double fps = 30.0;
    std::vector<FrameJoints> cached_joints;  // empty, or one entry per frame

    int frame_count() const { return static_cast<int>(frames.size()); }
};

/// Joints for frame n: cached when available, FK otherwise.
FrameJoints frame_joints(const MotionSequence& seq, const HandTemplates& tpls, int n);

/// World position and orientation of a hand's wrist (root joint).
RigidTransform wrist_pose(const HandParams& params, const SkeletonTemplate& tpl);

struct NormalizationInfo {
    RigidTransform world_to_canonical;
};

// local rep: left 193 = [Rdot(4) Tdot(3) Jloc(63) Jdotloc(63) theta(60)],
// right 200 prepends [Rinit(4) Tinit(3)]
inline constexpr int kLocalWidth = 393;
inline constexpr int kLocalRightBase = 193;
// global rep: per hand 186 = [Jglob(63) Jdotglob(63) theta(60)]
inline constexpr int kGlobalWidth = 372;
inline constexpr int kGlobalRightBase = 186;

/// The 14 wrist-velocity channels of the local rep (left Rdot/Tdot, right
/// Rdot/Tdot), used by trajectory conditioning.
extern const std::array<int, 14> kTrajectoryChannels;

using RepMatrix = Eigen::MatrixXd;

/// Rigidly moves the whole sequence so the frame-0 left wrist sits at the
/// origin with identity orientation (heading axis on (1,0,0)).
std::pair<MotionSequence, NormalizationInfo> normalize_sequence(const MotionSequence& seq,
                                                                const HandTemplates& tpls);

RepMatrix encode_local(const MotionSequence& seq, const HandTemplates& tpls);
MotionSequence decode_local(const RepMatrix& rep, const HandTemplates& tpls);

RepMatrix encode_global(const MotionSequence& seq, const HandTemplates& tpls);
MotionSequence decode_global(const RepMatrix& rep, const HandTemplates& tpls);

}  // namespace handmotion
