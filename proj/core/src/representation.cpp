#include "handmotion/representation.hpp"

#include <stdexcept>

namespace handmotion {

namespace {

// block offsets inside a hand's local-rep slice (right slice shifted by 7
// for the leading Rinit/Tinit)
constexpr int kVelQuat = 0;    // Rdot, 4
constexpr int kVelTrans = 4;   // Tdot, 3
constexpr int kJointsLocal = 7;      // 63
constexpr int kJointVelLocal = 70;   // 63
constexpr int kThetaLocal = 133;     // 60

constexpr int kJointsGlobal = 0;     // 63
constexpr int kJointVelGlobal = 63;  // 63
constexpr int kThetaGlobal = 126;    // 60

void put_quat(RepMatrix& m, int row, int col, const Quat& q) {
    m(row, col) = q.w;
    m(row, col + 1) = q.x;
    m(row, col + 2) = q.y;
    m(row, col + 3) = q.z;
}

Quat get_quat(const RepMatrix& m, int row, int col) {
    double w = m(row, col), x = m(row, col + 1), y = m(row, col + 2), z = m(row, col + 3);
    double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n < 1e-8)
        throw std::runtime_error("non-normalizable quaternion block at row " +
                                 std::to_string(row) + " col " + std::to_string(col));
    Quat q;
    q.w = w; q.x = x; q.y = y; q.z = z;
    q.normalize();
    return q;
}

void put_vec3(RepMatrix& m, int row, int col, const Vec3& v) {
    m(row, col) = v.x;
    m(row, col + 1) = v.y;
    m(row, col + 2) = v.z;
}

Vec3 get_vec3(const RepMatrix& m, int row, int col) {
    return {m(row, col), m(row, col + 1), m(row, col + 2)};
}

void put_theta(RepMatrix& m, int row, int col, const HandParams& p) {
    for (int r = 0; r < kRotatedJointCount; ++r) put_quat(m, row, col + 4 * r, p.local_rots[r]);
}

void get_theta(const RepMatrix& m, int row, int col, HandParams& p) {
    for (int r = 0; r < kRotatedJointCount; ++r) p.local_rots[r] = get_quat(m, row, col + 4 * r);
}

HandParams transformed(const HandParams& p, const RigidTransform& x,
                       const SkeletonTemplate& tpl) {
    Vec3 rest_wrist = rest_joints(tpl, p.beta).positions[0];
    Vec3 wrist = p.translation + quat_rotate(p.global_rot, rest_wrist);
    HandParams out = p;
    out.global_rot = quat_mul(x.rotation, p.global_rot);
    out.translation = x.apply(wrist) - quat_rotate(out.global_rot, rest_wrist);
    return out;
}

Quat quat_from_rotation_matrix(const Eigen::Matrix3d& r) {
    Eigen::Quaterniond eq(r);
    return Quat(eq.w(), eq.x(), eq.y(), eq.z());
}

// per-hand joint access without copying a whole FrameJoints
thread_local JointSet g_scratch_joints;
const JointSet& frame_joints_left(const MotionSequence& seq, const HandTemplates& tpls, int n) {
    if (!seq.cached_joints.empty()) return seq.cached_joints[n].left;
    g_scratch_joints = forward_kinematics(tpls.left, seq.frames[n].left);
    return g_scratch_joints;
}
const JointSet& frame_joints_right(const MotionSequence& seq, const HandTemplates& tpls, int n) {
    if (!seq.cached_joints.empty()) return seq.cached_joints[n].right;
    g_scratch_joints = forward_kinematics(tpls.right, seq.frames[n].right);
    return g_scratch_joints;
}

}  // namespace

const std::array<int, 14> kTrajectoryChannels = {
    0, 1, 2, 3, 4, 5, 6,                                     // left Rdot, Tdot
    kLocalRightBase + 7, kLocalRightBase + 8, kLocalRightBase + 9,
    kLocalRightBase + 10,                                    // right Rdot
    kLocalRightBase + 11, kLocalRightBase + 12, kLocalRightBase + 13,  // right Tdot
};

HandTemplates default_templates() {
    return {default_template(Handedness::Left), default_template(Handedness::Right)};
}

FrameJoints frame_joints(const MotionSequence& seq, const HandTemplates& tpls, int n) {
    if (!seq.cached_joints.empty()) return seq.cached_joints[n];
    return {forward_kinematics(tpls.left, seq.frames[n].left),
            forward_kinematics(tpls.right, seq.frames[n].right)};
}

RigidTransform wrist_pose(const HandParams& params, const SkeletonTemplate& tpl) {
    Vec3 rest_wrist = rest_joints(tpl, params.beta).positions[0];
    return {params.global_rot, params.translation + quat_rotate(params.global_rot, rest_wrist)};
}

std::pair<MotionSequence, NormalizationInfo> normalize_sequence(const MotionSequence& seq,
                                                                const HandTemplates& tpls) {
    if (seq.frames.empty()) throw std::invalid_argument("empty sequence");
    RigidTransform anchor = wrist_pose(seq.frames[0].left, tpls.left);
    // canonical frame: frame-0 left wrist at the origin, identity orientation.
    // Inverting the full wrist pose (not just a heading alignment) keeps
    // normalization idempotent and invariant under rigid pre-transforms.
    RigidTransform x = anchor.inverse();

    MotionSequence out;
    out.fps = seq.fps;
    out.frames.reserve(seq.frames.size());
    for (const auto& f : seq.frames)
        out.frames.push_back({transformed(f.left, x, tpls.left),
                              transformed(f.right, x, tpls.right)});
    if (!seq.cached_joints.empty()) {
        out.cached_joints.reserve(seq.cached_joints.size());
        for (const auto& fj : seq.cached_joints) {
            FrameJoints t = fj;
            for (auto& p : t.left.positions) p = x.apply(p);
            for (auto& p : t.right.positions) p = x.apply(p);
            out.cached_joints.push_back(std::move(t));
        }
    }
    return {std::move(out), NormalizationInfo{x}};
}

RepMatrix encode_local(const MotionSequence& seq, const HandTemplates& tpls) {
    int n_frames = seq.frame_count();
    if (n_frames < 1) throw std::invalid_argument("empty sequence");
    RepMatrix m(n_frames, kLocalWidth);
    m.setZero();

    RigidTransform right_init = wrist_pose(seq.frames[0].right, tpls.right);

    for (int hand = 0; hand < 2; ++hand) {
        const SkeletonTemplate& tpl = hand == 0 ? tpls.left : tpls.right;
        int base = hand == 0 ? 0 : kLocalRightBase + 7;

        RigidTransform prev;
        std::array<Vec3, kJointCount> prev_local{};
        for (int n = 0; n < n_frames; ++n) {
            const HandParams& p = hand == 0 ? seq.frames[n].left : seq.frames[n].right;
            RigidTransform pose = wrist_pose(p, tpl);
            const JointSet& joints =
                hand == 0 ? frame_joints_left(seq, tpls, n) : frame_joints_right(seq, tpls, n);

            Quat rdot = n == 0 ? Quat::identity()
                               : quat_mul(prev.rotation.conjugate(), pose.rotation);
            Vec3 tdot = n == 0 ? Vec3{} : pose.translation - prev.translation;
            put_quat(m, n, base + kVelQuat, rdot);
            put_vec3(m, n, base + kVelTrans, tdot);

            Quat inv = pose.rotation.conjugate();
            for (int j = 0; j < kJointCount; ++j) {
                Vec3 local = quat_rotate(inv, joints.positions[j] - pose.translation);
                put_vec3(m, n, base + kJointsLocal + 3 * j, local);
                Vec3 vel = n == 0 ? Vec3{} : local - prev_local[j];
                put_vec3(m, n, base + kJointVelLocal + 3 * j, vel);
                prev_local[j] = local;
            }
            put_theta(m, n, base + kThetaLocal, p);

            if (hand == 1) {
                put_quat(m, n, kLocalRightBase + 0, right_init.rotation);
                put_vec3(m, n, kLocalRightBase + 4, right_init.translation);
            }
            prev = pose;
        }
    }
    return m;
}

MotionSequence decode_local(const RepMatrix& rep, const HandTemplates& tpls) {
    if (rep.cols() != kLocalWidth)
        throw std::invalid_argument("local rep must have width " + std::to_string(kLocalWidth));
    int n_frames = static_cast<int>(rep.rows());
    MotionSequence out;
    out.frames.resize(n_frames);
    out.cached_joints.resize(n_frames);

    for (int hand = 0; hand < 2; ++hand) {
        const SkeletonTemplate& tpl = hand == 0 ? tpls.left : tpls.right;
        Vec3 rest_wrist = rest_joints(tpl, {}).positions[0];
        int base = hand == 0 ? 0 : kLocalRightBase + 7;

        RigidTransform pose;  // left integrates from identity
        if (hand == 1) {
            pose.rotation = get_quat(rep, 0, kLocalRightBase + 0);
            pose.translation = get_vec3(rep, 0, kLocalRightBase + 4);
        }
        for (int n = 0; n < n_frames; ++n) {
            if (n > 0) {
                pose.rotation = quat_mul(pose.rotation, get_quat(rep, n, base + kVelQuat));
                pose.translation += get_vec3(rep, n, base + kVelTrans);
            }
            HandParams p;
            p.global_rot = pose.rotation;
            p.translation = pose.translation - quat_rotate(pose.rotation, rest_wrist);
            get_theta(rep, n, base + kThetaLocal, p);

            JointSet joints;
            joints.positions.resize(kJointCount);
            for (int j = 0; j < kJointCount; ++j) {
                Vec3 local = get_vec3(rep, n, base + kJointsLocal + 3 * j);
                joints.positions[j] = quat_rotate(pose.rotation, local) + pose.translation;
            }
            if (hand == 0) {
                out.frames[n].left = p;
                out.cached_joints[n].left = std::move(joints);
            } else {
                out.frames[n].right = p;
                out.cached_joints[n].right = std::move(joints);
            }
        }
    }
    return out;
}

RepMatrix encode_global(const MotionSequence& seq, const HandTemplates& tpls) {
    int n_frames = seq.frame_count();
    if (n_frames < 1) throw std::invalid_argument("empty sequence");
    RepMatrix m(n_frames, kGlobalWidth);
    m.setZero();

    for (int hand = 0; hand < 2; ++hand) {
        int base = hand == 0 ? 0 : kGlobalRightBase;
        std::array<Vec3, kJointCount> prev{};
        for (int n = 0; n < n_frames; ++n) {
            const HandParams& p = hand == 0 ? seq.frames[n].left : seq.frames[n].right;
            const JointSet& joints =
                hand == 0 ? frame_joints_left(seq, tpls, n) : frame_joints_right(seq, tpls, n);
            for (int j = 0; j < kJointCount; ++j) {
                put_vec3(m, n, base + kJointsGlobal + 3 * j, joints.positions[j]);
                Vec3 vel = n == 0 ? Vec3{} : joints.positions[j] - prev[j];
                put_vec3(m, n, base + kJointVelGlobal + 3 * j, vel);
                prev[j] = joints.positions[j];
            }
            put_theta(m, n, base + kThetaGlobal, p);
        }
    }
    return m;
}

MotionSequence decode_global(const RepMatrix& rep, const HandTemplates& tpls) {
    if (rep.cols() != kGlobalWidth)
        throw std::invalid_argument("global rep must have width " + std::to_string(kGlobalWidth));
    int n_frames = static_cast<int>(rep.rows());
    MotionSequence out;
    out.frames.resize(n_frames);
    out.cached_joints.resize(n_frames);

    for (int hand = 0; hand < 2; ++hand) {
        const SkeletonTemplate& tpl = hand == 0 ? tpls.left : tpls.right;
        JointSet rest = rest_joints(tpl, {});
        int base = hand == 0 ? 0 : kGlobalRightBase;

        // proximal joint cloud used for wrist-orientation Procrustes:
        // wrist + the five MCPs, offsets relative to the rest wrist
        const int proximal[6] = {0, 1, 5, 9, 13, 17};
        Eigen::Matrix3Xd rest_cloud(3, 6);
        for (int k = 0; k < 6; ++k) {
            Vec3 d = rest.positions[proximal[k]] - rest.positions[0];
            rest_cloud.col(k) << d.x, d.y, d.z;
        }
        Eigen::Vector3d rest_centroid = rest_cloud.rowwise().mean();

        for (int n = 0; n < n_frames; ++n) {
            JointSet joints;
            joints.positions.resize(kJointCount);
            for (int j = 0; j < kJointCount; ++j)
                joints.positions[j] = get_vec3(rep, n, base + kJointsGlobal + 3 * j);

            Eigen::Matrix3Xd obs_cloud(3, 6);
            for (int k = 0; k < 6; ++k) {
                Vec3 d = joints.positions[proximal[k]] - joints.positions[0];
                obs_cloud.col(k) << d.x, d.y, d.z;
            }
            Eigen::Vector3d obs_centroid = obs_cloud.rowwise().mean();

            Eigen::Matrix3d h = (obs_cloud.colwise() - obs_centroid) *
                                (rest_cloud.colwise() - rest_centroid).transpose();
            Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
            if (r.determinant() < 0) {
                Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
                flip(2, 2) = -1;
                r = svd.matrixU() * flip * svd.matrixV().transpose();
            }

            HandParams p;
            p.global_rot = quat_from_rotation_matrix(r);
            p.translation = joints.positions[0] - quat_rotate(p.global_rot, rest.positions[0]);
            get_theta(rep, n, base + kThetaGlobal, p);

            if (hand == 0) {
                out.frames[n].left = p;
                out.cached_joints[n].left = std::move(joints);
            } else {
                out.frames[n].right = p;
                out.cached_joints[n].right = std::move(joints);
            }
        }
    }
    return out;
}

}  // namespace handmotion
