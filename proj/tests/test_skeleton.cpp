#include <doctest.h>

#include <cstdio>
#include <functional>
#include <random>

#include "handmotion/skeleton.hpp"

using namespace handmotion;

namespace {

HandParams random_params(std::mt19937_64& rng, double pose_scale = 0.6) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-pose_scale, pose_scale);
    HandParams p;
    for (double& b : p.beta) b = std::clamp(n(rng), -3.0, 3.0);
    p.global_rot = Quat(n(rng), n(rng), n(rng), n(rng));
    p.translation = {u(rng), u(rng), u(rng)};
    for (Quat& q : p.local_rots) q = Quat::from_axis_angle({u(rng), u(rng), u(rng)});
    return p;
}

// independent FK oracle: per joint, walk the ancestor chain composing 3x3
// rotation matrices from scratch
using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

Vec3 mat_apply(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

JointSet fk_oracle(const SkeletonTemplate& tpl, const HandParams& params) {
    // naive rest joints
    std::array<Vec3, kJointCount> rest{};
    for (int j = 0; j < kJointCount; ++j) {
        rest[j] = tpl.rest_joints[j];
        for (int b = 0; b < kShapeDim; ++b)
            rest[j] += tpl.joint_shape_basis[b][j] * params.beta[b];
    }
    // recursive world rotation of each joint's parent frame
    std::function<Mat3(int)> world_rot = [&](int j) -> Mat3 {
        if (j == 0) return params.global_rot.to_matrix();
        Mat3 parent = world_rot(tpl.parents[j]);
        int r = rotation_index(j);
        if (r < 0) return parent;
        return mat_mul(parent, params.local_rots[r].to_matrix());
    };
    std::function<Vec3(int)> pos = [&](int j) -> Vec3 {
        if (j == 0) return params.translation + mat_apply(world_rot(0), rest[0]);
        int p = tpl.parents[j];
        return pos(p) + mat_apply(world_rot(p), rest[j] - rest[p]);
    };
    JointSet out;
    out.positions.resize(kJointCount);
    for (int j = 0; j < kJointCount; ++j) out.positions[j] = pos(j);
    return out;
}

double max_joint_err(const JointSet& a, const JointSet& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.positions.size(); ++i)
        m = std::max(m, (a.positions[i] - b.positions[i]).norm());
    return m;
}

}  // namespace

TEST_CASE("template topology is a 21-joint tree with 4-joint finger chains") {
    for (Handedness h : {Handedness::Left, Handedness::Right}) {
        SkeletonTemplate tpl = default_template(h);
        CHECK(tpl.parents[0] == kRootParent);
        int edges = 0;
        for (int j = 1; j < kJointCount; ++j) {
            CHECK(tpl.parents[j] >= 0);
            CHECK(tpl.parents[j] < j);
            ++edges;
        }
        CHECK(edges == kBoneCount);
        CHECK(tpl.joint_shape_basis.size() == kShapeDim);
        // 15 rotated joints, fingertips carry none
        int rotated = 0;
        for (int j = 0; j < kJointCount; ++j)
            if (rotation_index(j) >= 0) ++rotated;
        CHECK(rotated == kRotatedJointCount);
        CHECK(is_fingertip(4));
        CHECK(!is_fingertip(3));
        CHECK(rotation_index(4) == -1);
    }
}

TEST_CASE("rest_joints: zero and unit betas") {
    SkeletonTemplate tpl = default_template(Handedness::Right);
    JointSet zero = rest_joints(tpl, {});
    for (int j = 0; j < kJointCount; ++j)
        CHECK((zero.positions[j] - tpl.rest_joints[j]).norm() == 0.0);

    std::array<double, kShapeDim> e1{};
    e1[1] = 1.0;
    JointSet unit = rest_joints(tpl, e1);
    for (int j = 0; j < kJointCount; ++j)
        CHECK((unit.positions[j] - (tpl.rest_joints[j] + tpl.joint_shape_basis[1][j])).norm() <
              1e-15);
}

TEST_CASE("rest_joints matches brute-force summation and is linear in beta") {
    SkeletonTemplate tpl = default_template(Handedness::Left);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::array<double, kShapeDim> b1{}, b2{};
        for (int k = 0; k < kShapeDim; ++k) { b1[k] = n(rng); b2[k] = n(rng); }
        JointSet r1 = rest_joints(tpl, b1);
        for (int j = 0; j < kJointCount; ++j) {
            Vec3 expect = tpl.rest_joints[j];
            for (int k = 0; k < kShapeDim; ++k) expect += tpl.joint_shape_basis[k][j] * b1[k];
            CHECK((r1.positions[j] - expect).norm() < 1e-12);
        }
        // rest(a b1 + b b2) = a rest(b1) + b rest(b2) - (a+b-1) rest(0)
        double a = 0.3, b = -1.2;
        std::array<double, kShapeDim> mix{};
        for (int k = 0; k < kShapeDim; ++k) mix[k] = a * b1[k] + b * b2[k];
        JointSet rm = rest_joints(tpl, mix);
        JointSet r2 = rest_joints(tpl, b2);
        JointSet r0 = rest_joints(tpl, {});
        for (int j = 0; j < kJointCount; ++j) {
            Vec3 expect = r1.positions[j] * a + r2.positions[j] * b -
                          r0.positions[j] * (a + b - 1.0);
            CHECK((rm.positions[j] - expect).norm() < 1e-12);
        }
    }
}

TEST_CASE("forward kinematics special cases") {
    SkeletonTemplate tpl = default_template(Handedness::Right);
    HandParams identity;
    JointSet fk = forward_kinematics(tpl, identity);
    CHECK(max_joint_err(fk, rest_joints(tpl, {})) < 1e-15);

    HandParams half_turn;
    half_turn.global_rot = Quat::from_axis_angle({0, 0, M_PI});
    JointSet rot = forward_kinematics(tpl, half_turn);
    for (int j = 0; j < kJointCount; ++j) {
        CHECK(rot.positions[j].x == doctest::Approx(-tpl.rest_joints[j].x).epsilon(1e-9));
        CHECK(rot.positions[j].y == doctest::Approx(-tpl.rest_joints[j].y).epsilon(1e-9));
        CHECK(rot.positions[j].z == doctest::Approx(tpl.rest_joints[j].z).epsilon(1e-9));
    }
}

TEST_CASE("forward kinematics matches the recursive oracle") {
    SkeletonTemplate tpl = default_template(Handedness::Left);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        HandParams p = random_params(rng);
        CHECK(max_joint_err(forward_kinematics(tpl, p), fk_oracle(tpl, p)) < 1e-9);
    }
}

TEST_CASE("FK root-transform equivariance and bone rigidity") {
    SkeletonTemplate tpl = default_template(Handedness::Right);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        HandParams p = random_params(rng);
        HandParams local = p;
        local.global_rot = Quat::identity();
        local.translation = {};
        JointSet with_root = forward_kinematics(tpl, p);
        JointSet without = forward_kinematics(tpl, local);
        double err = 0.0;
        for (int j = 0; j < kJointCount; ++j) {
            Vec3 mapped = quat_rotate(p.global_rot, without.positions[j]) + p.translation;
            err = std::max(err, (mapped - with_root.positions[j]).norm());
        }
        CHECK(err < 1e-9);

        auto posed = bone_lengths(with_root, tpl);
        auto rest = bone_lengths(rest_joints(tpl, p.beta), tpl);
        for (int b = 0; b < kBoneCount; ++b)
            CHECK(std::abs(posed[b] - rest[b]) < 1e-9);
    }
}

TEST_CASE("palm_sample appends midpoints and is rigid-equivariant") {
    SkeletonTemplate tpl = default_template(Handedness::Left);
    JointSet rest = rest_joints(tpl, {});
    JointSet palm = palm_sample(rest);
    CHECK(palm.count() == kPalmJointCount);
    for (int j = 0; j < kJointCount; ++j)
        CHECK((palm.positions[j] - rest.positions[j]).norm() == 0.0);
    const int mcps[4] = {5, 9, 13, 17};
    for (int k = 0; k < 4; ++k) {
        Vec3 expect = (rest.positions[0] + rest.positions[mcps[k]]) * 0.5;
        CHECK((palm.positions[kJointCount + k] - expect).norm() < 1e-15);
    }

    std::mt19937_64 rng(15);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        RigidTransform t{Quat(n(rng), n(rng), n(rng), n(rng)), {n(rng), n(rng), n(rng)}};
        JointSet moved = rest;
        for (auto& p : moved.positions) p = t.apply(p);
        JointSet a = palm_sample(moved);
        JointSet b = palm_sample(rest);
        for (auto& p : b.positions) p = t.apply(p);
        CHECK(max_joint_err(a, b) < 1e-12);
    }

    JointSet zeros;
    zeros.positions.assign(kJointCount, {});
    JointSet zp = palm_sample(zeros);
    for (int k = kJointCount; k < kPalmJointCount; ++k)
        CHECK(zp.positions[k].norm() == 0.0);
}

TEST_CASE("bone_lengths scale homogeneously") {
    SkeletonTemplate tpl = default_template(Handedness::Right);
    JointSet rest = rest_joints(tpl, {});
    JointSet scaled = rest;
    for (auto& p : scaled.positions) p = p * 2.0;
    auto a = bone_lengths(rest, tpl);
    auto b = bone_lengths(scaled, tpl);
    for (int k = 0; k < kBoneCount; ++k) CHECK(b[k] == doctest::Approx(2.0 * a[k]).epsilon(1e-12));
}

TEST_CASE("template JSON file round trip") {
    SkeletonTemplate tpl = default_template(Handedness::Right);
    std::string path = "tpl_roundtrip_test.json";
    save_template(path, tpl);
    SkeletonTemplate back = load_template(path);
    CHECK(back.handedness == tpl.handedness);
    for (int j = 0; j < kJointCount; ++j) {
        CHECK(back.parents[j] == tpl.parents[j]);
        CHECK(back.joint_names[j] == tpl.joint_names[j]);
        CHECK((back.rest_joints[j] - tpl.rest_joints[j]).norm() < 1e-12);
    }
    for (int b = 0; b < kShapeDim; ++b)
        for (int j = 0; j < kJointCount; ++j)
            CHECK((back.joint_shape_basis[b][j] - tpl.joint_shape_basis[b][j]).norm() < 1e-12);
    std::remove(path.c_str());
}
