#include <doctest.h>

#include <random>

#include "handmotion/representation.hpp"
#include "handmotion/synth.hpp"

using namespace handmotion;

namespace {

MotionSequence random_sequence(std::uint64_t seed, int frames = 24) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.frames = frames;
    cfg.interaction_intensity = 0.3 + 0.4 * ((seed * 2654435761u) % 100) / 100.0;
    cfg.family = static_cast<MotionFamily>(seed % 3);
    return synth_sequence(cfg, default_templates());
}

double max_joint_error(const MotionSequence& a, const MotionSequence& b,
                       const HandTemplates& tpls) {
    double err = 0.0;
    for (int n = 0; n < a.frame_count(); ++n) {
        FrameJoints fa = frame_joints(a, tpls, n);
        FrameJoints fb = frame_joints(b, tpls, n);
        for (int j = 0; j < kJointCount; ++j) {
            err = std::max(err, (fa.left.positions[j] - fb.left.positions[j]).norm());
            err = std::max(err, (fa.right.positions[j] - fb.right.positions[j]).norm());
        }
    }
    return err;
}

MotionSequence static_sequence(int frames) {
    MotionSequence seq;
    seq.frames.assign(frames, FramePair{});
    for (auto& f : seq.frames) {
        f.right.translation = {0.0, -0.25, 0.0};
        f.left.local_rots[4] = Quat::from_axis_angle({0, 0.4, 0});
    }
    return seq;
}

}  // namespace

TEST_CASE("normalize places the frame-0 left wrist at the origin with +x heading") {
    HandTemplates tpls = default_templates();
    MotionSequence seq = random_sequence(42);
    auto [canon, info] = normalize_sequence(seq, tpls);

    RigidTransform pose = wrist_pose(canon.frames[0].left, tpls.left);
    CHECK(pose.translation.norm() < 1e-9);
    Vec3 heading = quat_rotate(pose.rotation, {1, 0, 0});
    CHECK((heading - Vec3{1, 0, 0}).norm() < 1e-6);

    // idempotence: normalizing again is the identity transform
    auto [twice, info2] = normalize_sequence(canon, tpls);
    CHECK(std::abs(info2.world_to_canonical.rotation.w - 1.0) < 1e-9);
    CHECK(info2.world_to_canonical.translation.norm() < 1e-9);
    CHECK(max_joint_error(canon, twice, tpls) < 1e-9);
}

TEST_CASE("normalize is invariant under rigid pre-transforms") {
    HandTemplates tpls = default_templates();
    MotionSequence seq = random_sequence(7);
    auto [canon, i1] = normalize_sequence(seq, tpls);

    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        RigidTransform x{Quat(n(rng), n(rng), n(rng), n(rng)), {n(rng), n(rng), n(rng)}};
        MotionSequence moved = seq;
        for (auto& f : moved.frames)
            for (HandParams* p : {&f.left, &f.right}) {
                const SkeletonTemplate& tpl = p == &f.left ? tpls.left : tpls.right;
                RigidTransform pose = wrist_pose(*p, tpl);
                Vec3 rest0 = rest_joints(tpl, p->beta).positions[0];
                p->global_rot = quat_mul(x.rotation, p->global_rot);
                p->translation = x.apply(pose.translation) -
                                 quat_rotate(p->global_rot, rest0);
            }
        auto [canon2, i2] = normalize_sequence(moved, tpls);
        CHECK(max_joint_error(canon, canon2, tpls) < 1e-6);
    }

    // plain translation case from the contract
    MotionSequence shifted = seq;
    for (auto& f : shifted.frames) {
        f.left.translation += Vec3{1, 2, 3};
        f.right.translation += Vec3{1, 2, 3};
    }
    auto [canon3, i3] = normalize_sequence(shifted, tpls);
    CHECK(max_joint_error(canon, canon3, tpls) < 1e-9);
}

TEST_CASE("local rep of a static pose has identity/zero velocities") {
    HandTemplates tpls = default_templates();
    auto [canon, info] = normalize_sequence(static_sequence(10), tpls);
    RepMatrix m = encode_local(canon, tpls);
    REQUIRE(m.cols() == kLocalWidth);
    REQUIRE(m.rows() == 10);
    for (int n = 0; n < 10; ++n) {
        for (int base : {0, kLocalRightBase + 7}) {
            CHECK(m(n, base + 0) == doctest::Approx(1.0).epsilon(1e-12));  // Rdot = identity
            CHECK(std::abs(m(n, base + 1)) < 1e-12);
            CHECK(std::abs(m(n, base + 4)) < 1e-12);  // Tdot = 0
            CHECK(std::abs(m(n, base + 5)) < 1e-12);
            CHECK(std::abs(m(n, base + 6)) < 1e-12);
        }
    }
}

TEST_CASE("local rep round trip on random synthetic sequences") {
    HandTemplates tpls = default_templates();
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        auto [canon, info] = normalize_sequence(random_sequence(seed), tpls);
        MotionSequence back = decode_local(encode_local(canon, tpls), tpls);
        CHECK(max_joint_error(canon, back, tpls) < 1e-5);
    }
}

TEST_CASE("global rep round trip and Procrustes wrist recovery") {
    HandTemplates tpls = default_templates();
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto [canon, info] = normalize_sequence(random_sequence(seed), tpls);
        RepMatrix m = encode_global(canon, tpls);
        REQUIRE(m.cols() == kGlobalWidth);
        MotionSequence back = decode_global(m, tpls);
        CHECK(max_joint_error(canon, back, tpls) < 1e-5);

        // decoded wrist rotation must reproduce the proximal joints
        for (int n = 0; n < canon.frame_count(); ++n) {
            FrameJoints fj = frame_joints(canon, tpls, n);
            JointSet fk = forward_kinematics(tpls.left, back.frames[n].left);
            const int proximal[6] = {0, 1, 5, 9, 13, 17};
            for (int k : proximal)
                CHECK((fk.positions[k] - fj.left.positions[k]).norm() < 1e-4);
        }
    }
}

TEST_CASE("velocity channels are exact backward differences") {
    HandTemplates tpls = default_templates();
    auto [canon, info] = normalize_sequence(random_sequence(21), tpls);
    RepMatrix g = encode_global(canon, tpls);
    for (int base : {0, kGlobalRightBase})
        for (int c = 0; c < 63; ++c) {
            CHECK(g(0, base + 63 + c) == 0.0);
            for (int n = 1; n < g.rows(); ++n)
                CHECK(g(n, base + 63 + c) ==
                      doctest::Approx(g(n, base + c) - g(n - 1, base + c)).epsilon(1e-12));
        }

    // summed local-rep Tdot reproduces the net wrist displacement
    RepMatrix l = encode_local(canon, tpls);
    for (int hand = 0; hand < 2; ++hand) {
        const SkeletonTemplate& tpl = hand == 0 ? tpls.left : tpls.right;
        int base = hand == 0 ? 0 : kLocalRightBase + 7;
        Vec3 sum{};
        for (int n = 0; n < l.rows(); ++n)
            sum += Vec3{l(n, base + 4), l(n, base + 5), l(n, base + 6)};
        Vec3 net = wrist_pose(hand == 0 ? canon.frames.back().left : canon.frames.back().right,
                              tpl).translation -
                   wrist_pose(hand == 0 ? canon.frames.front().left : canon.frames.front().right,
                              tpl).translation;
        CHECK((sum - net).norm() < 1e-6);
    }
}

TEST_CASE("decode_local rejects an all-zero quaternion block") {
    HandTemplates tpls = default_templates();
    auto [canon, info] = normalize_sequence(static_sequence(10), tpls);
    RepMatrix m = encode_local(canon, tpls);
    m.block(3, 133, 1, 4).setZero();  // first finger-joint quaternion of the left hand
    CHECK_THROWS(decode_local(m, tpls));
}

TEST_CASE("single-frame sequences encode with zero velocities") {
    HandTemplates tpls = default_templates();
    auto [canon, info] = normalize_sequence(static_sequence(10), tpls);
    canon.frames.resize(1);
    canon.cached_joints.clear();
    RepMatrix m = encode_local(canon, tpls);
    CHECK(m.rows() == 1);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 4) == 0.0);
    MotionSequence back = decode_local(m, tpls);
    CHECK(max_joint_error(canon, back, tpls) < 1e-9);
}
