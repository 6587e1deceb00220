#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "handmotion/metrics.hpp"
#include "handmotion/synth.hpp"

using namespace handmotion;

namespace {

// 25-joint sets spread far apart so no entry is within the contact threshold.
FrameJoints far_apart_frame() {
    FrameJoints fj;
    fj.left.positions.resize(kPalmJointCount);
    fj.right.positions.resize(kPalmJointCount);
    for (int i = 0; i < kPalmJointCount; ++i) {
        fj.left.positions[i] = {static_cast<double>(i), 50.0, 0.0};
        fj.right.positions[i] = {static_cast<double>(i), -50.0, 0.0};
    }
    return fj;
}

MotionSequence synth(std::uint64_t seed, int frames, double intensity,
                     MotionFamily family = MotionFamily::Clasp) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.frames = frames;
    cfg.interaction_intensity = intensity;
    cfg.family = family;
    return synth_sequence(cfg, default_templates());
}

}  // namespace

TEST_CASE("contact potential matches the closed form on a single active pair") {
    ContactParams p;  // K = 1, tau = 0.02
    FrameJoints fj = far_apart_frame();
    fj.left.positions[3] = {0.0, 0.0, 0.0};
    fj.right.positions[7] = {0.01, 0.0, 0.0};
    auto d = directed_distance_matrix(fj.left, fj.right);
    auto e = contact_potential(d, p);
    CHECK(e[3][7] == doctest::Approx(0.5 * 0.01 * 0.01).epsilon(1e-12));
    // (0.5 * (0.02 - 0.01)^2 = 5e-5)
    CHECK(e[3][7] == doctest::Approx(5e-5).epsilon(1e-12));
    double others = 0.0;
    for (int i = 0; i < kPalmJointCount; ++i)
        for (int j = 0; j < kPalmJointCount; ++j)
            if (i != 3 || j != 7) others += e[i][j];
    CHECK(others == 0.0);
}

TEST_CASE("interaction loss hand-checked: opposite directions triple the discrepancy") {
    // pred: one pair at distance 0.01 along +x  -> potential 5e-5
    // gt:   same pair at distance 0.015 along -x -> potential 1.25e-5
    // weight: 2 - cos(pi) = 3;   loss = |5e-5 - 1.25e-5| * 3 = 1.125e-4
    ContactParams p;
    FrameJoints pred = far_apart_frame();
    FrameJoints gt = far_apart_frame();
    pred.left.positions[0] = {0.0, 0.0, 0.0};
    pred.right.positions[0] = {0.01, 0.0, 0.0};
    gt.left.positions[0] = {0.0, 0.0, 0.0};
    gt.right.positions[0] = {-0.015, 0.0, 0.0};
    double loss = interaction_loss(std::vector<FrameJoints>{pred},
                                   std::vector<FrameJoints>{gt}, p);
    CHECK(loss == doctest::Approx(1.125e-4).epsilon(1e-10));

    // with the cross-product weight, |u x v| = 0 for antiparallel vectors
    ContactParams pc = p;
    pc.direction_weight = DirectionWeight::Cross;
    double loss_cross = interaction_loss(std::vector<FrameJoints>{pred},
                                         std::vector<FrameJoints>{gt}, pc);
    CHECK(loss_cross == doctest::Approx(3.75e-5).epsilon(1e-10));
}

TEST_CASE("interaction loss is zero when prediction equals ground truth") {
    HandTemplates tpls = default_templates();
    MotionSequence seq = synth(5, 30, 0.9);
    CHECK(interaction_loss(seq, seq, tpls, ContactParams{}) == 0.0);
}

TEST_CASE("interaction loss is nonnegative and frame-averaged") {
    ContactParams p;
    FrameJoints pred = far_apart_frame();
    FrameJoints gt = far_apart_frame();
    pred.right.positions[0] = pred.left.positions[0] + Vec3{0.01, 0.0, 0.0};
    double one = interaction_loss({pred}, {gt}, p);
    CHECK(one > 0.0);
    // duplicating frames leaves the mean unchanged
    double two = interaction_loss({pred, pred}, {gt, gt}, p);
    CHECK(two == doctest::Approx(one).epsilon(1e-12));
    // adding an inactive frame halves it
    FrameJoints idle = far_apart_frame();
    double half = interaction_loss({pred, idle}, {gt, idle}, p);
    CHECK(half == doctest::Approx(0.5 * one).epsilon(1e-12));
}

TEST_CASE("shape loss vanishes on self-comparison of symmetric hands") {
    HandTemplates tpls = default_templates();
    MotionSequence seq = synth(9, 20, 0.4);
    // synth uses beta = 0, and left/right templates are mirror images, so
    // every term of the loss is zero.
    CHECK(shape_loss(seq, seq, tpls) < 1e-12);
}

TEST_CASE("shape loss detects a bone-length perturbation via beta") {
    HandTemplates tpls = default_templates();
    MotionSequence gt = synth(9, 20, 0.4);
    MotionSequence pred = gt;
    pred.cached_joints.clear();
    for (auto& f : pred.frames) f.left.beta[0] = 2.0;

    double loss = shape_loss(pred, gt, tpls);
    CHECK(loss > 0.0);

    // oracle: recompute the expected value directly from bone lengths
    double expect = 0.0;
    for (int n = 0; n < gt.frame_count(); ++n) {
        FrameJoints pj = frame_joints(pred, tpls, n);
        FrameJoints gj = frame_joints(gt, tpls, n);
        auto pl = bone_lengths(pj.left, tpls.left);
        auto pr = bone_lengths(pj.right, tpls.right);
        auto gl = bone_lengths(gj.left, tpls.left);
        auto gr = bone_lengths(gj.right, tpls.right);
        for (int b = 0; b < kBoneCount; ++b)
            expect += std::abs(pl[b] - pr[b]) + std::abs(pl[b] - gl[b]) +
                      std::abs(pr[b] - gr[b]);
    }
    expect /= gt.frame_count();
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sdf penetration on hand-constructed capsule overlap") {
    HandTemplates tpls = default_templates();
    // Place the right hand so its wrist sits on a left bone; depth is computed
    // against a brute-force capsule oracle below.
    MotionSequence seq = synth(3, 12, 1.0);
    double radius = 0.008;
    double d = sdf_penetration(seq, tpls, radius);
    CHECK(d >= 0.0);

    // brute-force oracle: same definition, written independently
    double oracle = 0.0;
    int penetrating = 0;
    for (int n = 0; n < seq.frame_count(); ++n) {
        FrameJoints fj = frame_joints(seq, tpls, n);
        JointSet lp = palm_sample(fj.left);
        JointSet rp = palm_sample(fj.right);
        auto caps = [&](const JointSet& j, const SkeletonTemplate& tpl) {
            std::vector<Capsule> out;
            for (int k = 1; k < kJointCount; ++k)
                out.push_back({j.positions[tpl.parents[k]], j.positions[k], radius});
            return out;
        };
        auto lc = caps(fj.left, tpls.left);
        auto rc = caps(fj.right, tpls.right);
        double frame = 0.0;
        for (const Vec3& p : rp.positions)
            for (const Capsule& c : lc) {
                double s = capsule_signed_distance(p, c);
                if (s < 0.0) frame += -s;
            }
        for (const Vec3& p : lp.positions)
            for (const Capsule& c : rc) {
                double s = capsule_signed_distance(p, c);
                if (s < 0.0) frame += -s;
            }
        if (frame > 0.0) {
            oracle += frame;
            ++penetrating;
        }
    }
    if (penetrating > 0) oracle /= penetrating;
    CHECK(d == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("sdf penetration is zero for well-separated hands") {
    HandTemplates tpls = default_templates();
    MotionSequence seq = synth(8, 12, 0.0);
    for (auto& f : seq.frames) f.right.translation += Vec3{0.0, -10.0, 0.0};
    seq.cached_joints.clear();
    CHECK(sdf_penetration(seq, tpls, 0.008) == 0.0);
}

TEST_CASE("frechet distance against a closed-form diagonal oracle") {
    // For commuting (diagonal) covariances:
    //   FID = |mu_a - mu_b|^2 + sum_i (sqrt(ca_i) - sqrt(cb_i))^2
    FeatureStats a, b;
    a.mean = Eigen::Vector3d(1.0, 2.0, 3.0);
    b.mean = Eigen::Vector3d(1.0, 2.5, 3.0);
    a.covariance = Eigen::Vector3d(1.0, 4.0, 9.0).asDiagonal();
    b.covariance = Eigen::Vector3d(4.0, 4.0, 1.0).asDiagonal();
    double expect = 0.25 + (1.0 + 0.0 + 4.0);
    CHECK(frechet_distance(a, b) == doctest::Approx(expect).epsilon(1e-10));

    // identical stats -> zero
    CHECK(frechet_distance(a, a) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("frechet distance on random full covariances vs sampled oracle") {
    // Symmetry and nonnegativity on random PSD matrices.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        int d = 5;
        Eigen::MatrixXd A(d, d), B(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                A(i, j) = n(rng);
                B(i, j) = n(rng);
            }
        FeatureStats a, b;
        a.mean = Eigen::VectorXd::Zero(d);
        b.mean = Eigen::VectorXd::Zero(d);
        a.covariance = A * A.transpose();
        b.covariance = B * B.transpose();
        double dab = frechet_distance(a, b);
        double dba = frechet_distance(b, a);
        CHECK(dab >= -1e-9);
        CHECK(dab == doctest::Approx(dba).epsilon(1e-6));
    }
}

TEST_CASE("feature_stats matches hand computation") {
    Eigen::MatrixXd f(3, 2);
    f << 1, 2, 3, 4, 5, 6;
    FeatureStats s = feature_stats(f);
    CHECK(s.mean(0) == doctest::Approx(3.0));
    CHECK(s.mean(1) == doctest::Approx(4.0));
    // population covariance (divide by M): var = ((−2)^2+0+2^2)/3 = 8/3
    CHECK(s.covariance(0, 0) == doctest::Approx(8.0 / 3.0));
    CHECK(s.covariance(0, 1) == doctest::Approx(8.0 / 3.0));
    CHECK(s.covariance(1, 1) == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("diversity is deterministic per seed and rejects tiny inputs") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd f(40, 6);
    for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j) f(i, j) = n(rng);
    double d1 = diversity(f, 10, 7);
    double d2 = diversity(f, 10, 7);
    CHECK(d1 == d2);
    CHECK(d1 > 0.0);
    CHECK_THROWS(diversity(f, 25, 7));  // needs >= 2 * subset rows

    // doubling the spread doubles the expected pairwise distances
    double d3 = diversity(2.0 * f, 10, 7);
    CHECK(d3 == doctest::Approx(2.0 * d1).epsilon(1e-9));
}

TEST_CASE("statistical featurizer has width 744 and flags distinct motions") {
    HandTemplates tpls = default_templates();
    MotionSequence a = synth(1, 40, 0.2, MotionFamily::Clasp);
    MotionSequence b = synth(2, 40, 0.9, MotionFamily::Tutting);
    Eigen::VectorXd fa = statistical_featurizer(a, tpls);
    Eigen::VectorXd fb = statistical_featurizer(b, tpls);
    REQUIRE(fa.size() == 2 * kGlobalWidth);
    REQUIRE(fa.size() == 744);
    CHECK((fa - fb).norm() > 1e-6);
    // deterministic
    CHECK((fa - statistical_featurizer(a, tpls)).norm() == 0.0);
}
