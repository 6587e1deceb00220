#include "handmotion/synth.hpp"

#include <random>
#include <stdexcept>

namespace handmotion {

namespace {

constexpr int kMiddleTip = 12;  // closest-approach anchor joint

struct FamilyProfile {
    double curl_freq;
    double approach_cycles;
    double wrist_swing;
};

FamilyProfile profile_of(MotionFamily family) {
    switch (family) {
        case MotionFamily::Clasp: return {1.0, 1.0, 0.15};
        case MotionFamily::Tutting: return {3.0, 1.0, 0.25};
        case MotionFamily::ApproachRetreat: return {0.5, 2.0, 0.10};
    }
    throw std::invalid_argument("unknown motion family");
}

}  // namespace

MotionSequence synth_sequence(const SynthConfig& cfg, const HandTemplates& tpls) {
    if (cfg.frames < 10)
        throw std::invalid_argument("synthetic sequences need at least 10 frames");
    if (cfg.interaction_intensity < 0.0 || cfg.interaction_intensity > 1.0)
        throw std::invalid_argument("interaction_intensity must lie in [0,1]");

    const double intensity = cfg.interaction_intensity;
    const int n_frames = cfg.frames;
    const FamilyProfile prof = profile_of(cfg.family);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // seeded per-finger curl phases and amplitudes
    double phase[2][15], amp[2][15];
    const double curl_base = 0.15 + 0.55 * intensity;
    for (int h = 0; h < 2; ++h)
        for (int k = 0; k < 15; ++k) {
            phase[h][k] = 2.0 * M_PI * unit(rng);
            amp[h][k] = curl_base * (0.6 + 0.4 * unit(rng));
        }
    double base_yaw = 0.4 * (unit(rng) - 0.5);
    double base_pitch = 0.4 * (unit(rng) - 0.5);
    double drift_phase = 2.0 * M_PI * unit(rng);

    // closest fingertip gap over the sequence: wide at intensity 0, inside
    // the default contact threshold once intensity passes 0.5
    const double gap_min = std::max(0.015, 0.12 * (1.0 - 2.0 * intensity));
    const double gap_span = 0.10;

    MotionSequence seq;
    seq.fps = 30.0;
    seq.frames.resize(n_frames);

    for (int n = 0; n < n_frames; ++n) {
        double u = static_cast<double>(n) / std::max(1, n_frames - 1);

        HandParams left;
        left.global_rot = quat_mul(
            Quat::from_axis_angle({0.0, base_pitch, base_yaw}),
            Quat::from_axis_angle({0.0, 0.0, prof.wrist_swing * std::sin(2.0 * M_PI * u)}));
        left.translation = {0.02 * std::sin(2.0 * M_PI * u + drift_phase),
                            0.01 * std::cos(2.0 * M_PI * u + drift_phase), 0.0};

        HandParams right;
        right.global_rot = quat_mul(
            Quat::from_axis_angle({0.0, 0.0, M_PI}),  // fingers facing the left hand
            Quat::from_axis_angle({prof.wrist_swing * 0.5 * std::sin(2.0 * M_PI * u + 1.3),
                                   0.0, 0.0}));

        for (int h = 0; h < 2; ++h) {
            HandParams& p = h == 0 ? left : right;
            for (int k = 0; k < 15; ++k) {
                double angle =
                    amp[h][k] * (0.5 + 0.5 * std::sin(2.0 * M_PI * prof.curl_freq * u +
                                                      phase[h][k]));
                // thumb rotations hinge about x, other fingers about y
                Vec3 axis = (k < 3) ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
                p.local_rots[k] = Quat::from_axis_angle(axis * angle);
            }
        }

        // place the right hand so its middle fingertip sits exactly gap(u)
        // beyond the left middle fingertip along +x
        double gap = gap_min + gap_span * (0.5 + 0.5 * std::cos(2.0 * M_PI *
                                                                prof.approach_cycles * u));
        JointSet left_joints = forward_kinematics(tpls.left, left);
        HandParams right_probe = right;
        right_probe.translation = {};
        JointSet right_rel = forward_kinematics(tpls.right, right_probe);
        Vec3 target = left_joints.positions[kMiddleTip] + Vec3{gap, 0.0, 0.0};
        right.translation = target - right_rel.positions[kMiddleTip];

        seq.frames[n] = {left, right};
    }
    return seq;
}

}  // namespace handmotion
