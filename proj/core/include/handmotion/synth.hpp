#pragma once

#include <cstdint>

#include "handmotion/representation.hpp"

namespace handmotion {

enum class MotionFamily { Clasp, Tutting, ApproachRetreat };

struct SynthConfig {
    std::uint64_t seed = 0;
    int frames = 120;
    double interaction_intensity = 0.5;  // in [0, 1]
    MotionFamily family = MotionFamily::Clasp;
};

/// Deterministic procedural two-hand sequence: sinusoidal approach/retreat
/// wrist trajectories, phase-offset finger curls. Intensity 0 keeps the
/// hands > 0.1 m apart; intensity > 0.5 guarantees a frame with inter-hand
/// joint distance below the default contact threshold.
MotionSequence synth_sequence(const SynthConfig& cfg, const HandTemplates& tpls);

}  // namespace handmotion
