#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "handmotion/representation.hpp"

namespace handmotion {

enum class MotionLayout : std::uint16_t { Params = 0, Local = 1, Global = 2 };

/// Per-frame parameter width in the Params layout:
/// 2 hands x (beta 10 + global quat 4 + translation 3 + 15 local quats 60).
inline constexpr int kParamsWidth = 154;

int layout_width(MotionLayout layout);

/// "HDMO" motion file: magic, version, layout, N, D, fps, N*D little-endian
/// 32-bit float payload.
struct MotionFile {
    std::uint16_t version = 1;
    MotionLayout layout = MotionLayout::Params;
    std::uint32_t n_frames = 0;
    std::uint32_t width = 0;
    float fps = 30.0f;
    std::vector<float> payload;  // n_frames * width
};

struct MotionFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadMagicError : MotionFileError {
    using MotionFileError::MotionFileError;
};
struct VersionError : MotionFileError {
    using MotionFileError::MotionFileError;
};
struct TruncatedError : MotionFileError {
    using MotionFileError::MotionFileError;
};

MotionFile read_motion(const std::string& path);
/// Atomic write (temp file + rename).
void write_motion(const std::string& path, const MotionFile& file);

MotionFile motion_file_from_sequence(const MotionSequence& seq);
MotionSequence sequence_from_motion_file(const MotionFile& file);

MotionFile motion_file_from_rep(const RepMatrix& rep, MotionLayout layout, double fps = 30.0);
RepMatrix rep_from_motion_file(const MotionFile& file);

}  // namespace handmotion
