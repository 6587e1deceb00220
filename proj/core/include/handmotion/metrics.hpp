#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "handmotion/representation.hpp"
#include "handmotion/skeleton.hpp"

namespace handmotion {

/// 25x25 directed inter-hand joint offsets, vectors[i][j] = right_j - left_i.
struct DirectedDistanceMatrix {
    std::array<std::array<Vec3, kPalmJointCount>, kPalmJointCount> vectors{};
    std::array<std::array<double, kPalmJointCount>, kPalmJointCount> norms{};
};

enum class DirectionWeight {
    Dot,    // w = 2 - cos(angle between directed distances), range [1,3]
    Cross,  // w = 1 + |d_pred x d_gt|, literal reading
};

struct ContactParams {
    double stiffness = 1.0;   // K
    double threshold = 0.02;  // tau, meters
    DirectionWeight direction_weight = DirectionWeight::Dot;
};

DirectedDistanceMatrix directed_distance_matrix(const JointSet& left25,
                                                const JointSet& right25);

/// Spring contact energy per entry: 1/2 K relu(tau - |d|)^2.
std::array<std::array<double, kPalmJointCount>, kPalmJointCount> contact_potential(
    const DirectedDistanceMatrix& d, const ContactParams& p);

/// Contact-potential discrepancy between predicted and ground-truth frames,
/// weighted by directed-distance disagreement; sum over matrix entries,
/// mean over frames.
double interaction_loss(const std::vector<FrameJoints>& pred,
                        const std::vector<FrameJoints>& gt, const ContactParams& p);
double interaction_loss(const MotionSequence& pred, const MotionSequence& gt,
                        const HandTemplates& tpls, const ContactParams& p);

/// Bone-length L1 mismatch: left-vs-right of the prediction plus
/// prediction-vs-ground-truth, mean over frames.
double shape_loss(const MotionSequence& pred, const MotionSequence& gt,
                  const HandTemplates& tpls);

/// Mean positive penetration depth over penetrating frames: each hand's
/// 25 joints against the capsule union on the other hand's 20 bones.
double sdf_penetration(const MotionSequence& seq, const HandTemplates& tpls,
                       double radius);

struct FeatureStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Gaussian fit (mean + covariance, normalized by M) of feature rows.
FeatureStats feature_stats(const Eigen::MatrixXd& features);

/// Frechet distance |mu_a - mu_b|^2 + Tr(Ca + Cb - 2 sqrt(Ca Cb)); the matrix
/// square root is taken via symmetric eigendecomposition of
/// sqrt(Ca) Cb sqrt(Ca), with eigenvalues clipped at zero.
double frechet_distance(const FeatureStats& a, const FeatureStats& b);

/// Mean L2 distance between element-wise pairs of two disjoint seeded random
/// subsets of the feature rows; requires rows >= 2 * subset.
double diversity(const Eigen::MatrixXd& features, int subset, std::uint64_t seed);

/// Deterministic stand-in for a learned feature extractor: per-channel mean
/// and standard deviation of the global representation (d = 744).
Eigen::VectorXd statistical_featurizer(const MotionSequence& seq, const HandTemplates& tpls);

}  // namespace handmotion
