#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "handmotion/skeleton.hpp"

namespace handmotion {

struct CameraCalib {
    std::string id;
    Eigen::Matrix3d intrinsics;   // upper-triangular K
    Eigen::Matrix3d rotation;     // world -> camera
    Eigen::Vector3d translation;  // meters

    Eigen::Vector2d project(const Eigen::Vector3d& world_point) const;
};

struct Observation2D {
    std::string camera_id;
    Eigen::Vector2d point;  // pixels
    double confidence = 1.0;
};

struct InsufficientViewsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateGeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TriangulationResult {
    Eigen::Vector3d point;
    double residual = 0.0;  // RMS reprojection error, pixels
    int views_used = 0;
};

/// Homogeneous DLT over all observations with confidence >= threshold,
/// refined by one Gauss-Newton reprojection step.
TriangulationResult triangulate_point(const std::vector<Observation2D>& obs,
                                      const std::vector<CameraCalib>& cams,
                                      double conf_threshold = 0.95);

struct FitConfig {
    double lambda = 1e-3;  // pose regularizer weight
    int max_iters = 60;
    double tol = 1e-12;
    bool warm_start = true;
    int outer_iters = 3;   // alternations between per-frame pose and shared beta
};

struct FitResult {
    std::vector<HandParams> params;
    std::vector<double> residuals;  // per-frame RMS joint error, meters
    bool converged = true;
};

/// Levenberg-Marquardt fit of (shared beta, per-frame pose) to 3D joint
/// targets, minimizing ||J_gt - J(beta,theta)||_2 + lambda ||theta_l||^2
/// per frame (theta_l measured in axis-angle).
FitResult fit_hand(const std::vector<JointSet>& targets, const SkeletonTemplate& tpl,
                   const FitConfig& cfg);

}  // namespace handmotion
