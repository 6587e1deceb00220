#include "handmotion/fitting.hpp"

#include <functional>

namespace handmotion {

namespace {

constexpr double kJacobianStep = 1e-6;

/// Damped Gauss-Newton around the current state: `residual` is evaluated at
/// an increment delta, `accept` folds an accepted increment into the state.
/// The squared residual norm is the objective; accepted steps never raise it.
bool lm_run(int dim, int max_iters, double tol,
            const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
            const std::function<void(const Eigen::VectorXd&)>& accept) {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
    double mu = 1e-4;

    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::VectorXd r0 = residual(zero);
        double f0 = r0.squaredNorm();
        if (f0 < tol) return true;

        Eigen::MatrixXd jac(r0.size(), dim);
        for (int k = 0; k < dim; ++k) {
            Eigen::VectorXd d = zero;
            d(k) = kJacobianStep;
            jac.col(k) = (residual(d) - r0) / kJacobianStep;
        }
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd g = jac.transpose() * r0;
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) return true;

        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += mu * (jtj.diagonal().array().abs() + 1e-12);
            Eigen::VectorXd step = damped.ldlt().solve(-g);
            double f1 = residual(step).squaredNorm();
            if (f1 < f0) {
                accept(step);
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
                if (f0 - f1 < tol * std::max(1.0, f0)) return true;
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) return true;  // stalled at a (local) minimum
    }
    return false;
}

Quat procrustes_rotation(const Eigen::Matrix3Xd& rest_cloud, const Eigen::Matrix3Xd& obs_cloud) {
    Eigen::Vector3d rc = rest_cloud.rowwise().mean();
    Eigen::Vector3d oc = obs_cloud.rowwise().mean();
    Eigen::Matrix3d h =
        (obs_cloud.colwise() - oc) * (rest_cloud.colwise() - rc).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    Eigen::Quaterniond eq(r);
    return Quat(eq.w(), eq.x(), eq.y(), eq.z());
}

Vec3 vec3_of(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

/// Stacked joint residual (target - FK), its norm, and the L_total objective
/// value ||r||_2 + lambda * sum |theta_l|^2.
struct FrameObjective {
    const SkeletonTemplate& tpl;
    const JointSet& target;
    double lambda;

    Eigen::VectorXd joint_residual(const HandParams& p) const {
        JointSet fk = forward_kinematics(tpl, p);
        Eigen::VectorXd r(3 * kJointCount);
        for (int j = 0; j < kJointCount; ++j) {
            Vec3 d = target.positions[j] - fk.positions[j];
            r.segment<3>(3 * j) << d.x, d.y, d.z;
        }
        return r;
    }

    /// LM residual vector whose squared norm equals L_total: the joint block
    /// is scaled by 1/sqrt(||r||) so its squared norm is ||r||_2.
    Eigen::VectorXd lm_residual(const HandParams& p) const {
        Eigen::VectorXd r = joint_residual(p);
        double nr = r.norm();
        double scale = nr > 1e-15 ? 1.0 / std::sqrt(nr) : 0.0;
        Eigen::VectorXd rho(r.size() + 3 * kRotatedJointCount);
        rho.head(r.size()) = r * scale;
        for (int k = 0; k < kRotatedJointCount; ++k) {
            Vec3 aa = p.local_rots[k].to_axis_angle();
            rho.segment<3>(r.size() + 3 * k) << aa.x, aa.y, aa.z;
        }
        rho.tail(3 * kRotatedJointCount) *= std::sqrt(lambda);
        return rho;
    }
};

HandParams with_pose_increment(const HandParams& base, const Eigen::VectorXd& d) {
    HandParams p = base;
    p.translation += Vec3{d(0), d(1), d(2)};
    p.global_rot = quat_mul(Quat::from_axis_angle({d(3), d(4), d(5)}), base.global_rot);
    for (int k = 0; k < kRotatedJointCount; ++k) {
        Vec3 w{d(6 + 3 * k), d(7 + 3 * k), d(8 + 3 * k)};
        p.local_rots[k] = quat_mul(Quat::from_axis_angle(w), base.local_rots[k]);
    }
    return p;
}

}  // namespace

Eigen::Vector2d CameraCalib::project(const Eigen::Vector3d& world_point) const {
    Eigen::Vector3d p = intrinsics * (rotation * world_point + translation);
    return {p.x() / p.z(), p.y() / p.z()};
}

TriangulationResult triangulate_point(const std::vector<Observation2D>& obs,
                                      const std::vector<CameraCalib>& cams,
                                      double conf_threshold) {
    std::vector<std::pair<const CameraCalib*, Eigen::Vector2d>> views;
    for (const auto& o : obs) {
        if (o.confidence < conf_threshold) continue;
        for (const auto& c : cams)
            if (c.id == o.camera_id) {
                views.emplace_back(&c, o.point);
                break;
            }
    }
    int m = static_cast<int>(views.size());
    if (m < 2)
        throw InsufficientViewsError("triangulation needs at least 2 views with confidence >= " +
                                     std::to_string(conf_threshold) + ", have " +
                                     std::to_string(m));

    Eigen::MatrixXd a(2 * m, 4);
    for (int i = 0; i < m; ++i) {
        const CameraCalib& c = *views[i].first;
        Eigen::Matrix<double, 3, 4> proj;
        proj.leftCols<3>() = c.intrinsics * c.rotation;
        proj.col(3) = c.intrinsics * c.translation;
        a.row(2 * i) = views[i].second.x() * proj.row(2) - proj.row(0);
        a.row(2 * i + 1) = views[i].second.y() * proj.row(2) - proj.row(1);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv(2) < 1e-10 * sv(0))
        throw DegenerateGeometryError("rank-deficient triangulation system");
    Eigen::Vector4d h = svd.matrixV().col(3);
    if (std::abs(h(3)) < 1e-12 * h.head<3>().norm())
        throw DegenerateGeometryError("triangulated point at infinity");
    Eigen::Vector3d x = h.head<3>() / h(3);

    auto reprojection = [&](const Eigen::Vector3d& p) {
        Eigen::VectorXd r(2 * m);
        for (int i = 0; i < m; ++i)
            r.segment<2>(2 * i) = views[i].first->project(p) - views[i].second;
        return r;
    };

    // one Gauss-Newton step on the reprojection residual
    Eigen::VectorXd r0 = reprojection(x);
    Eigen::MatrixXd jac(2 * m, 3);
    for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d dx = Eigen::Vector3d::Zero();
        dx(k) = 1e-7;
        jac.col(k) = (reprojection(x + dx) - r0) / 1e-7;
    }
    Eigen::Matrix3d jtj = jac.transpose() * jac;
    if (std::abs(jtj.determinant()) > 1e-18) {
        Eigen::Vector3d refined = x - jtj.ldlt().solve(jac.transpose() * r0);
        if (reprojection(refined).squaredNorm() < r0.squaredNorm()) x = refined;
    }

    Eigen::VectorXd r = reprojection(x);
    TriangulationResult out;
    out.point = x;
    out.views_used = m;
    double sq = 0.0;
    for (int i = 0; i < m; ++i) sq += r.segment<2>(2 * i).squaredNorm();
    out.residual = std::sqrt(sq / m);
    return out;
}

FitResult fit_hand(const std::vector<JointSet>& targets, const SkeletonTemplate& tpl,
                   const FitConfig& cfg) {
    if (targets.empty()) throw std::invalid_argument("fit_hand: no targets");
    if (cfg.max_iters < 1 || cfg.tol <= 0.0)
        throw std::invalid_argument("fit_hand: invalid config");
    int n_frames = static_cast<int>(targets.size());

    const int proximal[6] = {0, 1, 5, 9, 13, 17};
    std::array<double, kShapeDim> beta{};
    JointSet rest = rest_joints(tpl, beta);
    Eigen::Matrix3Xd rest_cloud(3, 6);
    for (int k = 0; k < 6; ++k) {
        Vec3 d = rest.positions[proximal[k]] - rest.positions[0];
        rest_cloud.col(k) << d.x, d.y, d.z;
    }

    FitResult result;
    result.params.resize(n_frames);
    result.residuals.assign(n_frames, 0.0);

    // initialization: rigid Procrustes of the proximal joints
    for (int n = 0; n < n_frames; ++n) {
        if (static_cast<int>(targets[n].positions.size()) != kJointCount)
            throw std::invalid_argument("fit_hand: targets must have 21 joints");
        HandParams p;
        if (cfg.warm_start && n > 0) {
            p = result.params[n - 1];
        } else {
            Eigen::Matrix3Xd obs(3, 6);
            for (int k = 0; k < 6; ++k) {
                Vec3 d = targets[n].positions[proximal[k]] - targets[n].positions[0];
                obs.col(k) << d.x, d.y, d.z;
            }
            p.global_rot = procrustes_rotation(rest_cloud, obs);
            Vec3 wrist = targets[n].positions[0];
            p.translation = wrist - quat_rotate(p.global_rot, rest.positions[0]);
        }
        result.params[n] = p;
    }

    const int pose_dim = 6 + 3 * kRotatedJointCount;
    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        // per-frame pose stage (warm start makes this sequential by contract)
        bool all_converged = true;
        for (int n = 0; n < n_frames; ++n) {
            if (cfg.warm_start && n > 0) {
                HandParams prev = result.params[n - 1];
                prev.beta = beta;
                FrameObjective probe{tpl, targets[n], cfg.lambda};
                HandParams& cur = result.params[n];
                cur.beta = beta;
                if (probe.lm_residual(prev).squaredNorm() <
                    probe.lm_residual(cur).squaredNorm())
                    cur = prev;
            }
            HandParams& p = result.params[n];
            p.beta = beta;
            FrameObjective obj{tpl, targets[n], cfg.lambda};
            bool ok = lm_run(
                pose_dim, cfg.max_iters, cfg.tol,
                [&](const Eigen::VectorXd& d) { return obj.lm_residual(with_pose_increment(p, d)); },
                [&](const Eigen::VectorXd& d) { p = with_pose_increment(p, d); });
            all_converged = all_converged && ok;
        }
        result.converged = all_converged;

        // shared-beta stage: least squares over all frames, poses fixed
        auto beta_residual = [&](const Eigen::VectorXd& d) {
            Eigen::VectorXd rho(3 * kJointCount * n_frames);
            for (int n = 0; n < n_frames; ++n) {
                HandParams p = result.params[n];
                for (int b = 0; b < kShapeDim; ++b)
                    p.beta[b] = std::clamp(beta[b] + d(b), -5.0, 5.0);
                FrameObjective obj{tpl, targets[n], cfg.lambda};
                Eigen::VectorXd r = obj.joint_residual(p);
                double nr = r.norm();
                double scale = nr > 1e-15 ? 1.0 / std::sqrt(nr) : 0.0;
                rho.segment(3 * kJointCount * n, 3 * kJointCount) = r * scale;
            }
            return rho;
        };
        lm_run(kShapeDim, cfg.max_iters, cfg.tol, beta_residual,
               [&](const Eigen::VectorXd& d) {
                   for (int b = 0; b < kShapeDim; ++b)
                       beta[b] = std::clamp(beta[b] + d(b), -5.0, 5.0);
               });
        for (auto& p : result.params) p.beta = beta;
    }

    for (int n = 0; n < n_frames; ++n) {
        FrameObjective obj{tpl, targets[n], cfg.lambda};
        result.residuals[n] =
            std::sqrt(obj.joint_residual(result.params[n]).squaredNorm() / kJointCount);
    }
    return result;
}

}  // namespace handmotion
