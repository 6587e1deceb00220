#include "handmotion/metrics.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

namespace handmotion {

namespace {

/// Kahan compensated accumulator; keeps frame reductions order-independent
/// at full precision.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

std::vector<FrameJoints> palm_frames(const MotionSequence& seq, const HandTemplates& tpls) {
    std::vector<FrameJoints> out;
    out.reserve(seq.frames.size());
    for (int n = 0; n < seq.frame_count(); ++n) {
        FrameJoints fj = frame_joints(seq, tpls, n);
        out.push_back({palm_sample(fj.left), palm_sample(fj.right)});
    }
    return out;
}

double direction_weight(const Vec3& d_pred, const Vec3& d_gt, double n_pred, double n_gt,
                        const ContactParams& p) {
    if (n_pred >= p.threshold || n_gt >= p.threshold) return 1.0;
    if (n_pred <= 1e-9 || n_gt <= 1e-9) return 1.0;
    Vec3 u = d_pred * (1.0 / n_pred);
    Vec3 v = d_gt * (1.0 / n_gt);
    if (p.direction_weight == DirectionWeight::Cross) return 1.0 + u.cross(v).norm();
    return 2.0 - u.dot(v);
}

}  // namespace

DirectedDistanceMatrix directed_distance_matrix(const JointSet& left25,
                                                const JointSet& right25) {
    if (left25.count() != kPalmJointCount || right25.count() != kPalmJointCount)
        throw std::invalid_argument("directed_distance_matrix expects 25-joint sets");
    DirectedDistanceMatrix d;
    for (int i = 0; i < kPalmJointCount; ++i)
        for (int j = 0; j < kPalmJointCount; ++j) {
            d.vectors[i][j] = right25.positions[j] - left25.positions[i];
            d.norms[i][j] = d.vectors[i][j].norm();
        }
    return d;
}

std::array<std::array<double, kPalmJointCount>, kPalmJointCount> contact_potential(
    const DirectedDistanceMatrix& d, const ContactParams& p) {
    if (p.threshold <= 0.0) throw std::invalid_argument("contact threshold must be positive");
    std::array<std::array<double, kPalmJointCount>, kPalmJointCount> out{};
    for (int i = 0; i < kPalmJointCount; ++i)
        for (int j = 0; j < kPalmJointCount; ++j) {
            double gap = p.threshold - d.norms[i][j];
            out[i][j] = gap > 0.0 ? 0.5 * p.stiffness * gap * gap : 0.0;
        }
    return out;
}

double interaction_loss(const std::vector<FrameJoints>& pred,
                        const std::vector<FrameJoints>& gt, const ContactParams& p) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("interaction_loss: frame count mismatch");
    if (pred.empty()) return 0.0;

    KahanSum total;
    for (size_t n = 0; n < pred.size(); ++n) {
        DirectedDistanceMatrix dp = directed_distance_matrix(pred[n].left, pred[n].right);
        DirectedDistanceMatrix dg = directed_distance_matrix(gt[n].left, gt[n].right);
        auto pp = contact_potential(dp, p);
        auto pg = contact_potential(dg, p);
        KahanSum frame;
        for (int i = 0; i < kPalmJointCount; ++i)
            for (int j = 0; j < kPalmJointCount; ++j) {
                double diff = std::abs(pp[i][j] - pg[i][j]);
                if (diff == 0.0) continue;
                frame.add(diff * direction_weight(dp.vectors[i][j], dg.vectors[i][j],
                                                  dp.norms[i][j], dg.norms[i][j], p));
            }
        total.add(frame.sum);
    }
    return total.sum / static_cast<double>(pred.size());
}

double interaction_loss(const MotionSequence& pred, const MotionSequence& gt,
                        const HandTemplates& tpls, const ContactParams& p) {
    return interaction_loss(palm_frames(pred, tpls), palm_frames(gt, tpls), p);
}

double shape_loss(const MotionSequence& pred, const MotionSequence& gt,
                  const HandTemplates& tpls) {
    if (pred.frame_count() != gt.frame_count())
        throw std::invalid_argument("shape_loss: frame count mismatch");
    if (pred.frames.empty()) return 0.0;

    KahanSum total;
    for (int n = 0; n < pred.frame_count(); ++n) {
        FrameJoints pj = frame_joints(pred, tpls, n);
        FrameJoints gj = frame_joints(gt, tpls, n);
        auto pl = bone_lengths(pj.left, tpls.left);
        auto pr = bone_lengths(pj.right, tpls.right);
        auto gl = bone_lengths(gj.left, tpls.left);
        auto gr = bone_lengths(gj.right, tpls.right);
        KahanSum frame;
        for (int b = 0; b < kBoneCount; ++b) {
            frame.add(std::abs(pl[b] - pr[b]));
            frame.add(std::abs(pl[b] - gl[b]));
            frame.add(std::abs(pr[b] - gr[b]));
        }
        total.add(frame.sum);
    }
    return total.sum / static_cast<double>(pred.frame_count());
}

double sdf_penetration(const MotionSequence& seq, const HandTemplates& tpls, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("sdf radius must be positive");
    if (seq.frames.empty()) throw std::invalid_argument("empty sequence");

    auto bones_of = [&](const JointSet& joints21, const SkeletonTemplate& tpl) {
        std::vector<Capsule> caps;
        caps.reserve(kBoneCount);
        for (int j = 1; j < kJointCount; ++j)
            caps.push_back({joints21.positions[tpl.parents[j]], joints21.positions[j], radius});
        return caps;
    };
    auto depth_sum = [](const JointSet& points, const std::vector<Capsule>& caps) {
        KahanSum s;
        for (const Vec3& p : points.positions) {
            double sdf = std::numeric_limits<double>::infinity();
            for (const Capsule& c : caps) sdf = std::min(sdf, capsule_signed_distance(p, c));
            if (sdf < 0.0) s.add(-sdf);
        }
        return s.sum;
    };

    KahanSum total;
    int penetrating = 0;
    for (int n = 0; n < seq.frame_count(); ++n) {
        FrameJoints fj = frame_joints(seq, tpls, n);
        auto left_caps = bones_of(fj.left, tpls.left);
        auto right_caps = bones_of(fj.right, tpls.right);
        double phi = depth_sum(palm_sample(fj.left), right_caps) +
                     depth_sum(palm_sample(fj.right), left_caps);
        if (phi > 0.0) {
            total.add(phi);
            ++penetrating;
        }
    }
    return penetrating > 0 ? total.sum / penetrating : 0.0;
}

FeatureStats feature_stats(const Eigen::MatrixXd& features) {
    if (features.rows() < 1) throw std::invalid_argument("feature_stats: no rows");
    FeatureStats s;
    s.mean = features.colwise().mean();
    Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
    s.covariance = centered.transpose() * centered / static_cast<double>(features.rows());
    return s;
}

double frechet_distance(const FeatureStats& a, const FeatureStats& b) {
    if (a.mean.size() != b.mean.size())
        throw std::invalid_argument("frechet_distance: dimension mismatch");

    auto psd_sqrt = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
        double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
        if (eig.eigenvalues().minCoeff() < -1e-6 * scale)
            throw std::invalid_argument("covariance is not positive semidefinite");
        Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return Eigen::MatrixXd(eig.eigenvectors() * clipped.asDiagonal() *
                               eig.eigenvectors().transpose());
    };

    Eigen::MatrixXd sqrt_a = psd_sqrt(a.covariance);
    Eigen::MatrixXd inner = sqrt_a * b.covariance * sqrt_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner);
    double trace_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double mean_term = (a.mean - b.mean).squaredNorm();
    return mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * trace_sqrt;
}

double diversity(const Eigen::MatrixXd& features, int subset, std::uint64_t seed) {
    int m = static_cast<int>(features.rows());
    if (subset < 1) throw std::invalid_argument("diversity: subset must be positive");
    if (m < 2 * subset)
        throw std::invalid_argument("diversity: need at least 2*subset feature rows, have " +
                                    std::to_string(m));
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    KahanSum s;
    for (int k = 0; k < subset; ++k)
        s.add((features.row(idx[k]) - features.row(idx[subset + k])).norm());
    return s.sum / subset;
}

Eigen::VectorXd statistical_featurizer(const MotionSequence& seq, const HandTemplates& tpls) {
    RepMatrix rep = encode_global(seq, tpls);
    Eigen::VectorXd mean = rep.colwise().mean();
    Eigen::MatrixXd centered = rep.rowwise() - mean.transpose();
    Eigen::VectorXd stddev =
        (centered.array().square().colwise().mean()).sqrt().matrix();
    Eigen::VectorXd out(2 * kGlobalWidth);
    out << mean, stddev;
    return out;
}

}  // namespace handmotion
