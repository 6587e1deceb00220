#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "handmotion/representation.hpp"

namespace handmotion {

/// Cosine DDPM schedule: alpha_bar[0] = 1, strictly decreasing, with
/// beta[t-1] = 1 - alpha_bar[t]/alpha_bar[t-1] clipped at 0.999.
struct NoiseSchedule {
    int steps = 0;               // T
    Eigen::VectorXd alpha_bar;   // T+1 entries, index 0 = 1
    Eigen::VectorXd beta;        // T entries, beta(t-1) is for timestep t

    std::uint64_t hash() const;
};

NoiseSchedule cosine_schedule(int steps);

struct Unconstrained {};
struct InbetweenCondition {
    Eigen::MatrixXd head;  // 5 x D ground-truth rep rows
    Eigen::MatrixXd tail;  // 5 x D
};
struct TrajectoryCondition {
    Eigen::MatrixXd root_channels;  // N x 14, local-rep wrist velocity channels
};
using Condition = std::variant<Unconstrained, InbetweenCondition, TrajectoryCondition>;

inline constexpr int kConditionFrames = 5;

/// x0-predicting denoiser contract.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Eigen::MatrixXd denoise(const Eigen::MatrixXd& x_t, int t,
                                    const Condition& cond) const = 0;
};

/// Forward noising: sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Eigen::MatrixXd q_sample(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& eps,
                         const NoiseSchedule& s);

/// Inpainting-by-replacement conditioning: diffused ground truth rows or
/// channels at t > 0, exact ground truth at t = 0.
Eigen::MatrixXd apply_condition(const Eigen::MatrixXd& x, int t, const Condition& cond,
                                const NoiseSchedule& s, std::mt19937_64& rng);

/// Full reverse chain (posterior sampling) returning the final x0-hat with
/// conditioning applied.
Eigen::MatrixXd ddpm_sample(const Denoiser& denoiser, const NoiseSchedule& s, int n_frames,
                            int width, const Condition& cond, std::uint64_t seed);

/// Closed-form posterior-mean denoiser for Gaussian data N(mu, sigma).
class GaussianOracleDenoiser final : public Denoiser {
public:
    GaussianOracleDenoiser(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                           NoiseSchedule schedule);
    Eigen::MatrixXd denoise(const Eigen::MatrixXd& x_t, int t,
                            const Condition& cond) const override;

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd eigvecs_;
    Eigen::VectorXd eigvals_;
    NoiseSchedule schedule_;
};

/// Per-timestep-bucket affine maps x_t -> x0-hat, ridge-fit on data.
class LinearDenoiser final : public Denoiser {
public:
    LinearDenoiser(std::vector<int> bucket_upper_bounds, std::vector<Eigen::MatrixXd> a,
                   std::vector<Eigen::VectorXd> b, std::uint64_t schedule_hash);

    Eigen::MatrixXd denoise(const Eigen::MatrixXd& x_t, int t,
                            const Condition& cond) const override;

    int bucket_of(int t) const;
    int bucket_count() const { return static_cast<int>(a_.size()); }
    std::uint64_t schedule_hash() const { return schedule_hash_; }
    const Eigen::MatrixXd& weights(int bucket) const { return a_[bucket]; }
    const Eigen::VectorXd& bias(int bucket) const { return b_[bucket]; }

    void save(const std::string& path) const;
    static LinearDenoiser load(const std::string& path);

private:
    std::vector<int> bucket_upper_bounds_;  // inclusive, ascending, last = T
    std::vector<Eigen::MatrixXd> a_;
    std::vector<Eigen::VectorXd> b_;
    std::uint64_t schedule_hash_ = 0;
};

struct LinearFitConfig {
    int buckets = 10;
    double ridge = 1e-6;
    int draws_per_frame = 8;  // (t, eps) samples per data row
    std::uint64_t seed = 0;
};

/// Ridge least squares from diffused frames back to their clean rows,
/// one affine map per timestep bucket.
LinearDenoiser fit_linear_denoiser(const std::vector<Eigen::MatrixXd>& data,
                                   const NoiseSchedule& s, const LinearFitConfig& cfg);

}  // namespace handmotion
