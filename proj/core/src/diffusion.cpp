#include "handmotion/diffusion.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts unsupported");

namespace handmotion {

namespace {

constexpr char kModelMagic[4] = {'H', 'D', 'L', 'D'};
constexpr std::uint16_t kModelVersion = 1;

Eigen::MatrixXd standard_normal(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

void check_timestep(int t, const NoiseSchedule& s) {
    if (t < 0 || t > s.steps)
        throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                                std::to_string(s.steps) + "]");
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("truncated denoiser model file");
    return v;
}

}  // namespace

std::uint64_t NoiseSchedule::hash() const {
    // FNV-1a over the alpha_bar bytes plus the step count
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const unsigned char* p, size_t n) {
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    std::uint32_t t = static_cast<std::uint32_t>(steps);
    mix(reinterpret_cast<const unsigned char*>(&t), sizeof(t));
    mix(reinterpret_cast<const unsigned char*>(alpha_bar.data()),
        sizeof(double) * alpha_bar.size());
    return h;
}

NoiseSchedule cosine_schedule(int steps) {
    if (steps < 1) throw std::invalid_argument("schedule needs at least 1 step");
    constexpr double kOffset = 0.008;
    constexpr double kBetaClip = 0.999;

    auto f = [&](double t) {
        double v = std::cos((t / steps + kOffset) / (1.0 + kOffset) * M_PI / 2.0);
        return v * v;
    };

    NoiseSchedule s;
    s.steps = steps;
    s.alpha_bar.resize(steps + 1);
    s.beta.resize(steps);
    s.alpha_bar(0) = 1.0;
    double f0 = f(0.0);
    for (int t = 1; t <= steps; ++t) {
        double target = f(static_cast<double>(t)) / f0;
        double beta = 1.0 - target / s.alpha_bar(t - 1);
        beta = std::min(beta, kBetaClip);
        s.beta(t - 1) = beta;
        // rebuild alpha_bar from the clipped beta so the two stay consistent
        s.alpha_bar(t) = s.alpha_bar(t - 1) * (1.0 - beta);
    }
    return s;
}

Eigen::MatrixXd q_sample(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& eps,
                         const NoiseSchedule& s) {
    check_timestep(t, s);
    if (eps.rows() != x0.rows() || eps.cols() != x0.cols())
        throw std::invalid_argument("q_sample: eps shape mismatch");
    double ab = s.alpha_bar(t);
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::MatrixXd apply_condition(const Eigen::MatrixXd& x, int t, const Condition& cond,
                                const NoiseSchedule& s, std::mt19937_64& rng) {
    check_timestep(t, s);
    Eigen::MatrixXd out = x;
    int n = static_cast<int>(x.rows());

    if (const auto* ib = std::get_if<InbetweenCondition>(&cond)) {
        if (n < 2 * kConditionFrames)
            throw std::invalid_argument("in-betweening needs at least " +
                                        std::to_string(2 * kConditionFrames) + " frames");
        if (ib->head.rows() != kConditionFrames || ib->tail.rows() != kConditionFrames ||
            ib->head.cols() != x.cols() || ib->tail.cols() != x.cols())
            throw std::invalid_argument("in-betweening condition shape mismatch");
        Eigen::MatrixXd head = ib->head;
        Eigen::MatrixXd tail = ib->tail;
        if (t > 0) {
            head = q_sample(head, t, standard_normal(kConditionFrames, (int)x.cols(), rng), s);
            tail = q_sample(tail, t, standard_normal(kConditionFrames, (int)x.cols(), rng), s);
        }
        out.topRows(kConditionFrames) = head;
        out.bottomRows(kConditionFrames) = tail;
    } else if (const auto* tr = std::get_if<TrajectoryCondition>(&cond)) {
        if (tr->root_channels.rows() != n || tr->root_channels.cols() != 14)
            throw std::invalid_argument("trajectory condition must be N x 14");
        Eigen::MatrixXd chans = tr->root_channels;
        if (t > 0) chans = q_sample(chans, t, standard_normal(n, 14, rng), s);
        for (int k = 0; k < 14; ++k) out.col(kTrajectoryChannels[k]) = chans.col(k);
    }
    return out;
}

Eigen::MatrixXd ddpm_sample(const Denoiser& denoiser, const NoiseSchedule& s, int n_frames,
                            int width, const Condition& cond, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd x = standard_normal(n_frames, width, rng);

    for (int t = s.steps; t >= 1; --t) {
        x = apply_condition(x, t, cond, s, rng);
        Eigen::MatrixXd x0 = denoiser.denoise(x, t, cond);
        if (x0.rows() != x.rows() || x0.cols() != x.cols())
            throw std::runtime_error("denoiser output shape mismatch at t=" + std::to_string(t) +
                                     ": got " + std::to_string(x0.rows()) + "x" +
                                     std::to_string(x0.cols()));
        if (t == 1) {
            x = x0;
            break;
        }
        double ab_t = s.alpha_bar(t);
        double ab_prev = s.alpha_bar(t - 1);
        double beta_t = s.beta(t - 1);
        double alpha_t = 1.0 - beta_t;
        double c0 = std::sqrt(ab_prev) * beta_t / (1.0 - ab_t);
        double ct = std::sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t);
        double var = (1.0 - ab_prev) / (1.0 - ab_t) * beta_t;
        x = c0 * x0 + ct * x +
            std::sqrt(var) * standard_normal(n_frames, width, rng);
    }
    return apply_condition(x, 0, cond, s, rng);
}

GaussianOracleDenoiser::GaussianOracleDenoiser(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                                               NoiseSchedule schedule)
    : mu_(std::move(mu)), schedule_(std::move(schedule)) {
    if (sigma.rows() != mu_.size() || sigma.cols() != mu_.size())
        throw std::invalid_argument("sigma must be DxD for D = mu dimension");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale)
        throw std::invalid_argument("sigma is not positive semidefinite");
    eigvecs_ = eig.eigenvectors();
    eigvals_ = eig.eigenvalues().cwiseMax(0.0);
}

Eigen::MatrixXd GaussianOracleDenoiser::denoise(const Eigen::MatrixXd& x_t, int t,
                                                const Condition&) const {
    check_timestep(t, schedule_);
    double ab = schedule_.alpha_bar(t);
    double sq = std::sqrt(ab);
    // E[x0 | x_t] = mu + sqrt(ab) S (ab S + (1-ab) I)^-1 (x_t - sqrt(ab) mu)
    Eigen::VectorXd gains =
        (sq * eigvals_.array() / (ab * eigvals_.array() + (1.0 - ab))).matrix();
    Eigen::MatrixXd m = eigvecs_ * gains.asDiagonal() * eigvecs_.transpose();
    Eigen::MatrixXd centered = x_t.rowwise() - (sq * mu_).transpose();
    return (centered * m).rowwise() + mu_.transpose();
}

LinearDenoiser::LinearDenoiser(std::vector<int> bucket_upper_bounds,
                               std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b,
                               std::uint64_t schedule_hash)
    : bucket_upper_bounds_(std::move(bucket_upper_bounds)),
      a_(std::move(a)),
      b_(std::move(b)),
      schedule_hash_(schedule_hash) {
    if (bucket_upper_bounds_.size() != a_.size() || a_.size() != b_.size() || a_.empty())
        throw std::invalid_argument("inconsistent linear denoiser buckets");
}

int LinearDenoiser::bucket_of(int t) const {
    for (size_t i = 0; i < bucket_upper_bounds_.size(); ++i)
        if (t <= bucket_upper_bounds_[i]) return static_cast<int>(i);
    return static_cast<int>(bucket_upper_bounds_.size()) - 1;
}

Eigen::MatrixXd LinearDenoiser::denoise(const Eigen::MatrixXd& x_t, int t,
                                        const Condition&) const {
    int bucket = bucket_of(t);
    return (x_t * a_[bucket].transpose()).rowwise() + b_[bucket].transpose();
}

LinearDenoiser fit_linear_denoiser(const std::vector<Eigen::MatrixXd>& data,
                                   const NoiseSchedule& s, const LinearFitConfig& cfg) {
    if (data.size() < 2)
        throw std::invalid_argument("fit_linear_denoiser needs at least 2 training sequences");
    if (cfg.buckets < 1 || cfg.buckets > s.steps)
        throw std::invalid_argument("bucket count must be in [1, T]");
    if (cfg.ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");
    int d = static_cast<int>(data.front().cols());
    for (const auto& m : data)
        if (m.cols() != d) throw std::invalid_argument("training sequences disagree on width");

    std::vector<int> uppers(cfg.buckets);
    for (int i = 0; i < cfg.buckets; ++i)
        uppers[i] = static_cast<int>(std::llround(static_cast<double>(i + 1) * s.steps /
                                                  cfg.buckets));
    uppers.back() = s.steps;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::MatrixXd> a(cfg.buckets);
    std::vector<Eigen::VectorXd> b(cfg.buckets);

    int lower = 0;  // exclusive
    for (int bucket = 0; bucket < cfg.buckets; ++bucket) {
        int upper = uppers[bucket];
        std::uniform_int_distribution<int> t_draw(lower + 1, upper);

        long rows = 0;
        for (const auto& m : data) rows += m.rows();
        rows *= cfg.draws_per_frame;

        Eigen::MatrixXd x(rows, d + 1);
        Eigen::MatrixXd y(rows, d);
        long row = 0;
        for (const auto& m : data)
            for (int f = 0; f < m.rows(); ++f)
                for (int k = 0; k < cfg.draws_per_frame; ++k) {
                    int t = t_draw(rng);
                    double ab = s.alpha_bar(t);
                    double c0 = std::sqrt(ab), ce = std::sqrt(1.0 - ab);
                    for (int j = 0; j < d; ++j)
                        x(row, j) = c0 * m(f, j) + ce * normal(rng);
                    x(row, d) = 1.0;
                    y.row(row) = m.row(f);
                    ++row;
                }

        Eigen::MatrixXd gram = x.transpose() * x;
        gram.topLeftCorner(d, d).diagonal().array() += cfg.ridge;  // bias unregularized
        if (cfg.ridge == 0.0) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
            if (!lu.isInvertible())
                throw std::runtime_error(
                    "singular normal equations; increase ridge or training data");
        }
        Eigen::MatrixXd sol = gram.ldlt().solve(x.transpose() * y);  // (d+1) x d
        a[bucket] = sol.topRows(d).transpose();
        b[bucket] = sol.row(d).transpose();
        lower = upper;
    }
    return LinearDenoiser(std::move(uppers), std::move(a), std::move(b), s.hash());
}

void LinearDenoiser::save(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out.write(kModelMagic, 4);
        write_pod(out, kModelVersion);
        write_pod(out, schedule_hash_);
        write_pod(out, static_cast<std::uint32_t>(a_.size()));
        write_pod(out, static_cast<std::uint32_t>(a_.front().rows()));
        for (int u : bucket_upper_bounds_) write_pod(out, static_cast<std::int32_t>(u));
        for (size_t i = 0; i < a_.size(); ++i) {
            for (int r = 0; r < a_[i].rows(); ++r)
                for (int c = 0; c < a_[i].cols(); ++c)
                    write_pod(out, static_cast<float>(a_[i](r, c)));
            for (int r = 0; r < b_[i].size(); ++r)
                write_pod(out, static_cast<float>(b_[i](r)));
        }
        if (!out) throw std::runtime_error("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move " + tmp + " into place");
}

LinearDenoiser LinearDenoiser::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open denoiser model " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw std::runtime_error("not a denoiser model file: " + path);
    if (read_pod<std::uint16_t>(in) != kModelVersion)
        throw std::runtime_error("unsupported denoiser model version in " + path);
    std::uint64_t hash = read_pod<std::uint64_t>(in);
    std::uint32_t buckets = read_pod<std::uint32_t>(in);
    std::uint32_t d = read_pod<std::uint32_t>(in);
    if (buckets == 0 || buckets > 100000 || d == 0 || d > 100000)
        throw std::runtime_error("corrupt denoiser model header in " + path);

    std::vector<int> uppers(buckets);
    for (auto& u : uppers) u = read_pod<std::int32_t>(in);
    std::vector<Eigen::MatrixXd> a(buckets);
    std::vector<Eigen::VectorXd> b(buckets);
    for (std::uint32_t i = 0; i < buckets; ++i) {
        a[i].resize(d, d);
        for (std::uint32_t r = 0; r < d; ++r)
            for (std::uint32_t c = 0; c < d; ++c) a[i](r, c) = read_pod<float>(in);
        b[i].resize(d);
        for (std::uint32_t r = 0; r < d; ++r) b[i](r) = read_pod<float>(in);
    }
    return LinearDenoiser(std::move(uppers), std::move(a), std::move(b), hash);
}

}  // namespace handmotion
