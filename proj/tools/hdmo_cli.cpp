// hdmo: command-line surface over the handmotion core library.
//
// Subcommands: synth, encode, decode, metrics, triangulate, fit,
// train-denoiser, sample. Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "handmotion/diffusion.hpp"
#include "handmotion/fitting.hpp"
#include "handmotion/metrics.hpp"
#include "handmotion/motion_io.hpp"
#include "handmotion/representation.hpp"
#include "handmotion/synth.hpp"

namespace hm = handmotion;
using nlohmann::json;

namespace {

constexpr int kExitData = 2;

hm::HandTemplates load_templates(const std::string& left_path, const std::string& right_path) {
    hm::HandTemplates tpls = hm::default_templates();
    if (!left_path.empty()) tpls.left = hm::load_template(left_path);
    if (!right_path.empty()) tpls.right = hm::load_template(right_path);
    return tpls;
}

hm::MotionSequence read_sequence(const std::string& path) {
    return hm::sequence_from_motion_file(hm::read_motion(path));
}

void atomic_write_text(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << text;
        if (!out) throw std::runtime_error("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move " + tmp + " into place");
}

std::vector<hm::CameraCalib> load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file " + path);
    json j = json::parse(in);
    std::vector<hm::CameraCalib> cams;
    for (const auto& c : j) {
        hm::CameraCalib cam;
        cam.id = c.at("id").get<std::string>();
        auto k = c.at("K");
        auto r = c.at("R");
        auto t = c.at("t");
        if (k.size() != 9 || r.size() != 9 || t.size() != 3)
            throw std::runtime_error("camera '" + cam.id + "': K, R, t must be 9/9/3 values");
        for (int i = 0; i < 3; ++i)
            for (int jj = 0; jj < 3; ++jj) {
                cam.intrinsics(i, jj) = k[3 * i + jj].get<double>();
                cam.rotation(i, jj) = r[3 * i + jj].get<double>();
            }
        for (int i = 0; i < 3; ++i) cam.translation(i) = t[i].get<double>();
        cams.push_back(cam);
    }
    return cams;
}

// keypoint JSONL record: {frame, camera_id, points: 42 x [u, v, conf]}
struct KeypointFrame {
    // per joint (42 = 21 left then 21 right), observations across cameras
    std::array<std::vector<hm::Observation2D>, 42> joints;
};

std::map<int, KeypointFrame> load_keypoints(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open keypoint file " + path);
    std::map<int, KeypointFrame> frames;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line);
        int frame = j.at("frame").get<int>();
        std::string cam = j.at("camera_id").get<std::string>();
        const auto& pts = j.at("points");
        if (pts.size() != 42)
            throw std::runtime_error("keypoint line " + std::to_string(line_no) +
                                     ": expected 42 points");
        auto& rec = frames[frame];
        for (int k = 0; k < 42; ++k) {
            const auto& p = pts[k];
            rec.joints[k].push_back(
                {cam, {p.at(0).get<double>(), p.at(1).get<double>()}, p.at(2).get<double>()});
        }
    }
    return frames;
}

int cmd_synth(const std::string& out_path, std::uint64_t seed, int frames, double intensity,
              const std::string& family_name, double fps) {
    hm::SynthConfig cfg;
    cfg.seed = seed;
    cfg.frames = frames;
    cfg.interaction_intensity = intensity;
    if (family_name == "clasp") cfg.family = hm::MotionFamily::Clasp;
    else if (family_name == "tutting") cfg.family = hm::MotionFamily::Tutting;
    else if (family_name == "approach_retreat") cfg.family = hm::MotionFamily::ApproachRetreat;
    else throw CLI::ValidationError("--family must be clasp|tutting|approach_retreat");

    hm::MotionSequence seq = hm::synth_sequence(cfg, hm::default_templates());
    seq.fps = fps;
    hm::write_motion(out_path, hm::motion_file_from_sequence(seq));
    std::cout << "wrote " << seq.frame_count() << " frames to " << out_path << "\n";
    return 0;
}

int cmd_encode(const std::string& in_path, const std::string& out_path,
               const std::string& rep_name) {
    hm::HandTemplates tpls = hm::default_templates();
    hm::MotionSequence seq = read_sequence(in_path);
    auto [canon, info] = hm::normalize_sequence(seq, tpls);
    (void)info;
    hm::MotionLayout layout =
        rep_name == "local" ? hm::MotionLayout::Local : hm::MotionLayout::Global;
    hm::RepMatrix rep = layout == hm::MotionLayout::Local ? hm::encode_local(canon, tpls)
                                                          : hm::encode_global(canon, tpls);
    hm::write_motion(out_path, hm::motion_file_from_rep(rep, layout, seq.fps));
    std::cout << "encoded " << rep.rows() << " x " << rep.cols() << " (" << rep_name
              << ") to " << out_path << "\n";
    return 0;
}

int cmd_decode(const std::string& in_path, const std::string& out_path) {
    hm::HandTemplates tpls = hm::default_templates();
    hm::MotionFile file = hm::read_motion(in_path);
    hm::RepMatrix rep = rep_from_motion_file(file);
    hm::MotionSequence seq = file.layout == hm::MotionLayout::Local
                                 ? hm::decode_local(rep, tpls)
                                 : hm::decode_global(rep, tpls);
    seq.fps = file.fps;
    hm::write_motion(out_path, hm::motion_file_from_sequence(seq));
    std::cout << "decoded " << seq.frame_count() << " frames to " << out_path << "\n";
    return 0;
}

int cmd_metrics(const std::string& gt_path, const std::string& pred_path,
                const std::string& out_path, double stiffness, double threshold,
                double radius, std::uint64_t seed) {
    hm::HandTemplates tpls = hm::default_templates();
    hm::MotionSequence gt = read_sequence(gt_path);
    hm::MotionSequence pred = read_sequence(pred_path);

    hm::ContactParams contact;
    contact.stiffness = stiffness;
    contact.threshold = threshold;

    // featurize fixed-length windows so single files still yield feature sets
    auto window_features = [&](const hm::MotionSequence& seq) {
        const int window = std::min(seq.frame_count(), 30);
        const int stride = std::max(1, window / 2);
        std::vector<Eigen::VectorXd> feats;
        for (int start = 0; start + window <= seq.frame_count(); start += stride) {
            hm::MotionSequence w;
            w.fps = seq.fps;
            w.frames.assign(seq.frames.begin() + start, seq.frames.begin() + start + window);
            auto [canon, info] = hm::normalize_sequence(w, tpls);
            (void)info;
            feats.push_back(hm::statistical_featurizer(canon, tpls));
        }
        Eigen::MatrixXd m(feats.size(), feats.front().size());
        for (size_t i = 0; i < feats.size(); ++i) m.row(i) = feats[i];
        return m;
    };
    Eigen::MatrixXd gt_feats = window_features(gt);
    Eigen::MatrixXd pred_feats = window_features(pred);

    json report;
    report["fid"] =
        hm::frechet_distance(hm::feature_stats(gt_feats), hm::feature_stats(pred_feats));
    int subset = std::min<int>(200, static_cast<int>(pred_feats.rows()) / 2);
    report["diversity"] =
        subset >= 1 ? json(hm::diversity(pred_feats, subset, seed)) : json(nullptr);
    report["sdf_penetration"] = hm::sdf_penetration(pred, tpls, radius);
    report["interaction_loss"] = hm::interaction_loss(pred, gt, tpls, contact);
    report["shape_loss"] = hm::shape_loss(pred, gt, tpls);
    report["params"] = {{"K", contact.stiffness},
                        {"tau", contact.threshold},
                        {"radius", radius},
                        {"seed", seed}};

    std::string text = report.dump(2) + "\n";
    if (out_path.empty()) std::cout << text;
    else atomic_write_text(out_path, text);
    return 0;
}

int cmd_triangulate(const std::string& calib_path, const std::string& keypoint_path,
                    const std::string& out_path, double conf_threshold) {
    auto cams = load_calibration(calib_path);
    auto frames = load_keypoints(keypoint_path);

    std::ostringstream out;
    for (const auto& [frame, rec] : frames) {
        json rec_out;
        rec_out["frame"] = frame;
        json pts = json::array();
        for (int k = 0; k < 42; ++k) {
            try {
                hm::TriangulationResult r =
                    hm::triangulate_point(rec.joints[k], cams, conf_threshold);
                pts.push_back({{"xyz", {r.point.x(), r.point.y(), r.point.z()}},
                               {"residual_px", r.residual},
                               {"views", r.views_used}});
            } catch (const hm::InsufficientViewsError&) {
                pts.push_back({{"xyz", nullptr}, {"error", "insufficient_views"}});
            } catch (const hm::DegenerateGeometryError&) {
                pts.push_back({{"xyz", nullptr}, {"error", "degenerate_geometry"}});
            }
        }
        rec_out["points"] = pts;
        out << rec_out.dump() << "\n";
    }
    if (out_path.empty()) std::cout << out.str();
    else atomic_write_text(out_path, out.str());
    return 0;
}

int cmd_fit(const std::string& in_path, const std::string& out_path, double lambda,
            int max_iters, bool no_warm_start) {
    // input: params-layout file whose FK joints act as targets
    hm::HandTemplates tpls = hm::default_templates();
    hm::MotionSequence seq = read_sequence(in_path);

    hm::FitConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iters = max_iters;
    cfg.warm_start = !no_warm_start;

    std::vector<hm::JointSet> left_targets, right_targets;
    for (int n = 0; n < seq.frame_count(); ++n) {
        hm::FrameJoints fj = hm::frame_joints(seq, tpls, n);
        left_targets.push_back(fj.left);
        right_targets.push_back(fj.right);
    }
    hm::FitResult left = hm::fit_hand(left_targets, tpls.left, cfg);
    hm::FitResult right = hm::fit_hand(right_targets, tpls.right, cfg);

    hm::MotionSequence fitted;
    fitted.fps = seq.fps;
    fitted.frames.resize(seq.frame_count());
    double rms = 0.0;
    for (int n = 0; n < seq.frame_count(); ++n) {
        fitted.frames[n] = {left.params[n], right.params[n]};
        rms += left.residuals[n] + right.residuals[n];
    }
    hm::write_motion(out_path, hm::motion_file_from_sequence(fitted));
    std::cout << "fit " << seq.frame_count() << " frames, mean RMS joint error "
              << rms / (2 * seq.frame_count()) << " m"
              << (left.converged && right.converged ? "" : " (not fully converged)") << "\n";
    return 0;
}

int cmd_train(const std::vector<std::string>& data_paths, const std::string& out_path,
              int buckets, double ridge, int steps, std::uint64_t seed,
              const std::string& rep_name) {
    hm::HandTemplates tpls = hm::default_templates();
    hm::NoiseSchedule schedule = hm::cosine_schedule(steps);

    std::vector<Eigen::MatrixXd> data;
    for (const auto& p : data_paths) {
        hm::MotionFile f = hm::read_motion(p);
        if (f.layout == hm::MotionLayout::Params) {
            auto [canon, info] = hm::normalize_sequence(hm::sequence_from_motion_file(f), tpls);
            (void)info;
            data.push_back(rep_name == "local" ? hm::encode_local(canon, tpls)
                                               : hm::encode_global(canon, tpls));
        } else {
            data.push_back(hm::rep_from_motion_file(f));
        }
    }

    hm::LinearFitConfig cfg;
    cfg.buckets = buckets;
    cfg.ridge = ridge;
    cfg.seed = seed;
    hm::LinearDenoiser model = hm::fit_linear_denoiser(data, schedule, cfg);
    model.save(out_path);
    std::cout << "trained " << buckets << "-bucket linear denoiser on " << data.size()
              << " sequences -> " << out_path << "\n";
    return 0;
}

int cmd_sample(const std::string& model_path, const std::string& mode,
               const std::string& cond_path, const std::string& out_path, int frames,
               int steps, std::uint64_t seed, int count) {
    hm::HandTemplates tpls = hm::default_templates();
    hm::NoiseSchedule schedule = hm::cosine_schedule(steps);
    hm::LinearDenoiser model = hm::LinearDenoiser::load(model_path);
    if (model.schedule_hash() != schedule.hash())
        throw std::runtime_error(
            "denoiser model was trained on a different noise schedule (use matching --steps)");

    int model_width = static_cast<int>(model.weights(0).cols());
    hm::MotionLayout layout;
    if (model_width == hm::kLocalWidth) layout = hm::MotionLayout::Local;
    else if (model_width == hm::kGlobalWidth) layout = hm::MotionLayout::Global;
    else throw std::runtime_error("model width " + std::to_string(model_width) +
                                  " matches neither representation");
    hm::Condition cond = hm::Unconstrained{};
    int n_frames = frames;
    if (mode != "unconstrained") {
        if (cond_path.empty())
            throw CLI::ValidationError("--cond is required for mode " + mode);
        hm::MotionFile f = hm::read_motion(cond_path);
        hm::RepMatrix gt = rep_from_motion_file(f);
        n_frames = static_cast<int>(gt.rows());
        if (mode == "inbetween") {
            if (n_frames < 2 * hm::kConditionFrames)
                throw std::runtime_error("in-betweening needs a condition file with N >= " +
                                         std::to_string(2 * hm::kConditionFrames) + " frames");
            if (f.layout != layout)
                throw std::runtime_error(
                    "condition file representation does not match the model's");
            cond = hm::InbetweenCondition{gt.topRows(hm::kConditionFrames),
                                          gt.bottomRows(hm::kConditionFrames)};
        } else if (mode == "trajectory") {
            if (f.layout != hm::MotionLayout::Local || layout != hm::MotionLayout::Local)
                throw std::runtime_error(
                    "trajectory control expects a local-rep model and condition file");
            Eigen::MatrixXd chans(n_frames, 14);
            for (int k = 0; k < 14; ++k) chans.col(k) = gt.col(hm::kTrajectoryChannels[k]);
            cond = hm::TrajectoryCondition{chans};
        } else {
            throw CLI::ValidationError("--mode must be unconstrained|inbetween|trajectory");
        }
    }
    int width = hm::layout_width(layout);

    for (int i = 0; i < count; ++i) {
        hm::RepMatrix x =
            hm::ddpm_sample(model, schedule, n_frames, width, cond, seed + i);
        std::string path = out_path;
        if (count > 1) {
            auto dot = path.rfind('.');
            std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
            std::string ext = dot == std::string::npos ? "" : path.substr(dot);
            path = stem + "_" + std::to_string(i) + ext;
        }
        hm::write_motion(path, hm::motion_file_from_rep(x, layout));
        std::cout << "sampled " << n_frames << " frames (" << mode << ") -> " << path << "\n";
        (void)tpls;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-hand interaction motion toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic two-hand sequence");
    std::string synth_out = "motion.hdmo", family = "clasp";
    std::uint64_t synth_seed = 0;
    int synth_frames = 120;
    double intensity = 0.5, fps = 30.0;
    synth->add_option("-o,--output", synth_out, "output motion file");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--frames", synth_frames, "frame count (>= 10)");
    synth->add_option("--intensity", intensity, "interaction intensity in [0,1]");
    synth->add_option("--family", family, "clasp|tutting|approach_retreat");
    synth->add_option("--fps", fps, "frames per second");

    // encode
    auto* encode = app.add_subcommand("encode", "encode params motion into a representation");
    std::string enc_in, enc_out = "rep.hdmo", rep_name = "local";
    encode->add_option("-i,--input", enc_in, "params-layout motion file")->required();
    encode->add_option("-o,--output", enc_out, "output rep file");
    encode->add_option("--rep", rep_name, "local|global")
        ->check(CLI::IsMember({"local", "global"}));

    // decode
    auto* decode = app.add_subcommand("decode", "decode a representation back to parameters");
    std::string dec_in, dec_out = "motion.hdmo";
    decode->add_option("-i,--input", dec_in, "local/global rep file")->required();
    decode->add_option("-o,--output", dec_out, "output params motion file");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "metric report for pred vs ground truth");
    std::string gt_path, pred_path, report_out;
    double stiffness = 1.0, threshold = 0.02, radius = 0.008;
    std::uint64_t metric_seed = 0;
    metrics->add_option("--gt", gt_path, "ground-truth params motion file")->required();
    metrics->add_option("--pred", pred_path, "predicted params motion file")->required();
    metrics->add_option("-o,--output", report_out, "report JSON path (default stdout)");
    metrics->add_option("--stiffness", stiffness, "contact stiffness K");
    metrics->add_option("--tau", threshold, "contact distance threshold, meters");
    metrics->add_option("--radius", radius, "bone capsule radius, meters");
    metrics->add_option("--seed", metric_seed, "diversity subsampling seed");

    // triangulate
    auto* tri = app.add_subcommand("triangulate", "multi-view DLT triangulation");
    std::string calib_path, keypoint_path, tri_out;
    double conf_threshold = 0.95;
    tri->add_option("--calib", calib_path, "camera calibration JSON")->required();
    tri->add_option("--keypoints", keypoint_path, "keypoint JSONL")->required();
    tri->add_option("-o,--output", tri_out, "output JSONL (default stdout)");
    tri->add_option("--conf-threshold", conf_threshold, "confidence cutoff");

    // fit
    auto* fit = app.add_subcommand("fit", "fit hand parameters to joint targets");
    std::string fit_in, fit_out = "fitted.hdmo";
    double lambda = 1e-3;
    int fit_iters = 60;
    bool no_warm_start = false;
    fit->add_option("-i,--input", fit_in, "params motion file providing joint targets")
        ->required();
    fit->add_option("-o,--output", fit_out, "fitted params motion file");
    fit->add_option("--lambda", lambda, "pose regularizer weight");
    fit->add_option("--max-iters", fit_iters, "LM iteration cap");
    fit->add_flag("--no-warm-start", no_warm_start, "fit frames independently");

    // train-denoiser
    auto* train = app.add_subcommand("train-denoiser", "ridge-fit the linear denoiser");
    std::vector<std::string> train_inputs;
    std::string model_out = "denoiser.hdld";
    int buckets = 10, steps = 1000;
    double ridge = 1e-6;
    std::uint64_t train_seed = 0;
    train->add_option("-i,--input", train_inputs, "training motion/rep files (>= 2)")
        ->required()
        ->expected(-2);
    train->add_option("-o,--output", model_out, "model file");
    train->add_option("--buckets", buckets, "timestep buckets");
    train->add_option("--ridge", ridge, "ridge regularizer");
    train->add_option("--steps", steps, "schedule steps T");
    train->add_option("--seed", train_seed, "sampling seed");
    std::string train_rep = "global";
    train->add_option("--rep", train_rep, "representation for params inputs: local|global")
        ->check(CLI::IsMember({"local", "global"}));

    // sample
    auto* sample = app.add_subcommand("sample", "draw motion samples from a denoiser model");
    std::string sample_model, sample_mode = "unconstrained", cond_path,
                sample_out = "sample.hdmo";
    int sample_frames = 60, sample_steps = 1000, sample_count = 1;
    std::uint64_t sample_seed = 0;
    sample->add_option("--model", sample_model, "denoiser model file")->required();
    sample->add_option("--mode", sample_mode, "unconstrained|inbetween|trajectory")
        ->check(CLI::IsMember({"unconstrained", "inbetween", "trajectory"}));
    sample->add_option("--cond", cond_path, "conditioning rep file");
    sample->add_option("-o,--output", sample_out, "output rep file");
    sample->add_option("--frames", sample_frames, "frames (unconstrained mode)");
    sample->add_option("--steps", sample_steps, "schedule steps T");
    sample->add_option("--seed", sample_seed, "RNG seed");
    sample->add_option("--count", sample_count, "number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_seed, synth_frames, intensity, family, fps);
        if (encode->parsed()) return cmd_encode(enc_in, enc_out, rep_name);
        if (decode->parsed()) return cmd_decode(dec_in, dec_out);
        if (metrics->parsed())
            return cmd_metrics(gt_path, pred_path, report_out, stiffness, threshold, radius,
                               metric_seed);
        if (tri->parsed()) return cmd_triangulate(calib_path, keypoint_path, tri_out,
                                                  conf_threshold);
        if (fit->parsed()) return cmd_fit(fit_in, fit_out, lambda, fit_iters, no_warm_start);
        if (train->parsed())
            return cmd_train(train_inputs, model_out, buckets, ridge, steps, train_seed,
                             train_rep);
        if (sample->parsed())
            return cmd_sample(sample_model, sample_mode, cond_path, sample_out, sample_frames,
                              sample_steps, sample_seed, sample_count);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 1;
}
