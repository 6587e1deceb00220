#include "handmotion/motion_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "motion files are little-endian; big-endian hosts unsupported");

namespace handmotion {

namespace {

constexpr char kMagic[4] = {'H', 'D', 'M', 'O'};
constexpr std::uint16_t kCurrentVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw TruncatedError(std::string("motion file truncated reading ") + what);
    return v;
}

int pack_hand(std::vector<float>& payload, const HandParams& p) {
    for (double b : p.beta) payload.push_back(static_cast<float>(b));
    payload.push_back(static_cast<float>(p.global_rot.w));
    payload.push_back(static_cast<float>(p.global_rot.x));
    payload.push_back(static_cast<float>(p.global_rot.y));
    payload.push_back(static_cast<float>(p.global_rot.z));
    payload.push_back(static_cast<float>(p.translation.x));
    payload.push_back(static_cast<float>(p.translation.y));
    payload.push_back(static_cast<float>(p.translation.z));
    for (const Quat& q : p.local_rots) {
        payload.push_back(static_cast<float>(q.w));
        payload.push_back(static_cast<float>(q.x));
        payload.push_back(static_cast<float>(q.y));
        payload.push_back(static_cast<float>(q.z));
    }
    return kParamsWidth / 2;
}

HandParams unpack_hand(const float* f) {
    HandParams p;
    int k = 0;
    for (double& b : p.beta) b = f[k++];
    p.global_rot = Quat(f[k], f[k + 1], f[k + 2], f[k + 3]);
    k += 4;
    p.translation = {f[k], f[k + 1], f[k + 2]};
    k += 3;
    for (Quat& q : p.local_rots) {
        q = Quat(f[k], f[k + 1], f[k + 2], f[k + 3]);
        k += 4;
    }
    return p;
}

}  // namespace

int layout_width(MotionLayout layout) {
    switch (layout) {
        case MotionLayout::Params: return kParamsWidth;
        case MotionLayout::Local: return kLocalWidth;
        case MotionLayout::Global: return kGlobalWidth;
    }
    throw std::invalid_argument("unknown motion layout");
}

MotionFile read_motion(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MotionFileError("cannot open motion file " + path);

    char magic[4] = {};
    in.read(magic, 4);
    if (!in) throw TruncatedError("motion file shorter than its magic: " + path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagicError(std::string("bad motion file magic '") +
                            std::string(magic, 4) + "' in " + path);

    MotionFile file;
    file.version = read_pod<std::uint16_t>(in, "version");
    if (file.version != kCurrentVersion)
        throw VersionError("unsupported motion file version " + std::to_string(file.version) +
                           " in " + path);
    auto layout = read_pod<std::uint16_t>(in, "layout");
    if (layout > 2) throw MotionFileError("unknown layout code " + std::to_string(layout));
    file.layout = static_cast<MotionLayout>(layout);
    file.n_frames = read_pod<std::uint32_t>(in, "frame count");
    file.width = read_pod<std::uint32_t>(in, "width");
    file.fps = read_pod<float>(in, "fps");

    if (file.width != static_cast<std::uint32_t>(layout_width(file.layout)))
        throw MotionFileError("layout/width mismatch in " + path + ": width " +
                              std::to_string(file.width));

    std::size_t count = std::size_t(file.n_frames) * file.width;
    file.payload.resize(count);
    in.read(reinterpret_cast<char*>(file.payload.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in || in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
        throw TruncatedError("motion file payload truncated in " + path);
    return file;
}

void write_motion(const std::string& path, const MotionFile& file) {
    if (file.payload.size() != std::size_t(file.n_frames) * file.width)
        throw MotionFileError("payload length does not match N*D");
    if (file.width != static_cast<std::uint32_t>(layout_width(file.layout)))
        throw MotionFileError("layout/width mismatch");

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw MotionFileError("cannot open " + tmp + " for writing");
        out.write(kMagic, 4);
        write_pod(out, file.version);
        write_pod(out, static_cast<std::uint16_t>(file.layout));
        write_pod(out, file.n_frames);
        write_pod(out, file.width);
        write_pod(out, file.fps);
        out.write(reinterpret_cast<const char*>(file.payload.data()),
                  static_cast<std::streamsize>(file.payload.size() * sizeof(float)));
        if (!out) throw MotionFileError("write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw MotionFileError("cannot move " + tmp + " into place as " + path);
}

MotionFile motion_file_from_sequence(const MotionSequence& seq) {
    MotionFile file;
    file.layout = MotionLayout::Params;
    file.n_frames = static_cast<std::uint32_t>(seq.frame_count());
    file.width = kParamsWidth;
    file.fps = static_cast<float>(seq.fps);
    file.payload.reserve(std::size_t(file.n_frames) * kParamsWidth);
    for (const auto& f : seq.frames) {
        pack_hand(file.payload, f.left);
        pack_hand(file.payload, f.right);
    }
    return file;
}

MotionSequence sequence_from_motion_file(const MotionFile& file) {
    if (file.layout != MotionLayout::Params)
        throw MotionFileError("expected a params-layout motion file");
    MotionSequence seq;
    seq.fps = file.fps;
    seq.frames.resize(file.n_frames);
    const int half = kParamsWidth / 2;
    for (std::uint32_t n = 0; n < file.n_frames; ++n) {
        const float* row = file.payload.data() + std::size_t(n) * kParamsWidth;
        seq.frames[n].left = unpack_hand(row);
        seq.frames[n].right = unpack_hand(row + half);
    }
    return seq;
}

MotionFile motion_file_from_rep(const RepMatrix& rep, MotionLayout layout, double fps) {
    if (layout == MotionLayout::Params)
        throw MotionFileError("rep payloads must use the local or global layout");
    if (rep.cols() != layout_width(layout))
        throw MotionFileError("rep width does not match layout");
    MotionFile file;
    file.layout = layout;
    file.n_frames = static_cast<std::uint32_t>(rep.rows());
    file.width = static_cast<std::uint32_t>(rep.cols());
    file.fps = static_cast<float>(fps);
    file.payload.reserve(std::size_t(file.n_frames) * file.width);
    for (int n = 0; n < rep.rows(); ++n)
        for (int c = 0; c < rep.cols(); ++c)
            file.payload.push_back(static_cast<float>(rep(n, c)));
    return file;
}

RepMatrix rep_from_motion_file(const MotionFile& file) {
    if (file.layout == MotionLayout::Params)
        throw MotionFileError("params-layout file holds no representation matrix");
    RepMatrix rep(file.n_frames, file.width);
    for (std::uint32_t n = 0; n < file.n_frames; ++n)
        for (std::uint32_t c = 0; c < file.width; ++c)
            rep(n, c) = file.payload[std::size_t(n) * file.width + c];
    return rep;
}

}  // namespace handmotion
