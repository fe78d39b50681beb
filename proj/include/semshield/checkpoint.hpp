#pragma once

// Single-file checkpoint container shared by the CLI and the experiment
// runner. Layout: magic "SMSH", format-version u32, model-kind u32, JSON
// metadata block, raw parameter doubles, CRC32 trailer over everything
// before it. Round-trips are bit-identical.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "semshield/codec.hpp"
#include "semshield/diffusion.hpp"
#include "semshield/eavesdrop.hpp"

namespace semshield {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { codec = 1, denoiser = 2, eve = 3 };

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t len, std::uint32_t crc = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc = ~crc;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return ~crc;
}

struct Writer {
    std::vector<std::uint8_t> buf;

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
};

struct Reader {
    std::vector<std::uint8_t> buf;
    std::size_t pos = 0;

    void raw(void* p, std::size_t n) {
        if (pos + n > buf.size()) throw CheckpointError("checkpoint truncated");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    std::string str() {
        const auto n = u64();
        if (pos + n > buf.size()) throw CheckpointError("checkpoint truncated");
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
    std::vector<double> doubles() {
        const auto n = u64();
        std::vector<double> v(n);
        raw(v.data(), n * sizeof(double));
        return v;
    }
};

inline void write_file(const std::filesystem::path& path, Writer&& w) {
    const std::uint32_t crc = crc32(w.buf.data(), w.buf.size());
    w.u32(crc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(w.buf.data()),
              static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw CheckpointError("write failed: " + path.string());
}

inline Reader read_file(const std::filesystem::path& path, ModelKind expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    Reader r;
    r.buf.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (r.buf.size() < 16) throw CheckpointError("checkpoint truncated: " + path.string());

    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, r.buf.data() + r.buf.size() - 4, 4);
    if (crc32(r.buf.data(), r.buf.size() - 4) != stored_crc)
        throw CheckpointError("checkpoint checksum mismatch: " + path.string());
    r.buf.resize(r.buf.size() - 4);

    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "SMSH", 4) != 0)
        throw CheckpointError("bad checkpoint magic: " + path.string());
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint version mismatch (got " + std::to_string(version) + ")");
    const auto kind = static_cast<ModelKind>(r.u32());
    if (kind != expected_kind)
        throw CheckpointError("checkpoint kind mismatch: " + path.string());
    return r;
}

inline void write_header(Writer& w, ModelKind kind) {
    w.raw("SMSH", 4);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(kind));
}

}  // namespace detail

inline void save_checkpoint(const CodecModel& m, const std::filesystem::path& path) {
    detail::Writer w;
    detail::write_header(w, ModelKind::codec);
    nlohmann::json meta{{"latent_dim", m.latent_dim},
                        {"hidden_dim", m.hidden_dim},
                        {"train_seed", m.train_seed}};
    w.str(meta.dump());
    w.doubles(m.encoder.flatten());
    w.doubles(m.decoder.flatten());
    detail::write_file(path, std::move(w));
}

inline CodecModel load_codec(const std::filesystem::path& path) {
    auto r = detail::read_file(path, ModelKind::codec);
    const auto meta = nlohmann::json::parse(r.str());
    CodecModel m = CodecModel::init(meta.at("latent_dim").get<Eigen::Index>(),
                                    meta.at("hidden_dim").get<Eigen::Index>(),
                                    meta.at("train_seed").get<std::uint64_t>());
    m.encoder.unflatten(r.doubles());
    m.decoder.unflatten(r.doubles());
    return m;
}

inline void save_checkpoint(const DenoiserModel& m, const std::filesystem::path& path) {
    detail::Writer w;
    detail::write_header(w, ModelKind::denoiser);
    nlohmann::json meta{{"latent_dim", m.latent_dim},
                        {"hidden_dim", m.hidden_dim},
                        {"emb_dim", m.emb_dim},
                        {"train_seed", m.train_seed},
                        {"T", m.schedule.T}};
    w.str(meta.dump());
    w.doubles(m.schedule.betas);
    w.doubles(m.net.flatten());
    detail::write_file(path, std::move(w));
}

inline DenoiserModel load_denoiser(const std::filesystem::path& path) {
    auto r = detail::read_file(path, ModelKind::denoiser);
    const auto meta = nlohmann::json::parse(r.str());
    VarianceSchedule sch;
    sch.T = meta.at("T").get<int>();
    sch.betas = r.doubles();
    if (static_cast<int>(sch.betas.size()) != sch.T)
        throw CheckpointError("denoiser checkpoint: schedule length mismatch");
    sch.alpha_bars.resize(sch.betas.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < sch.betas.size(); ++i) {
        prod *= 1.0 - sch.betas[i];
        sch.alpha_bars[i] = prod;
    }
    DenoiserModel m = DenoiserModel::init(meta.at("latent_dim").get<Eigen::Index>(), sch,
                                          meta.at("train_seed").get<std::uint64_t>(),
                                          meta.at("hidden_dim").get<Eigen::Index>());
    m.net.unflatten(r.doubles());
    return m;
}

inline void save_checkpoint(const EveClassifier& m, const std::filesystem::path& path) {
    detail::Writer w;
    detail::write_header(w, ModelKind::eve);
    nlohmann::json meta{{"input_dim", m.input_dim},
                        {"hidden_dim", m.hidden_dim},
                        {"train_seed", m.train_seed}};
    w.str(meta.dump());
    w.doubles(m.net.flatten());
    detail::write_file(path, std::move(w));
}

inline EveClassifier load_eve(const std::filesystem::path& path) {
    auto r = detail::read_file(path, ModelKind::eve);
    const auto meta = nlohmann::json::parse(r.str());
    EveClassifier m = EveClassifier::init(meta.at("input_dim").get<Eigen::Index>(),
                                          meta.at("train_seed").get<std::uint64_t>(),
                                          meta.at("hidden_dim").get<Eigen::Index>());
    m.net.unflatten(r.doubles());
    return m;
}

}  // namespace semshield
