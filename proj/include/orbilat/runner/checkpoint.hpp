#pragma once

// Binary checkpoint, little-endian regardless of host:
//
//   magic       8 bytes  "ORBLATCK"
//   version     u32      (1)
//   config_hash u64
//   config      u64 length + bytes (canonical config text)
//   rng         u64 length + bytes (std::mt19937_64 stream state)
//   next_traj   i64      trajectories completed, thermalization included
//   dt          f64      step size in use (after tuning)
//   n_md        i32
//   accepted    i64
//   dropped     i64      measurements lost to failed polar decompositions
//   tune_acc    i64      accepted count in the open step-size tuning window
//   action      u8       0 wilson, 1 orbifold
//   n_colors    u8
//   blocks      u32, then per block: u64 matrix count + count * N*N * (re, im) f64
//
// Wilson: one block (all links). Orbifold: Z block, then U_t block.
// Written to a temporary file and renamed into place.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../orbifold.hpp"
#include "../wilson.hpp"
#include "config.hpp"

namespace orbilat {

inline constexpr char checkpoint_magic[8] = {'O', 'R', 'B', 'L', 'A', 'T', 'C', 'K'};
inline constexpr std::uint32_t checkpoint_version = 1;

struct CheckpointHeader {
    std::uint64_t config_hash = 0;
    std::string config_text;
    std::string rng_state;
    std::int64_t next_traj = 0;
    double dt = 0.0;
    std::int32_t n_md = 0;
    std::int64_t accepted = 0;
    std::int64_t dropped = 0;
    std::int64_t tune_window_accepted = 0;
    Action action = Action::wilson;
    int n_colors = 2;
};

namespace detail {

class ByteWriter {
  public:
    void u8(std::uint8_t v) { buf_.push_back(char(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(std::uint8_t(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(std::uint8_t(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(std::uint64_t(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        buf_ += s;
    }
    void raw(const char* p, std::size_t n) { buf_.append(p, n); }
    const std::string& bytes() const { return buf_; }

  private:
    std::string buf_;
};

class ByteReader {
  public:
    explicit ByteReader(std::string data) : data_(std::move(data)) {}

    std::uint8_t u8() {
        need(1);
        return std::uint8_t(data_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
        return v;
    }
    std::int64_t i64() { return std::int64_t(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string raw(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

  private:
    void need(std::uint64_t n) const {
        if (n > data_.size() - pos_) throw CheckpointFormatError("checkpoint: truncated file");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

template <int N>
void put_block(ByteWriter& w, const std::vector<Matrix<N>>& ms) {
    w.u64(ms.size());
    for (const auto& m : ms)
        for (const auto& x : m.data()) {
            w.f64(x.real());
            w.f64(x.imag());
        }
}

template <int N>
std::vector<Matrix<N>> get_block(ByteReader& r, std::size_t expected) {
    const std::uint64_t n = r.u64();
    if (n != expected)
        throw CheckpointFormatError("checkpoint: block holds " + std::to_string(n) + " matrices, expected " +
                                    std::to_string(expected));
    std::vector<Matrix<N>> ms(n);
    for (auto& m : ms)
        for (auto& x : m.data()) {
            const double re = r.f64();
            const double im = r.f64();
            x = Complex(re, im);
        }
    return ms;
}

template <int N>
std::vector<Matrix<N>> as_matrices(const std::vector<SpecialUnitary<N>>& us) {
    std::vector<Matrix<N>> ms;
    ms.reserve(us.size());
    for (const auto& u : us) ms.push_back(u.matrix());
    return ms;
}

inline void write_header(ByteWriter& w, const CheckpointHeader& h) {
    w.raw(checkpoint_magic, 8);
    w.u32(checkpoint_version);
    w.u64(h.config_hash);
    w.str(h.config_text);
    w.str(h.rng_state);
    w.i64(h.next_traj);
    w.f64(h.dt);
    w.u32(std::uint32_t(h.n_md));
    w.i64(h.accepted);
    w.i64(h.dropped);
    w.i64(h.tune_window_accepted);
    w.u8(h.action == Action::wilson ? 0 : 1);
    w.u8(std::uint8_t(h.n_colors));
}

inline CheckpointHeader read_header(ByteReader& r) {
    if (r.raw(8) != std::string(checkpoint_magic, 8)) throw CheckpointFormatError("checkpoint: bad magic header");
    const auto version = r.u32();
    if (version != checkpoint_version)
        throw CheckpointFormatError("checkpoint: unsupported version " + std::to_string(version));
    CheckpointHeader h;
    h.config_hash = r.u64();
    h.config_text = r.str();
    h.rng_state = r.str();
    h.next_traj = r.i64();
    h.dt = r.f64();
    h.n_md = std::int32_t(r.u32());
    h.accepted = r.i64();
    h.dropped = r.i64();
    h.tune_window_accepted = r.i64();
    h.action = r.u8() == 0 ? Action::wilson : Action::orbifold;
    h.n_colors = r.u8();
    return h;
}

inline void write_atomically(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write checkpoint '" + tmp.string() + "'");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        if (!out) throw ConfigError("short write on checkpoint '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointFormatError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

inline std::string rng_state(const std::mt19937_64& rng) {
    std::ostringstream o;
    o << rng;
    return o.str();
}

inline void restore_rng(std::mt19937_64& rng, const std::string& state) {
    std::istringstream in(state);
    in >> rng;
    if (!in) throw CheckpointFormatError("checkpoint: unreadable RNG state");
}

template <int N>
void write_checkpoint(const std::filesystem::path& path, const CheckpointHeader& h, const WilsonConfig<N>& cfg) {
    detail::ByteWriter w;
    detail::write_header(w, h);
    w.u32(1);
    detail::put_block<N>(w, detail::as_matrices<N>(cfg.links()));
    detail::write_atomically(path, w.bytes());
}

template <int N>
void write_checkpoint(const std::filesystem::path& path, const CheckpointHeader& h, const OrbifoldConfig<N>& cfg) {
    detail::ByteWriter w;
    detail::write_header(w, h);
    w.u32(2);
    detail::put_block<N>(w, cfg.z_links());
    detail::put_block<N>(w, detail::as_matrices<N>(cfg.ut_links()));
    detail::write_atomically(path, w.bytes());
}

inline CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
    detail::ByteReader r(detail::read_file(path));
    return detail::read_header(r);
}

template <int N>
CheckpointHeader read_checkpoint(const std::filesystem::path& path, WilsonConfig<N>& cfg) {
    detail::ByteReader r(detail::read_file(path));
    auto h = detail::read_header(r);
    if (h.action != Action::wilson || h.n_colors != N)
        throw CheckpointFormatError("checkpoint: holds a different action or gauge group");
    if (r.u32() != 1) throw CheckpointFormatError("checkpoint: wrong block count");
    const auto links = detail::get_block<N>(r, cfg.links().size());
    for (std::size_t i = 0; i < links.size(); ++i) cfg.links()[i] = SpecialUnitary<N>::assume(links[i]);
    if (!r.at_end()) throw CheckpointFormatError("checkpoint: trailing bytes");
    return h;
}

template <int N>
CheckpointHeader read_checkpoint(const std::filesystem::path& path, OrbifoldConfig<N>& cfg) {
    detail::ByteReader r(detail::read_file(path));
    auto h = detail::read_header(r);
    if (h.action != Action::orbifold || h.n_colors != N)
        throw CheckpointFormatError("checkpoint: holds a different action or gauge group");
    if (r.u32() != 2) throw CheckpointFormatError("checkpoint: wrong block count");
    cfg.z_links() = detail::get_block<N>(r, cfg.z_links().size());
    const auto ut = detail::get_block<N>(r, cfg.ut_links().size());
    for (std::size_t i = 0; i < ut.size(); ++i) cfg.ut_links()[i] = SpecialUnitary<N>::assume(ut[i]);
    if (!r.at_end()) throw CheckpointFormatError("checkpoint: trailing bytes");
    return h;
}

} // namespace orbilat
