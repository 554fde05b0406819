#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "lem/errors.hpp"
#include "lem/train.hpp"

namespace lem {

// Binary checkpoint formats. All integers and doubles are little-endian;
// tensor payloads follow in declaration order, row-major.
//   "LEM1"     u32 d, m, o; f64 delta_t; tensors
//   "LSTM1"    u32 d, m, o; tensors
//   "LEMRUN1" u8 model kind; embedded params; Adam state; progress; best params
// Headers occupy 8 zero-padded bytes.

namespace detail {

constexpr std::size_t kHeaderLen = 8;

inline void write_header(std::ostream& out, const char* tag) {
    std::array<char, kHeaderLen> buf{};
    std::strncpy(buf.data(), tag, kHeaderLen - 1);
    out.write(buf.data(), kHeaderLen);
}

inline void expect_header(std::istream& in, const char* tag, const std::string& path) {
    std::array<char, kHeaderLen> buf{};
    if (!in.read(buf.data(), kHeaderLen))
        throw FormatError("checkpoint: truncated header in " + path);
    std::array<char, kHeaderLen> want{};
    std::strncpy(want.data(), tag, kHeaderLen - 1);
    if (buf != want)
        throw FormatError("checkpoint: expected header \"" + std::string(tag) + "\" in " + path);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                          static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
        throw FormatError("checkpoint: truncated payload in " + path);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), 8);
}

inline std::uint64_t read_u64(std::istream& in, const std::string& path) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8))
        throw FormatError("checkpoint: truncated payload in " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

inline void write_f64(std::ostream& out, double x) {
    write_u64(out, std::bit_cast<std::uint64_t>(x));
}

inline double read_f64(std::istream& in, const std::string& path) {
    return std::bit_cast<double>(read_u64(in, path));
}

template <class Tensors>
inline void write_tensors(std::ostream& out, const Tensors& t) {
    for (const auto& ref : t.tensors())
        for (std::size_t i = 0; i < ref.size; ++i) write_f64(out, ref.data[i]);
}

template <class Tensors>
inline void read_tensors(std::istream& in, Tensors& t, const std::string& path) {
    for (auto& ref : t.tensors())
        for (std::size_t i = 0; i < ref.size; ++i) ref.data[i] = read_f64(in, path);
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    return in;
}

inline void save_params_body(std::ostream& out, const LemParams& p) {
    write_header(out, "LEM1");
    write_u32(out, static_cast<std::uint32_t>(p.d));
    write_u32(out, static_cast<std::uint32_t>(p.m));
    write_u32(out, static_cast<std::uint32_t>(p.o));
    write_f64(out, p.delta_t);
    write_tensors(out, p);
}

inline LemParams load_params_body_lem(std::istream& in, const std::string& path) {
    expect_header(in, "LEM1", path);
    const std::uint32_t d = read_u32(in, path);
    const std::uint32_t m = read_u32(in, path);
    const std::uint32_t o = read_u32(in, path);
    const double delta_t = read_f64(in, path);
    if (d == 0 || m == 0 || o == 0 || !(delta_t > 0.0))
        throw FormatError("checkpoint: invalid dimensions in " + path);
    LemParams p = zero_lem_params(d, m, o, delta_t);
    read_tensors(in, p, path);
    return p;
}

inline void save_params_body(std::ostream& out, const LstmParams& p) {
    write_header(out, "LSTM1");
    write_u32(out, static_cast<std::uint32_t>(p.d));
    write_u32(out, static_cast<std::uint32_t>(p.m));
    write_u32(out, static_cast<std::uint32_t>(p.o));
    write_tensors(out, p);
}

inline LstmParams load_params_body_lstm(std::istream& in, const std::string& path) {
    expect_header(in, "LSTM1", path);
    const std::uint32_t d = read_u32(in, path);
    const std::uint32_t m = read_u32(in, path);
    const std::uint32_t o = read_u32(in, path);
    if (d == 0 || m == 0 || o == 0)
        throw FormatError("checkpoint: invalid dimensions in " + path);
    LstmParams p = init_lstm_params(d, m, o, 0);
    read_tensors(in, p, path);
    return p;
}

}  // namespace detail

inline void save_lem_params(const LemParams& p, const std::string& path) {
    auto out = detail::open_out(path);
    detail::save_params_body(out, p);
}

inline LemParams load_lem_params(const std::string& path) {
    auto in = detail::open_in(path);
    return detail::load_params_body_lem(in, path);
}

inline void save_lstm_params(const LstmParams& p, const std::string& path) {
    auto out = detail::open_out(path);
    detail::save_params_body(out, p);
}

inline LstmParams load_lstm_params(const std::string& path) {
    auto in = detail::open_in(path);
    return detail::load_params_body_lstm(in, path);
}

namespace detail {

template <class Ops>
inline void save_train_state(std::ostream& out, const TrainState<Ops>& st, std::uint8_t kind) {
    out.put(static_cast<char>(kind));
    save_params_body(out, st.params);
    write_tensors(out, st.adam.m);
    write_tensors(out, st.adam.v);
    write_u64(out, static_cast<std::uint64_t>(st.adam.t));
    write_u64(out, st.next_epoch);
    write_f64(out, st.best_val);
    write_u64(out, st.best_epoch);
    out.put(st.has_best ? 1 : 0);
    save_params_body(out, st.best_params);
}

template <class Ops, class LoadBody>
inline TrainState<Ops> load_train_state(std::istream& in, const std::string& path,
                                        std::uint8_t want_kind, LoadBody&& load_body) {
    const int kind = in.get();
    if (kind != want_kind)
        throw FormatError("checkpoint: model kind mismatch in " + path);
    TrainState<Ops> st;
    st.params = load_body(in, path);
    st.adam.m = Ops::zeros(st.params);
    st.adam.v = Ops::zeros(st.params);
    read_tensors(in, st.adam.m, path);
    read_tensors(in, st.adam.v, path);
    st.adam.t = static_cast<std::int64_t>(read_u64(in, path));
    st.next_epoch = read_u64(in, path);
    st.best_val = read_f64(in, path);
    st.best_epoch = read_u64(in, path);
    st.has_best = in.get() == 1;
    st.best_params = load_body(in, path);
    return st;
}

}  // namespace detail

inline void save_train_checkpoint(const TrainState<LemOps>& st, const std::string& path) {
    auto out = detail::open_out(path);
    detail::write_header(out, "LEMRUN1");
    detail::save_train_state(out, st, 0);
}

inline void save_train_checkpoint(const TrainState<LstmOps>& st, const std::string& path) {
    auto out = detail::open_out(path);
    detail::write_header(out, "LEMRUN1");
    detail::save_train_state(out, st, 1);
}

inline TrainState<LemOps> load_lem_train_checkpoint(const std::string& path) {
    auto in = detail::open_in(path);
    detail::expect_header(in, "LEMRUN1", path);
    return detail::load_train_state<LemOps>(
        in, path, 0, [](std::istream& s, const std::string& p) {
            return detail::load_params_body_lem(s, p);
        });
}

inline TrainState<LstmOps> load_lstm_train_checkpoint(const std::string& path) {
    auto in = detail::open_in(path);
    detail::expect_header(in, "LEMRUN1", path);
    return detail::load_train_state<LstmOps>(
        in, path, 1, [](std::istream& s, const std::string& p) {
            return detail::load_params_body_lstm(s, p);
        });
}

inline ModelKind checkpoint_model_kind(const std::string& path) {
    auto in = detail::open_in(path);
    std::array<char, detail::kHeaderLen> buf{};
    if (!in.read(buf.data(), detail::kHeaderLen))
        throw FormatError("checkpoint: truncated header in " + path);
    const std::string tag(buf.data());
    if (tag == "LEM1") return ModelKind::Lem;
    if (tag == "LSTM1") return ModelKind::Lstm;
    if (tag == "LEMRUN1") {
        const int kind = in.get();
        if (kind == 0) return ModelKind::Lem;
        if (kind == 1) return ModelKind::Lstm;
    }
    throw FormatError("checkpoint: unrecognized header in " + path);
}

}  // namespace lem
