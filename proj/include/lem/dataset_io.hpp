#pragma once

#include <fstream>
#include <string>

#include "lem/checkpoint.hpp"
#include "lem/errors.hpp"
#include "lem/fastslow.hpp"
#include "lem/tasks.hpp"

namespace lem {

// Dataset container: "LEMD1" header, layout metadata, then raw payloads.
// Doubles are little-endian; class ids are u32.
inline void save_batch(const SequenceBatch& b, const std::string& path) {
    auto out = detail::open_out(path);
    detail::write_header(out, "LEMD1");
    detail::write_u32(out, static_cast<std::uint32_t>(b.target_kind));
    detail::write_u64(out, b.count);
    detail::write_u64(out, b.steps);
    detail::write_u64(out, b.features);
    detail::write_u64(out, b.out_dim);
    detail::write_u64(out, b.seed);
    detail::write_u32(out, static_cast<std::uint32_t>(b.task.size()));
    out.write(b.task.data(), static_cast<std::streamsize>(b.task.size()));
    for (double x : b.inputs) detail::write_f64(out, x);
    if (b.target_kind == TargetKind::ClassId) {
        for (int c : b.class_ids) detail::write_u32(out, static_cast<std::uint32_t>(c));
    } else {
        for (double x : b.targets) detail::write_f64(out, x);
    }
}

inline SequenceBatch load_batch(const std::string& path) {
    auto in = detail::open_in(path);
    detail::expect_header(in, "LEMD1", path);
    SequenceBatch b;
    const std::uint32_t kind = detail::read_u32(in, path);
    if (kind > 2) throw FormatError("dataset: bad target kind in " + path);
    b.target_kind = static_cast<TargetKind>(kind);
    b.count = detail::read_u64(in, path);
    b.steps = detail::read_u64(in, path);
    b.features = detail::read_u64(in, path);
    b.out_dim = detail::read_u64(in, path);
    b.seed = detail::read_u64(in, path);
    const std::uint32_t task_len = detail::read_u32(in, path);
    if (task_len > 4096) throw FormatError("dataset: oversized task name in " + path);
    b.task.resize(task_len);
    if (!in.read(b.task.data(), task_len)) throw FormatError("dataset: truncated in " + path);

    b.inputs.resize(b.count * b.steps * b.features);
    for (auto& x : b.inputs) x = detail::read_f64(in, path);
    if (b.target_kind == TargetKind::ClassId) {
        b.class_ids.resize(b.count);
        for (auto& c : b.class_ids) c = static_cast<int>(detail::read_u32(in, path));
    } else {
        const std::size_t n =
            b.target_kind == TargetKind::PerStep ? b.count * b.steps * b.out_dim : b.count * b.out_dim;
        b.targets.resize(n);
        for (auto& x : b.targets) x = detail::read_f64(in, path);
    }
    return b;
}

inline void write_trajectory_csv(const FastSlowTrajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("trajectory csv: cannot write " + path);
    const std::size_t dim = traj.phi.empty() ? 0 : traj.phi[0].size();
    out << "time";
    for (std::size_t i = 0; i < dim; ++i) out << ",phi" << i;
    for (std::size_t i = 0; i < dim; ++i) out << ",psi" << i;
    out << "\n";
    out.precision(17);
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        out << traj.times[n];
        for (double x : traj.phi[n]) out << "," << x;
        for (double x : traj.psi[n]) out << "," << x;
        out << "\n";
    }
}

}  // namespace lem
