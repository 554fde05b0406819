#pragma once

#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lem/errors.hpp"
#include "lem/rng.hpp"
#include "lem/tasks.hpp"

namespace lem {

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw FormatError("idx: truncated header in " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace detail

// Loads an MNIST-style IDX image/label pair as pixel sequences: each image is
// flattened along its rows into a length rows*cols sequence of single
// features scaled to [0,1]. If permutation_seed is set, one fixed random
// permutation of the positions is applied to every sequence.
inline SequenceBatch mnist_load_idx(const std::string& images_path, const std::string& labels_path,
                                    std::optional<std::uint64_t> permutation_seed = {}) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError("idx: cannot open " + labels_path);

    const std::uint32_t img_magic = detail::read_u32_be(img, images_path);
    if (img_magic != 0x00000803u)
        throw FormatError("idx: bad image magic in " + images_path);
    const std::uint32_t n_images = detail::read_u32_be(img, images_path);
    const std::uint32_t rows = detail::read_u32_be(img, images_path);
    const std::uint32_t cols = detail::read_u32_be(img, images_path);

    const std::uint32_t lab_magic = detail::read_u32_be(lab, labels_path);
    if (lab_magic != 0x00000801u)
        throw FormatError("idx: bad label magic in " + labels_path);
    const std::uint32_t n_labels = detail::read_u32_be(lab, labels_path);
    if (n_images != n_labels)
        throw FormatError("idx: image/label count mismatch (" + std::to_string(n_images) + " vs " +
                          std::to_string(n_labels) + ")");

    const std::size_t seq_len = std::size_t(rows) * std::size_t(cols);
    std::vector<unsigned char> pixels(std::size_t(n_images) * seq_len);
    if (!img.read(reinterpret_cast<char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size())))
        throw FormatError("idx: truncated image payload in " + images_path);
    std::vector<unsigned char> labels(n_labels);
    if (!lab.read(reinterpret_cast<char*>(labels.data()),
                  static_cast<std::streamsize>(labels.size())))
        throw FormatError("idx: truncated label payload in " + labels_path);

    std::vector<std::size_t> order(seq_len);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (permutation_seed) {
        Rng rng(*permutation_seed);
        rng.shuffle(order);
    }

    SequenceBatch b;
    b.count = n_images;
    b.steps = seq_len;
    b.features = 1;
    b.inputs.resize(b.count * seq_len);
    b.target_kind = TargetKind::ClassId;
    b.out_dim = 10;
    b.class_ids.resize(b.count);
    b.task = permutation_seed ? "psmnist" : "smnist";
    b.seed = permutation_seed.value_or(0);

    for (std::size_t s = 0; s < b.count; ++s) {
        const unsigned char* src = pixels.data() + s * seq_len;
        double* dst = b.inputs.data() + s * seq_len;
        for (std::size_t t = 0; t < seq_len; ++t)
            dst[t] = static_cast<double>(src[order[t]]) / 255.0;
        b.class_ids[s] = labels[s];
    }
    return b;
}

}  // namespace lem
