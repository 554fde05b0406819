#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lem/cell.hpp"
#include "lem/loss.hpp"
#include "lem/matrix.hpp"
#include "lem/rng.hpp"

namespace lem {

enum class TargetKind { PerSequence, PerStep, ClassId };

// Batched sequence data. Inputs are stored row-major as
// [sample][step][feature]; targets depend on the task kind.
struct SequenceBatch {
    std::size_t count = 0;
    std::size_t steps = 0;
    std::size_t features = 0;
    std::vector<double> inputs;

    TargetKind target_kind = TargetKind::PerSequence;
    std::size_t out_dim = 0;          // regression dims, or number of classes
    std::vector<double> targets;      // PerSequence: count*out_dim; PerStep: count*steps*out_dim
    std::vector<int> class_ids;       // ClassId: count entries

    std::string task;
    std::uint64_t seed = 0;

    const double* input_row(std::size_t sample, std::size_t step) const {
        return inputs.data() + (sample * steps + step) * features;
    }

    SequenceView sequence(std::size_t sample) const {
        return {inputs.data() + sample * steps * features, steps, features};
    }

    SeqTarget target_for(std::size_t sample) const {
        SeqTarget t;
        switch (target_kind) {
            case TargetKind::PerSequence: {
                t.kind = SeqTarget::Kind::FinalVector;
                const double* base = targets.data() + sample * out_dim;
                t.final_value.assign(base, base + out_dim);
                break;
            }
            case TargetKind::PerStep: {
                t.kind = SeqTarget::Kind::PerStep;
                t.step_values.resize(steps);
                const double* base = targets.data() + sample * steps * out_dim;
                for (std::size_t n = 0; n < steps; ++n)
                    t.step_values[n].assign(base + n * out_dim, base + (n + 1) * out_dim);
                break;
            }
            case TargetKind::ClassId:
                t.kind = SeqTarget::Kind::ClassId;
                t.class_id = class_ids[sample];
                break;
        }
        return t;
    }
};

// The adding problem: two-feature sequences where feature 0 is U([0,1)) noise
// and feature 1 marks exactly two positions with 1, one in each half. The
// target is the sum of the feature-0 values at the marked positions, so
// always predicting 1 yields a mean squared error of 1/6.
inline SequenceBatch adding_problem(std::size_t n_steps, std::size_t count, std::uint64_t seed) {
    require(n_steps >= 2, "adding_problem: need sequence length >= 2");
    require(count >= 1, "adding_problem: need at least one sample");
    SequenceBatch b;
    b.count = count;
    b.steps = n_steps;
    b.features = 2;
    b.inputs.assign(count * n_steps * 2, 0.0);
    b.target_kind = TargetKind::PerSequence;
    b.out_dim = 1;
    b.targets.resize(count);
    b.task = "adding";
    b.seed = seed;

    const std::size_t half = n_steps / 2;
    for (std::size_t s = 0; s < count; ++s) {
        Rng rng(derive_seed(seed, s));
        double* row = b.inputs.data() + s * n_steps * 2;
        for (std::size_t t = 0; t < n_steps; ++t) row[2 * t] = rng.next_unit();
        const std::size_t first = rng.index(half);
        const std::size_t second = half + rng.index(n_steps - half);
        row[2 * first + 1] = 1.0;
        row[2 * second + 1] = 1.0;
        b.targets[s] = row[2 * first] + row[2 * second];
    }
    return b;
}

// Class-conditioned signal in the first `signal_len` steps (a per-class
// template plus uniform jitter), then pure U([0,1)) noise padding out to
// `pad_to` steps. The label is only recoverable from the prefix.
inline SequenceBatch noise_padded_classification(std::size_t signal_len, std::size_t pad_to,
                                                 std::size_t feature_dim, std::size_t n_classes,
                                                 std::size_t count, std::uint64_t seed,
                                                 double noise_level = 0.1) {
    require(pad_to > signal_len, "noise_padded_classification: pad_to must exceed signal_len");
    require(signal_len >= 1 && feature_dim >= 1 && n_classes >= 2 && count >= 1,
            "noise_padded_classification: bad dimensions");
    SequenceBatch b;
    b.count = count;
    b.steps = pad_to;
    b.features = feature_dim;
    b.inputs.assign(count * pad_to * feature_dim, 0.0);
    b.target_kind = TargetKind::ClassId;
    b.out_dim = n_classes;
    b.class_ids.resize(count);
    b.task = "noisepad";
    b.seed = seed;

    Rng template_rng(derive_seed(seed, 0xC1A55));
    std::vector<double> templates(n_classes * signal_len * feature_dim);
    for (auto& x : templates) x = template_rng.next_unit();

    for (std::size_t s = 0; s < count; ++s) {
        Rng rng(derive_seed(seed, s + 1));
        const int cls = static_cast<int>(rng.index(n_classes));
        b.class_ids[s] = cls;
        double* row = b.inputs.data() + s * pad_to * feature_dim;
        const double* tpl = templates.data() + static_cast<std::size_t>(cls) * signal_len * feature_dim;
        for (std::size_t t = 0; t < signal_len * feature_dim; ++t)
            row[t] = tpl[t] + noise_level * (rng.next_unit() - 0.5);
        for (std::size_t t = signal_len * feature_dim; t < pad_to * feature_dim; ++t)
            row[t] = rng.next_unit();
    }
    return b;
}

}  // namespace lem
