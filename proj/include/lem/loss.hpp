#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lem/matrix.hpp"

namespace lem {

enum class LossKind { Mse, CrossEntropy };
enum class ReadoutMode { LastStep, PerStep };

struct LossResult {
    double loss = 0.0;
    std::vector<Vector> output_grads;  // dLoss/d(output_n), one per step
};

// Target for a single sequence.
struct SeqTarget {
    enum class Kind { FinalVector, PerStep, ClassId } kind = Kind::FinalVector;
    Vector final_value;               // FinalVector
    std::vector<Vector> step_values;  // PerStep
    int class_id = -1;                // ClassId
};

// Last-step mode: 0.5 |out_N - target|^2.
// Per-step mode: (1/N) sum_n 0.5 |out_n - target_n|^2.
inline LossResult mse_loss(const std::vector<Vector>& outputs, const SeqTarget& target) {
    const std::size_t n_steps = outputs.size();
    require(n_steps >= 1, "mse_loss: no outputs");
    LossResult r;
    r.output_grads.assign(n_steps, Vector(outputs[0].size(), 0.0));
    if (target.kind == SeqTarget::Kind::FinalVector) {
        const Vector& t = target.final_value;
        require(t.size() == outputs.back().size(), "mse_loss: target size mismatch");
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double diff = outputs.back()[i] - t[i];
            r.loss += 0.5 * diff * diff;
            r.output_grads.back()[i] = diff;
        }
    } else if (target.kind == SeqTarget::Kind::PerStep) {
        require(target.step_values.size() == n_steps, "mse_loss: step count mismatch");
        const double inv_n = 1.0 / static_cast<double>(n_steps);
        for (std::size_t n = 0; n < n_steps; ++n) {
            const Vector& t = target.step_values[n];
            require(t.size() == outputs[n].size(), "mse_loss: target size mismatch");
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double diff = outputs[n][i] - t[i];
                r.loss += 0.5 * inv_n * diff * diff;
                r.output_grads[n][i] = inv_n * diff;
            }
        }
    } else {
        throw std::invalid_argument("mse_loss: class targets need cross_entropy_loss");
    }
    return r;
}

// Softmax cross entropy on the last-step logits, log-sum-exp stabilized.
inline LossResult cross_entropy_loss(const std::vector<Vector>& outputs, const SeqTarget& target) {
    require(!outputs.empty(), "cross_entropy_loss: no outputs");
    require(target.kind == SeqTarget::Kind::ClassId, "cross_entropy_loss: needs a class target");
    const Vector& logits = outputs.back();
    const auto n_classes = logits.size();
    require(target.class_id >= 0 && static_cast<std::size_t>(target.class_id) < n_classes,
            "cross_entropy_loss: class id out of range");

    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    double sum_exp = 0.0;
    for (double v : logits) sum_exp += std::exp(v - max_logit);
    const double lse = max_logit + std::log(sum_exp);

    LossResult r;
    r.loss = lse - logits[static_cast<std::size_t>(target.class_id)];
    r.output_grads.assign(outputs.size(), Vector(n_classes, 0.0));
    Vector& g = r.output_grads.back();
    for (std::size_t i = 0; i < n_classes; ++i)
        g[i] = std::exp(logits[i] - lse);
    g[static_cast<std::size_t>(target.class_id)] -= 1.0;
    return r;
}

inline LossResult sequence_loss(const std::vector<Vector>& outputs, const SeqTarget& target) {
    return target.kind == SeqTarget::Kind::ClassId ? cross_entropy_loss(outputs, target)
                                                   : mse_loss(outputs, target);
}

inline int argmax_class(const Vector& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = static_cast<int>(i);
    return best;
}

}  // namespace lem
