#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lem/analysis.hpp"
#include "lem/gradients.hpp"
#include "lem/train.hpp"
#include "lem/version.hpp"

namespace lem {

using nlohmann::json;

inline std::string model_kind_name(ModelKind k) { return k == ModelKind::Lem ? "lem" : "lstm"; }

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "lem") return ModelKind::Lem;
    if (s == "lstm") return ModelKind::Lstm;
    throw std::invalid_argument("unknown model kind: " + s);
}

inline json train_config_to_json(const TrainConfig& c) {
    json j;
    j["model"] = model_kind_name(c.model);
    j["d"] = c.d;
    j["delta_t"] = c.delta_t;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["lr_decay_factor"] = c.lr_decay_factor;
    j["lr_decay_epoch"] = c.lr_decay_epoch;
    if (c.grad_clip) j["grad_clip"] = *c.grad_clip;
    j["seed"] = c.seed;
    j["loss"] = c.loss == LossKind::Mse ? "mse" : "cross_entropy";
    j["readout"] = c.readout == ReadoutMode::LastStep ? "last-step" : "per-step";
    j["optimizer"] = c.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
    j["threads"] = c.threads;
    return j;
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    if (j.contains("model")) c.model = model_kind_from_name(j.at("model").get<std::string>());
    if (j.contains("d")) c.d = j.at("d").get<std::size_t>();
    if (j.contains("delta_t")) c.delta_t = j.at("delta_t").get<double>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("lr_decay_factor")) c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    if (j.contains("lr_decay_epoch")) c.lr_decay_epoch = j.at("lr_decay_epoch").get<std::size_t>();
    if (j.contains("grad_clip")) c.grad_clip = j.at("grad_clip").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("loss")) {
        const auto s = j.at("loss").get<std::string>();
        if (s == "mse")
            c.loss = LossKind::Mse;
        else if (s == "cross_entropy")
            c.loss = LossKind::CrossEntropy;
        else
            throw std::invalid_argument("unknown loss kind: " + s);
    }
    if (j.contains("readout")) {
        const auto s = j.at("readout").get<std::string>();
        if (s == "last-step")
            c.readout = ReadoutMode::LastStep;
        else if (s == "per-step")
            c.readout = ReadoutMode::PerStep;
        else
            throw std::invalid_argument("unknown readout mode: " + s);
    }
    if (j.contains("optimizer")) {
        const auto s = j.at("optimizer").get<std::string>();
        if (s == "adam")
            c.optimizer = OptimizerKind::Adam;
        else if (s == "sgd")
            c.optimizer = OptimizerKind::Sgd;
        else
            throw std::invalid_argument("unknown optimizer: " + s);
    }
    if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
    return c;
}

inline json verification_report_to_json(const VerificationReport& r) {
    json j;
    j["suite"] = r.suite;
    j["cases_run"] = r.cases_run;
    j["worst_margin"] = r.worst_margin;
    j["pass"] = r.pass;
    json stats = json::object();
    for (const auto& [k, v] : r.stats) stats[k] = v;
    j["stats"] = stats;
    j["notes"] = r.notes;
    return j;
}

inline json gradient_report_to_json(const GradientReport& r) {
    json j;
    j["eta"] = r.eta;
    j["x_hat"] = r.x_hat;
    j["bound_small_dt"] = r.bound_small_dt;
    j["bound_unconditional"] = r.bound_unconditional;
    j["empirical_max_abs"] = r.empirical_max_abs;
    j["pass"] = r.pass;
    return j;
}

inline json batch_sidecar_json(const SequenceBatch& b) {
    json j;
    j["task"] = b.task;
    j["count"] = b.count;
    j["steps"] = b.steps;
    j["features"] = b.features;
    j["out_dim"] = b.out_dim;
    j["seed"] = b.seed;
    switch (b.target_kind) {
        case TargetKind::PerSequence: j["target_kind"] = "per_sequence"; break;
        case TargetKind::PerStep: j["target_kind"] = "per_step"; break;
        case TargetKind::ClassId: j["target_kind"] = "class_id"; break;
    }
    return j;
}

// FNV-1a over the raw bits; used to summarize a run's numeric outputs so two
// runs can be compared for bit-identity at a glance.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t metrics_digest(const Metrics& m) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& row : m.rows) {
        // wall time excluded: it is measurement, not computation
        h = fnv1a64(&row.train_loss, sizeof(double), h);
        h = fnv1a64(&row.val_metric, sizeof(double), h);
        h = fnv1a64(&row.test_metric, sizeof(double), h);
    }
    h = fnv1a64(&m.final_test_metric, sizeof(double), h);
    return h;
}

inline json metrics_summary_json(const Metrics& m) {
    json j;
    j["epochs"] = m.rows.size();
    j["best_epoch"] = m.best_epoch;
    j["best_val_metric"] = m.best_val_metric;
    j["final_test_metric"] = m.final_test_metric;
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(metrics_digest(m)));
    j["metrics_digest"] = digest;
    return j;
}

inline void write_metrics_csv(const Metrics& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("metrics csv: cannot write " + path);
    out << "epoch,train_loss,val_metric,test_metric,seconds\n";
    out.precision(17);
    for (std::size_t e = 0; e < m.rows.size(); ++e)
        out << (e + 1) << ',' << m.rows[e].train_loss << ',' << m.rows[e].val_metric << ','
            << m.rows[e].test_metric << ',' << m.rows[e].seconds << "\n";
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("json: cannot write " + path);
    out << j.dump(2) << "\n";
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("json: cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Every CLI run leaves one of these next to its outputs.
struct RunManifest {
    std::string command;
    json resolved_config;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
};

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["config"] = m.resolved_config;
    j["seed"] = m.seed;
    j["version"] = kVersion;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["outputs"] = m.outputs;
    return j;
}

inline json gate_histogram_json(const GateHistogram& h) {
    json j;
    j["count_dt"] = h.dt_values.size();
    j["count_dt_bar"] = h.dt_bar_values.size();
    j["span_log10_dt"] = h.span_log10_dt;
    j["span_log10_dt_bar"] = h.span_log10_dt_bar;
    if (h.exponent_dt) j["exponent_dt"] = *h.exponent_dt;
    if (h.exponent_dt_bar) j["exponent_dt_bar"] = *h.exponent_dt_bar;
    return j;
}

inline void write_gate_values_csv(const GateHistogram& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("gate csv: cannot write " + path);
    out << "family,value\n";
    out.precision(17);
    for (double v : h.dt_values) out << "dt," << v << "\n";
    for (double v : h.dt_bar_values) out << "dt_bar," << v << "\n";
}

}  // namespace lem
