// Command-line front end: dataset generation, training, verification suites
// and gate-scale analysis. Exit codes: 0 success, 1 verification failure,
// 2 usage/input error, 3 training divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lem/analysis.hpp"
#include "lem/checkpoint.hpp"
#include "lem/dataset_io.hpp"
#include "lem/fhn.hpp"
#include "lem/json_io.hpp"
#include "lem/mnist.hpp"
#include "lem/train.hpp"
#include "lem/version.hpp"

namespace fs = std::filesystem;
using lem::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct ManifestScope {
    lem::RunManifest manifest;
    fs::path out_dir;

    ManifestScope(std::string command, const fs::path& out, json config, std::uint64_t seed) {
        manifest.command = std::move(command);
        manifest.resolved_config = std::move(config);
        manifest.seed = seed;
        manifest.started_at = lem::iso_timestamp();
        out_dir = out;
        fs::create_directories(out_dir);
    }

    std::string path(const std::string& name) {
        manifest.outputs.push_back((out_dir / name).string());
        return manifest.outputs.back();
    }

    void finish() {
        manifest.finished_at = lem::iso_timestamp();
        lem::write_json_file(lem::manifest_to_json(manifest), (out_dir / "manifest.json").string());
    }
};

void save_split(ManifestScope& scope, const lem::SequenceBatch& batch, const std::string& name) {
    lem::save_batch(batch, scope.path(name + ".lemd"));
    lem::write_json_file(lem::batch_sidecar_json(batch), scope.path(name + ".json"));
}

// ---- generate ---------------------------------------------------------------

struct GenerateCommon {
    std::string out;
    std::uint64_t seed = 7;
    std::size_t train_count = 1000;
    std::size_t val_count = 200;
    std::size_t test_count = 1000;
};

int run_generate_adding(const GenerateCommon& g, std::size_t n_steps) {
    json cfg{{"task", "adding"}, {"n", n_steps},      {"train", g.train_count},
             {"val", g.val_count}, {"test", g.test_count}, {"seed", g.seed}};
    ManifestScope scope("generate adding", g.out, cfg, g.seed);
    save_split(scope, lem::adding_problem(n_steps, g.train_count, lem::derive_seed(g.seed, 1)), "train");
    save_split(scope, lem::adding_problem(n_steps, g.val_count, lem::derive_seed(g.seed, 2)), "val");
    save_split(scope, lem::adding_problem(n_steps, g.test_count, lem::derive_seed(g.seed, 3)), "test");
    scope.finish();
    std::cout << "wrote adding-problem dataset (N=" << n_steps << ") to " << g.out << "\n";
    return kExitOk;
}

int run_generate_fhn(const GenerateCommon& g, const lem::FhnConfig& fhn) {
    json cfg{{"task", "fhn"},       {"tau", fhn.tau},       {"i_ext", fhn.i_ext},
             {"a", fhn.a},          {"b", fhn.b},           {"t_end", fhn.t_end},
             {"points", fhn.n_points}, {"train", g.train_count}, {"val", g.val_count},
             {"test", g.test_count},   {"seed", g.seed}};
    ManifestScope scope("generate fhn", g.out, cfg, g.seed);
    save_split(scope, lem::fhn_generate(fhn, g.train_count, lem::derive_seed(g.seed, 1)), "train");
    save_split(scope, lem::fhn_generate(fhn, g.val_count, lem::derive_seed(g.seed, 2)), "val");
    save_split(scope, lem::fhn_generate(fhn, g.test_count, lem::derive_seed(g.seed, 3)), "test");
    scope.finish();
    std::cout << "wrote FitzHugh-Nagumo dataset to " << g.out << "\n";
    return kExitOk;
}

int run_generate_noisepad(const GenerateCommon& g, std::size_t signal_len, std::size_t pad_to,
                          std::size_t features, std::size_t classes, double noise_level) {
    json cfg{{"task", "noisepad"},   {"signal_len", signal_len}, {"pad_to", pad_to},
             {"features", features}, {"classes", classes},       {"noise_level", noise_level},
             {"train", g.train_count}, {"val", g.val_count},     {"test", g.test_count},
             {"seed", g.seed}};
    ManifestScope scope("generate noisepad", g.out, cfg, g.seed);
    save_split(scope,
               lem::noise_padded_classification(signal_len, pad_to, features, classes,
                                                g.train_count, lem::derive_seed(g.seed, 1),
                                                noise_level),
               "train");
    save_split(scope,
               lem::noise_padded_classification(signal_len, pad_to, features, classes, g.val_count,
                                                lem::derive_seed(g.seed, 2), noise_level),
               "val");
    save_split(scope,
               lem::noise_padded_classification(signal_len, pad_to, features, classes,
                                                g.test_count, lem::derive_seed(g.seed, 3),
                                                noise_level),
               "test");
    scope.finish();
    std::cout << "wrote noise-padded classification dataset to " << g.out << "\n";
    return kExitOk;
}

int run_generate_mnist(const std::string& out, const std::string& images,
                       const std::string& labels, std::int64_t permute_seed) {
    std::optional<std::uint64_t> perm;
    if (permute_seed >= 0) perm = static_cast<std::uint64_t>(permute_seed);
    json cfg{{"task", "mnist-seq"},
             {"images", images},
             {"labels", labels},
             {"permute_seed", permute_seed}};
    ManifestScope scope("generate mnist-seq", out, cfg, perm.value_or(0));
    save_split(scope, lem::mnist_load_idx(images, labels, perm), "data");
    scope.finish();
    std::cout << "wrote pixel-sequence dataset to " << out << "\n";
    return kExitOk;
}

int run_generate_fastslow(const std::string& out, double tau, double t_end, double macro_dt,
                          double micro_dt, std::size_t relax_steps, const std::string& solver,
                          std::uint64_t seed) {
    json cfg{{"task", "fastslow"}, {"tau", tau},           {"t_end", t_end},
             {"macro_dt", macro_dt}, {"micro_dt", micro_dt}, {"relax_steps", relax_steps},
             {"solver", solver}};
    ManifestScope scope("generate fastslow", out, cfg, seed);

    lem::FastSlowSystem sys;
    sys.tau = tau;
    sys.f = [](const lem::Vector& psi) { return psi; };
    sys.g = [](const lem::Vector& phi, const lem::Vector&) { return lem::Vector{-phi[0]}; };
    const lem::Vector psi0{1.0}, phi0{1.0};

    auto emit = [&](const lem::FastSlowTrajectory& traj, const std::string& name,
                    const std::string& scheme) {
        lem::write_trajectory_csv(traj, scope.path(name + ".csv"));
        json meta{{"solver", scheme},
                  {"tau", tau},
                  {"t_end", t_end},
                  {"macro_steps", traj.macro_steps},
                  {"micro_steps_total", traj.micro_steps_total},
                  {"rhs_evals", traj.rhs_evals}};
        if (scheme == "hmm") {
            meta["macro_dt"] = macro_dt;
            meta["micro_dt"] = micro_dt;
            meta["relax_steps"] = relax_steps;
        }
        lem::write_json_file(meta, scope.path(name + ".json"));
    };

    if (solver == "hmm" || solver == "both") {
        const auto n = static_cast<std::size_t>(std::llround(t_end / macro_dt));
        emit(lem::hmm_solve(sys, psi0, phi0, macro_dt, micro_dt, relax_steps, n), "hmm", "hmm");
    }
    if (solver == "reference" || solver == "both")
        emit(lem::reference_stiff_solve(sys, psi0, phi0, t_end, tau / 2.0), "reference",
             "euler");
    scope.finish();
    std::cout << "wrote fast-slow trajectories to " << out << "\n";
    return kExitOk;
}

// ---- train ------------------------------------------------------------------

lem::SequenceBatch load_split(const fs::path& dir, const std::string& name) {
    const fs::path p = dir / (name + ".lemd");
    if (!fs::exists(p))
        throw lem::FormatError("train: missing dataset file " + p.string());
    return lem::load_batch(p.string());
}

template <class Ops>
int run_train_impl(const lem::TrainConfig& cfg, const lem::SequenceBatch& train_data,
                   const lem::SequenceBatch& val_data, const lem::SequenceBatch& test_data,
                   ManifestScope& scope, const std::string& resume_path) {
    std::optional<lem::TrainState<Ops>> resume;
    if (!resume_path.empty()) {
        if constexpr (std::is_same_v<Ops, lem::LemOps>)
            resume = lem::load_lem_train_checkpoint(resume_path);
        else
            resume = lem::load_lstm_train_checkpoint(resume_path);
    }
    auto result = lem::train<Ops>(cfg, train_data, val_data, test_data, std::move(resume));

    if constexpr (std::is_same_v<Ops, lem::LemOps>)
        lem::save_lem_params(result.best_params, scope.path("model.ckpt"));
    else
        lem::save_lstm_params(result.best_params, scope.path("model.ckpt"));
    lem::save_train_checkpoint(result.final_state, scope.path("train_state.ckpt"));
    lem::write_metrics_csv(result.metrics, scope.path("metrics.csv"));

    json summary = lem::metrics_summary_json(result.metrics);
    summary["task"] = train_data.task;
    summary["model"] = lem::model_kind_name(cfg.model);
    lem::write_json_file(summary, scope.path("summary.json"));
    scope.finish();

    std::cout << "final test metric (best-on-validation): " << result.metrics.final_test_metric
              << "\n";
    return kExitOk;
}

// ---- verify -----------------------------------------------------------------

struct VerifyOptions {
    std::string suite;
    std::string out = "verify_report.json";
    std::uint64_t seed = 1;
    std::size_t models = 0;  // 0 = suite default
    std::size_t steps = 0;
    std::size_t d = 0;
    std::size_t n = 0;
    double saturation_tol = 1e-9;
};

void print_report(const lem::VerificationReport& r) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.suite << "  cases=" << r.cases_run
              << "  worst_margin=" << r.worst_margin;
    for (const auto& [k, v] : r.stats) std::cout << "  " << k << "=" << v;
    std::cout << "\n";
    for (const auto& note : r.notes) std::cout << "       " << note << "\n";
}

int run_verify(const VerifyOptions& opt) {
    std::vector<lem::VerificationReport> reports;
    auto want = [&](const char* name) { return opt.suite == name || opt.suite == "all"; };

    if (want("prop1"))
        reports.push_back(lem::prop1_suite(opt.models ? opt.models : 100,
                                           opt.steps ? opt.steps : 200, 0.5, opt.seed));
    if (want("prop2")) reports.push_back(lem::prop2_suite(opt.models ? opt.models : 50, opt.seed));
    if (want("prop3")) {
        auto res = lem::prop3_scaling(opt.d ? opt.d : 16, opt.n ? opt.n : 100, {1, 10, 25, 50},
                                      {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, opt.seed);
        reports.push_back(res.report);
    }
    if (want("gradcheck"))
        reports.push_back(lem::gradcheck_suite(opt.models ? opt.models : 20, opt.seed,
                                               opt.d ? opt.d : 8, 4, opt.n ? opt.n : 16));
    if (want("equivalence"))
        reports.push_back(lem::equivalence_suite(opt.d ? opt.d : 8, 2,
                                                 opt.steps ? opt.steps : 100, opt.saturation_tol,
                                                 opt.seed));
    if (want("hmm")) reports.push_back(lem::hmm_suite(opt.seed));

    if (reports.empty()) {
        std::cerr << "unknown suite \"" << opt.suite
                  << "\"; choose from prop1, prop2, prop3, gradcheck, equivalence, hmm, all\n";
        return kExitUsage;
    }

    bool all_pass = true;
    json suites = json::array();
    for (const auto& r : reports) {
        print_report(r);
        suites.push_back(lem::verification_report_to_json(r));
        all_pass = all_pass && r.pass;
    }
    json out{{"version", lem::kVersion}, {"seed", opt.seed}, {"pass", all_pass},
             {"suites", suites}};
    lem::write_json_file(out, opt.out);
    std::cout << (all_pass ? "all checks passed" : "CHECKS FAILED") << " -> " << opt.out << "\n";
    return all_pass ? kExitOk : kExitVerifyFailed;
}

// ---- analyze ----------------------------------------------------------------

int run_analyze(const std::string& checkpoint, const std::string& data, const std::string& out,
                std::size_t max_seq) {
    json cfg{{"checkpoint", checkpoint}, {"data", data}, {"max_sequences", max_seq}};
    ManifestScope scope("analyze", out, cfg, 0);

    lem::LemParams params;
    if (lem::checkpoint_model_kind(checkpoint) != lem::ModelKind::Lem)
        throw lem::FormatError("analyze: gate analysis needs an LEM checkpoint");
    try {
        params = lem::load_lem_params(checkpoint);
    } catch (const lem::FormatError&) {
        params = lem::load_lem_train_checkpoint(checkpoint).best_params;
    }

    const lem::SequenceBatch batch = lem::load_batch(data);
    const lem::GateHistogram hist = lem::delta_t_histogram(params, batch, max_seq);
    lem::write_gate_values_csv(hist, scope.path("gates.csv"));
    lem::write_json_file(lem::gate_histogram_json(hist), scope.path("analysis.json"));
    scope.finish();

    std::cout << "gate scale span: " << hist.span_log10_dt << " (dt) / " << hist.span_log10_dt_bar
              << " (dt_bar) orders of magnitude\n";
    if (hist.exponent_dt) std::cout << "power-law exponent (dt): " << *hist.exponent_dt << "\n";
    if (hist.exponent_dt_bar)
        std::cout << "power-law exponent (dt_bar): " << *hist.exponent_dt_bar << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long Expressive Memory sequence-modeling toolkit"};
    app.set_version_flag("--version", lem::kVersion);
    app.require_subcommand(1);

    std::function<int()> action;

    // generate
    auto* gen = app.add_subcommand("generate", "generate datasets and trajectories");
    gen->require_subcommand(1);
    {
        static GenerateCommon g;
        static std::size_t adding_n = 200;
        auto* adding = gen->add_subcommand("adding", "two-marker adding problem");
        adding->add_option("--n", adding_n, "sequence length");
        adding->add_option("--count,--train", g.train_count, "training sequences");
        adding->add_option("--val", g.val_count, "validation sequences");
        adding->add_option("--test", g.test_count, "test sequences");
        adding->add_option("--seed", g.seed, "seed");
        adding->add_option("--out", g.out, "output directory")->required();
        adding->callback([&] { action = [] { return run_generate_adding(g, adding_n); }; });

        static lem::FhnConfig fhn;
        static GenerateCommon gf{.train_count = 128, .val_count = 128, .test_count = 1024};
        auto* fhn_cmd = gen->add_subcommand("fhn", "FitzHugh-Nagumo trajectory prediction");
        fhn_cmd->add_option("--tau", fhn.tau, "slow time scale");
        fhn_cmd->add_option("--i-ext", fhn.i_ext, "external current");
        fhn_cmd->add_option("--a", fhn.a, "parameter a");
        fhn_cmd->add_option("--b", fhn.b, "parameter b");
        fhn_cmd->add_option("--t-end", fhn.t_end, "integration horizon");
        fhn_cmd->add_option("--points", fhn.n_points, "samples per trajectory");
        fhn_cmd->add_option("--train", gf.train_count, "training sequences");
        fhn_cmd->add_option("--val", gf.val_count, "validation sequences");
        fhn_cmd->add_option("--test", gf.test_count, "test sequences");
        fhn_cmd->add_option("--seed", gf.seed, "seed");
        fhn_cmd->add_option("--out", gf.out, "output directory")->required();
        fhn_cmd->callback([&] { action = [] { return run_generate_fhn(gf, fhn); }; });

        static GenerateCommon gn;
        static std::size_t signal_len = 32, pad_to = 1000, features = 96, classes = 10;
        static double noise_level = 0.1;
        auto* noise = gen->add_subcommand("noisepad", "noise-padded classification");
        noise->add_option("--signal-len", signal_len, "informative prefix length");
        noise->add_option("--pad-to", pad_to, "total padded length");
        noise->add_option("--features", features, "features per step");
        noise->add_option("--classes", classes, "number of classes");
        noise->add_option("--noise-level", noise_level, "template jitter amplitude");
        noise->add_option("--train", gn.train_count, "training sequences");
        noise->add_option("--val", gn.val_count, "validation sequences");
        noise->add_option("--test", gn.test_count, "test sequences");
        noise->add_option("--seed", gn.seed, "seed");
        noise->add_option("--out", gn.out, "output directory")->required();
        noise->callback([&] {
            action = [] {
                return run_generate_noisepad(gn, signal_len, pad_to, features, classes,
                                             noise_level);
            };
        });

        static std::string mnist_out, mnist_images, mnist_labels;
        static std::int64_t permute_seed = -1;
        auto* mnist = gen->add_subcommand("mnist-seq", "pixel sequences from IDX files");
        mnist->add_option("--images", mnist_images, "IDX image file")->required();
        mnist->add_option("--labels", mnist_labels, "IDX label file")->required();
        mnist->add_option("--permute-seed", permute_seed,
                          "fixed pixel permutation seed (-1 = none)");
        mnist->add_option("--out", mnist_out, "output directory")->required();
        mnist->callback([&] {
            action = [] {
                return run_generate_mnist(mnist_out, mnist_images, mnist_labels, permute_seed);
            };
        });

        static std::string fs_out, fs_solver = "both";
        static double fs_tau = 1e-3, fs_t_end = 1.0, fs_macro = 0.05, fs_micro = 0.5;
        static std::size_t fs_relax = 20;
        static std::uint64_t fs_seed = 1;
        auto* fast = gen->add_subcommand("fastslow", "fast-slow prototype trajectories");
        fast->add_option("--tau", fs_tau, "scale separation");
        fast->add_option("--t-end", fs_t_end, "horizon");
        fast->add_option("--macro-dt", fs_macro, "slow-solver step");
        fast->add_option("--micro-dt", fs_micro, "fast relaxation step");
        fast->add_option("--relax-steps", fs_relax, "micro iterations per macro step");
        fast->add_option("--solver", fs_solver, "hmm | reference | both")
            ->check(CLI::IsMember({"hmm", "reference", "both"}));
        fast->add_option("--seed", fs_seed, "seed");
        fast->add_option("--out", fs_out, "output directory")->required();
        fast->callback([&] {
            action = [] {
                return run_generate_fastslow(fs_out, fs_tau, fs_t_end, fs_macro, fs_micro,
                                             fs_relax, fs_solver, fs_seed);
            };
        });
    }

    // train
    {
        static std::string config_path, data_dir, out_dir, resume_path;
        static std::string model_flag, loss_flag, readout_flag, optimizer_flag;
        static double lr = -1, delta_t = -1, decay_factor = -1, grad_clip = -1;
        static std::int64_t d = -1, batch = -1, epochs = -1, decay_epoch = -1, threads = -1,
                            seed = -1;
        auto* tr = app.add_subcommand("train", "train a model on a generated dataset");
        tr->add_option("--config", config_path, "JSON config file");
        tr->add_option("--data", data_dir, "dataset directory (train/val/test .lemd)")->required();
        tr->add_option("--out", out_dir, "output directory")->required();
        tr->add_option("--resume", resume_path, "training checkpoint to resume from");
        tr->add_option("--model", model_flag, "lem | lstm");
        tr->add_option("--d", d, "hidden units");
        tr->add_option("--delta-t", delta_t, "cell step size");
        tr->add_option("--lr", lr, "learning rate");
        tr->add_option("--batch", batch, "batch size");
        tr->add_option("--epochs", epochs, "epochs");
        tr->add_option("--lr-decay-factor", decay_factor, "divide lr by this after decay epoch");
        tr->add_option("--lr-decay-epoch", decay_epoch, "epoch after which lr decays");
        tr->add_option("--grad-clip", grad_clip, "global-norm gradient clip");
        tr->add_option("--seed", seed, "seed");
        tr->add_option("--threads", threads, "worker threads per batch");
        tr->add_option("--loss", loss_flag, "mse | cross_entropy");
        tr->add_option("--readout", readout_flag, "last-step | per-step");
        tr->add_option("--optimizer", optimizer_flag, "adam | sgd");
        tr->callback([&] {
            action = [] {
                const fs::path dir(data_dir);
                const lem::SequenceBatch train_data = load_split(dir, "train");
                const lem::SequenceBatch val_data = load_split(dir, "val");
                const lem::SequenceBatch test_data = load_split(dir, "test");

                lem::TrainConfig cfg;
                // dataset-driven defaults
                cfg.loss = train_data.target_kind == lem::TargetKind::ClassId
                               ? lem::LossKind::CrossEntropy
                               : lem::LossKind::Mse;
                cfg.readout = train_data.target_kind == lem::TargetKind::PerStep
                                  ? lem::ReadoutMode::PerStep
                                  : lem::ReadoutMode::LastStep;
                if (!config_path.empty()) {
                    lem::TrainConfig file_cfg =
                        lem::train_config_from_json(lem::load_json_file(config_path));
                    // keep dataset-driven loss/readout unless the file names them
                    const json raw = lem::load_json_file(config_path);
                    if (!raw.contains("loss")) file_cfg.loss = cfg.loss;
                    if (!raw.contains("readout")) file_cfg.readout = cfg.readout;
                    cfg = file_cfg;
                }
                if (!model_flag.empty()) cfg.model = lem::model_kind_from_name(model_flag);
                if (d >= 0) cfg.d = static_cast<std::size_t>(d);
                if (delta_t >= 0) cfg.delta_t = delta_t;
                if (lr >= 0) cfg.learning_rate = lr;
                if (batch >= 0) cfg.batch_size = static_cast<std::size_t>(batch);
                if (epochs >= 0) cfg.epochs = static_cast<std::size_t>(epochs);
                if (decay_factor >= 0) cfg.lr_decay_factor = decay_factor;
                if (decay_epoch >= 0) cfg.lr_decay_epoch = static_cast<std::size_t>(decay_epoch);
                if (grad_clip >= 0) cfg.grad_clip = grad_clip;
                if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
                if (threads >= 0) cfg.threads = static_cast<std::size_t>(threads);
                if (!loss_flag.empty())
                    cfg.loss = loss_flag == "mse" ? lem::LossKind::Mse : lem::LossKind::CrossEntropy;
                if (!readout_flag.empty())
                    cfg.readout = readout_flag == "per-step" ? lem::ReadoutMode::PerStep
                                                             : lem::ReadoutMode::LastStep;
                if (!optimizer_flag.empty())
                    cfg.optimizer = optimizer_flag == "sgd" ? lem::OptimizerKind::Sgd
                                                            : lem::OptimizerKind::Adam;

                ManifestScope scope("train", out_dir, lem::train_config_to_json(cfg), cfg.seed);
                if (cfg.model == lem::ModelKind::Lem)
                    return run_train_impl<lem::LemOps>(cfg, train_data, val_data, test_data, scope,
                                                       resume_path);
                return run_train_impl<lem::LstmOps>(cfg, train_data, val_data, test_data, scope,
                                                    resume_path);
            };
        });
    }

    // verify
    {
        static VerifyOptions opt;
        auto* ver = app.add_subcommand("verify", "run verification suites");
        ver->add_option("suite", opt.suite,
                        "prop1 | prop2 | prop3 | gradcheck | equivalence | hmm | all")
            ->required();
        ver->add_option("--seed", opt.seed, "seed");
        ver->add_option("--out", opt.out, "report JSON path");
        ver->add_option("--models", opt.models, "number of random models");
        ver->add_option("--steps", opt.steps, "steps per trajectory");
        ver->add_option("--d", opt.d, "hidden units");
        ver->add_option("--n", opt.n, "sequence length");
        ver->add_option("--saturation-tol", opt.saturation_tol, "equivalence gate saturation");
        ver->callback([&] { action = [] { return run_verify(opt); }; });
    }

    // analyze
    {
        static std::string checkpoint, data, out = "analysis";
        static std::size_t max_seq = 0;
        auto* an = app.add_subcommand("analyze", "gate scale histogram and power-law fit");
        an->add_option("--checkpoint", checkpoint, "LEM checkpoint")->required();
        an->add_option("--data", data, "dataset .lemd file")->required();
        an->add_option("--out", out, "output directory");
        an->add_option("--max-seq", max_seq, "cap on analyzed sequences (0 = all)");
        an->callback([&] { action = [] { return run_analyze(checkpoint, data, out, max_seq); }; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const lem::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
