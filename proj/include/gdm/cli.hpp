#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gdm/checkpoint.hpp"
#include "gdm/config.hpp"
#include "gdm/dataset_io.hpp"
#include "gdm/diffusion.hpp"
#include "gdm/errors.hpp"
#include "gdm/fisher_rao.hpp"
#include "gdm/metrics.hpp"
#include "gdm/mlp.hpp"
#include "gdm/parallel.hpp"
#include "gdm/pgm.hpp"
#include "gdm/sampler.hpp"
#include "gdm/schedule.hpp"
#include "gdm/testbed.hpp"

namespace gdm::cli {

// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
inline constexpr int kOk = 0;
inline constexpr int kConfigExit = 2;
inline constexpr int kNumericalExit = 3;
inline constexpr int kIoExit = 4;

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << content;
    if (!os) throw IoError("write failed: " + path);
}

inline std::string req_str(const Config& cfg, const std::string& key) {
    auto v = cfg.opt_str(key);
    if (!v || v->empty()) throw ConfigError("missing required key '" + key + "'");
    return *v;
}

inline std::vector<double> parse_num_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& tok : split(text, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("");
        } catch (...) {
            throw ConfigError("key '" + key + "': expected comma-separated numbers");
        }
    }
    return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (double v : parse_num_list(key, text)) out.push_back(static_cast<int>(v));
    return out;
}

/// Run manifest + a rerunnable flat config, both location independent.
inline void finish_run(const std::string& out, const std::string& command, const Config& cfg,
                       nlohmann::json extras = {}) {
    auto resolved = cfg.resolved_without({"out"});
    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["config"] = resolved;
    for (auto& [k, v] : extras.items()) manifest[k] = v;
    write_text(out + "/manifest.json", manifest.dump(2) + "\n");

    std::string flat;
    for (const auto& [k, v] : resolved) flat += k + "=" + v + "\n";
    write_text(out + "/resolved.cfg", flat);
}

} // namespace detail

struct ScheduleSpec {
    Schedule schedule;
    std::string requested_kind;
    std::string resolved_kind;
    double norm_a = 0.0;
    int dim = 0;
};

/// Builds one schedule kind from the shared config keys. A geodesic whose
/// alpha gap is inside the degeneracy tolerance routes to the exponential
/// special case.
inline ScheduleSpec make_schedule(const Config& cfg, const std::string& kind, int dim_hint) {
    const double alpha0 = cfg.num("alpha0", 1.0);
    const double sigma0 = cfg.num("sigma0", 0.002);
    const double alpha1 = cfg.num("alpha1", 1.0);
    const double sigma1 = cfg.num("sigma1", 80.0);
    const int dim = static_cast<int>(cfg.integer("dim", dim_hint));
    const double norm_a = cfg.num("norm_a", std::sqrt(static_cast<double>(dim)));
    const double beta_lo = cfg.num("beta_lo", 0.1);
    const double beta_hi = cfg.num("beta_hi", 20.0);
    const double cosine_offset = cfg.num("cosine_offset", 0.008);

    if (kind == "geodesic") {
        try {
            return {Schedule::geodesic({alpha0, sigma0, alpha1, sigma1}, norm_a, dim),
                    kind, "geodesic", norm_a, dim};
        } catch (const DegenerateAlpha&) {
            return {Schedule::exponential_ve(sigma0, sigma1), kind, "exponential_ve", norm_a, dim};
        }
    }
    if (kind == "exponential_ve")
        return {Schedule::exponential_ve(sigma0, sigma1), kind, kind, norm_a, dim};
    if (kind == "linear_sigma")
        return {Schedule::linear_sigma(sigma0, sigma1), kind, kind, norm_a, dim};
    if (kind == "linear_beta")
        return {Schedule::linear_beta(beta_lo, beta_hi), kind, kind, norm_a, dim};
    if (kind == "cosine_alpha")
        return {Schedule::cosine_alpha(cosine_offset), kind, kind, norm_a, dim};
    throw ConfigError("unknown schedule kind '" + kind + "'");
}

inline ScheduleSpec schedule_from_config(const Config& cfg, int dim_hint) {
    return make_schedule(cfg, cfg.str("kind", "exponential_ve"), dim_hint);
}

// ---------------------------------------------------------------------------
// schedule: emit the (t, alpha, sigma, derivatives, snr) table as CSV.

inline int cmd_schedule(Config& cfg, const std::string& out) {
    ScheduleSpec spec = schedule_from_config(cfg, 256);
    long grid = cfg.integer("grid", 257);
    cfg.integer("seed", 0); // accepted for uniformity; the table is deterministic
    cfg.check_consumed();

    auto table = schedule_table(spec.schedule, static_cast<int>(grid));
    std::ostringstream csv;
    write_schedule_csv(csv, table);
    detail::ensure_dir(out);
    detail::write_text(out + "/schedule.csv", csv.str());

    nlohmann::json extras;
    extras["resolved_kind"] = spec.resolved_kind;
    detail::finish_run(out, "schedule", cfg, extras);
    return kOk;
}

// ---------------------------------------------------------------------------
// diagnose: Fisher-Rao speed/length/energy/momentum report per kind.

inline int cmd_diagnose(Config& cfg, const std::string& out) {
    std::string kinds_text = cfg.str("kinds", "geodesic,linear_sigma");
    long samples = cfg.integer("samples", 100);
    long quad = cfg.integer("quad", kDefaultQuadratureIntervals);
    double t_lo = cfg.num("t_lo", 0.0);
    double t_hi = cfg.num("t_hi", 1.0);
    cfg.integer("seed", 0);

    std::vector<ScheduleSpec> specs;
    for (const auto& token : split(kinds_text, ',')) {
        if (token.empty()) throw ConfigError("empty entry in 'kinds'");
        specs.push_back(make_schedule(cfg, token, 256));
    }
    cfg.check_consumed();
    if (specs.empty()) throw ConfigError("'kinds' must name at least one schedule");

    // Energy/length comparisons are endpoint-relative; a joint report is
    // refused unless every kind shares both endpoints.
    for (std::size_t i = 1; i < specs.size(); ++i)
        require_matched_endpoints(specs[0].schedule, specs[i].schedule, 1e-9, t_lo, t_hi);

    nlohmann::json report = nlohmann::json::array();
    for (const auto& spec : specs) {
        SchedulePoint start = spec.schedule.at(t_lo);
        if (!(start.sigma > 0.0))
            throw ConfigError("kind '" + spec.resolved_kind +
                              "' has sigma = 0 at t_lo; its Fisher-Rao path integrals diverge "
                              "from exactly zero, set t_lo > 0");
        PathDiagnostics d = diagnose_path(spec.schedule, spec.resolved_kind, spec.norm_a, spec.dim,
                                          static_cast<int>(samples), static_cast<int>(quad), t_lo,
                                          t_hi);
        nlohmann::json entry;
        entry["kind"] = d.kind;
        entry["length"] = d.length;
        entry["energy"] = d.energy;
        entry["energy_over_half_length_sq"] = d.energy_over_half_length_sq;
        entry["speed_cv"] = d.speed_cv;
        entry["momentum_spread"] = d.momentum_spread;
        report.push_back(entry);
    }

    detail::ensure_dir(out);
    detail::write_text(out + "/diagnostics.json", report.dump(2) + "\n");
    detail::finish_run(out, "diagnose", cfg);
    return kOk;
}

// ---------------------------------------------------------------------------
// train: conditional diffusion training on the synthetic image tasks.

namespace detail {

struct TaskSetup {
    Dataset dataset;
    ToyImageRecipe recipe;
};

inline TaskSetup dataset_from_config(const Config& cfg, std::uint64_t default_seed,
                                     const std::string& count_key, long default_count) {
    ToyImageRecipe recipe;
    std::string task = cfg.str("task", "denoise");
    if (task == "denoise")
        recipe.task = ToyTask::denoise;
    else if (task == "sr")
        recipe.task = ToyTask::super_resolution;
    else if (task == "unconditional")
        recipe.task = ToyTask::unconditional;
    else
        throw ConfigError("task must be one of denoise|sr|unconditional");
    recipe.side = static_cast<int>(cfg.integer("side", 16));
    recipe.count = static_cast<int>(cfg.integer(count_key, default_count));
    recipe.noise_std = cfg.num("noise_std", 0.3);
    recipe.max_shapes = static_cast<int>(cfg.integer("max_shapes", 3));
    recipe.seed = static_cast<std::uint64_t>(cfg.integer("data_seed", static_cast<long>(default_seed)));
    return {make_toy_images(recipe), recipe};
}

} // namespace detail

inline int cmd_train(Config& cfg, const std::string& out) {
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
    detail::TaskSetup setup = detail::dataset_from_config(cfg, seed, "train_count", 2048);
    Dataset& dataset = setup.dataset;

    ScheduleSpec spec = schedule_from_config(cfg, dataset.dim);
    if (spec.dim != dataset.dim)
        throw ConfigError("schedule dim must match side*side for image tasks");

    TrainingConfig tcfg;
    tcfg.batch = static_cast<int>(cfg.integer("batch", 16));
    tcfg.lr = cfg.num("lr", 2e-4);
    tcfg.beta1 = cfg.num("beta1", 0.9);
    tcfg.beta2 = cfg.num("beta2", 0.999);
    tcfg.adam_eps = cfg.num("adam_eps", 1e-8);
    tcfg.iterations = cfg.integer("iters", 5000);
    tcfg.seed = seed;

    std::vector<int> hidden = detail::parse_int_list("hidden", cfg.str("hidden", "128,128,128"));
    long time_features = cfg.integer("time_features", 16);
    auto resume = cfg.opt_str("resume");
    cfg.check_consumed();

    MlpDenoiser model;
    AdamState state;
    long start_iteration = 0;
    if (resume) {
        model = load_checkpoint(*resume + "/model.gdmk");
        start_iteration = load_optimizer_state(*resume + "/model.gdms", state);
        if (model.config().dim != dataset.dim ||
            model.config().conditions != dataset.condition_count)
            throw ConfigError("resume checkpoint does not match the configured task");
        if (state.m.size() != model.param_count())
            throw ConfigError("resume optimizer state does not match the checkpoint");
    } else {
        MlpConfig mcfg{dataset.dim, dataset.condition_count, hidden,
                       static_cast<int>(time_features)};
        model = MlpDenoiser(mcfg, seed);
        state.reset(model.param_count());
    }
    precondition_for(model, spec.schedule);

    TrainResult result = train(model, dataset, spec.schedule, tcfg, &state, start_iteration);

    detail::ensure_dir(out);
    save_checkpoint(out + "/model.gdmk", model);
    save_optimizer_state(out + "/model.gdms", state, start_iteration + tcfg.iterations);

    std::string csv = "iter,loss\n";
    char line[64];
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
        std::snprintf(line, sizeof(line), "%ld,%.17g\n", start_iteration + static_cast<long>(i),
                      result.loss_trace[i]);
        csv += line;
    }
    detail::write_text(out + "/loss.csv", csv);

    nlohmann::json extras;
    extras["resolved_kind"] = spec.resolved_kind;
    extras["param_count"] = model.param_count();
    extras["start_iteration"] = start_iteration;
    extras["final_loss"] = result.loss_trace.empty() ? 0.0 : result.loss_trace.back();
    detail::finish_run(out, "train", cfg, extras);
    return kOk;
}

// ---------------------------------------------------------------------------
// sample: deterministic truncated (or full) sampling runs.

inline int cmd_sample(Config& cfg, const std::string& out) {
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed", 1));
    const long steps = cfg.integer("steps", 6);
    const std::string ratio_text = cfg.str("ratio", "3");
    const long count = cfg.integer("count", 16);
    const std::string denoiser_key = cfg.str("denoiser", "oracle");
    const std::string mode = cfg.str("mode", "toy");

    if (count < 1) throw ConfigError("count must be >= 1");
    SamplerConfig scfg;
    scfg.steps = static_cast<int>(steps);
    scfg.seed = seed;
    if (ratio_text == "full") {
        scfg.truncation_ratio.reset();
    } else {
        scfg.truncation_ratio = detail::parse_num_list("ratio", ratio_text).at(0);
    }

    detail::ensure_dir(out);
    nlohmann::json extras;

    if (mode == "gaussian") {
        GaussianTarget target;
        target.mean = detail::parse_num_list("oracle_mean", detail::req_str(cfg, "oracle_mean"));
        target.variance = detail::parse_num_list("oracle_var", detail::req_str(cfg, "oracle_var"));
        target.validate();
        const int dim = target.dim();
        ScheduleSpec spec = schedule_from_config(cfg, dim);
        if (denoiser_key != "oracle")
            throw ConfigError("mode=gaussian supports only denoiser=oracle");
        cfg.check_consumed();

        auto oracle = analytic_oracle(target, spec.schedule);
        TimeGrid grid = make_time_grid(spec.schedule, scfg);

        std::vector<std::vector<double>> outputs(count);
        parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
            outputs[i] = sample(scfg, spec.schedule, oracle, dim, {}, i);
        });

        std::string csv;
        for (int k = 0; k < dim; ++k) csv += (k ? ",c" : "c") + std::to_string(k);
        csv += "\n";
        char num[40];
        for (const auto& row : outputs) {
            for (int k = 0; k < dim; ++k) {
                std::snprintf(num, sizeof(num), k ? ",%.17g" : "%.17g", row[k]);
                csv += num;
            }
            csv += "\n";
        }
        detail::write_text(out + "/samples.csv", csv);
        extras["resolved_kind"] = spec.resolved_kind;
        extras["grid_knots"] = grid.knots;
        detail::finish_run(out, "sample", cfg, extras);
        return kOk;
    }
    if (mode != "toy") throw ConfigError("mode must be toy or gaussian");

    detail::TaskSetup setup = detail::dataset_from_config(cfg, seed + 1, "count", count);
    Dataset& dataset = setup.dataset;
    ScheduleSpec spec = schedule_from_config(cfg, dataset.dim);
    cfg.check_consumed();

    if (denoiser_key == "oracle")
        throw ConfigError(
            "the analytic oracle pairs with mode=gaussian; toy tasks need a trained checkpoint");
    MlpDenoiser model = load_checkpoint(denoiser_key);
    if (model.config().dim != dataset.dim ||
        model.config().conditions != dataset.condition_count)
        throw ConfigError("checkpoint does not match the configured task");
    precondition_for(model, spec.schedule);

    TimeGrid grid = make_time_grid(spec.schedule, scfg);

    const std::size_t n = dataset.items.size();
    std::vector<std::vector<double>> outputs(n);
    parallel_for(n, [&](std::size_t i) {
        const Sample& item = dataset.items[i];
        outputs[i] = sample(scfg, spec.schedule, model, dataset.dim, item.conditions, i);
    });

    std::vector<std::vector<double>> references, inputs;
    references.reserve(n);
    inputs.reserve(n);
    for (const auto& item : dataset.items) {
        references.push_back(item.x0);
        if (!item.conditions.empty()) inputs.push_back(item.conditions.front());
    }
    save_images_dir(out + "/output", outputs, dataset.height, dataset.width);
    save_images_dir(out + "/reference", references, dataset.height, dataset.width);
    if (!inputs.empty()) save_images_dir(out + "/input", inputs, dataset.height, dataset.width);

    extras["resolved_kind"] = spec.resolved_kind;
    extras["grid_knots"] = grid.knots;
    detail::finish_run(out, "sample", cfg, extras);
    return kOk;
}

// ---------------------------------------------------------------------------
// eval: PSNR/SSIM report comparing two image directories.

inline int cmd_eval(Config& cfg, const std::string& out) {
    std::string ref_dir = detail::req_str(cfg, "ref_dir");
    std::string gen_dir = detail::req_str(cfg, "gen_dir");
    cfg.integer("seed", 0);
    cfg.check_consumed();

    std::vector<Image> refs = load_images_dir(ref_dir);
    std::vector<Image> gens = load_images_dir(gen_dir);
    if (refs.empty()) throw ConfigError("ref_dir contains no images");
    if (refs.size() != gens.size())
        throw ConfigError("image counts differ: " + std::to_string(refs.size()) + " vs " +
                          std::to_string(gens.size()));

    std::vector<double> psnrs, ssims;
    nlohmann::json per_image = nlohmann::json::array();
    for (std::size_t i = 0; i < refs.size(); ++i) {
        double p = psnr(gens[i], refs[i]);
        double s = ssim(gens[i], refs[i]);
        psnrs.push_back(p);
        ssims.push_back(s);
        per_image.push_back({{"index", i}, {"psnr", p}, {"ssim", s}});
    }
    auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / v.size();
    };

    nlohmann::json report;
    report["count"] = refs.size();
    report["psnr_mean"] = mean(psnrs);
    report["psnr_median"] = median(psnrs);
    report["ssim_mean"] = mean(ssims);
    report["ssim_median"] = median(ssims);
    report["per_image"] = per_image;

    detail::ensure_dir(out);
    detail::write_text(out + "/metrics.json", report.dump(2) + "\n");
    detail::finish_run(out, "eval", cfg);
    std::cout << "eval: count=" << refs.size() << " psnr_median=" << median(psnrs)
              << " ssim_median=" << median(ssims) << "\n";
    return kOk;
}

inline int run_command(const std::vector<std::string>& args);

// ---------------------------------------------------------------------------
// sweep: run one command over a grid of parameter tuples.

inline int cmd_sweep(Config& cfg, const std::string& out) {
    std::string command = cfg.str("sweep_command", "schedule");
    static const std::set<std::string> runnable = {"schedule", "diagnose", "train", "sample", "eval"};
    if (!runnable.count(command)) throw ConfigError("sweep_command must name a runnable command");

    std::vector<std::string> keys = split(detail::req_str(cfg, "sweep_keys"), ',');
    std::vector<std::string> tuples = split(detail::req_str(cfg, "sweep_vals"), ';');
    if (keys.empty() || tuples.empty()) throw ConfigError("sweep_keys/sweep_vals must be non-empty");

    // Remaining keys pass through to the swept command, which performs its
    // own validation and unknown-key rejection.
    std::vector<std::vector<std::string>> run_args;
    for (std::size_t r = 0; r < tuples.size(); ++r) {
        std::vector<std::string> values = split(tuples[r], ',');
        if (values.size() != keys.size())
            throw ConfigError("sweep_vals tuple '" + tuples[r] + "' does not match sweep_keys");
        char dir[32];
        std::snprintf(dir, sizeof(dir), "/run_%03zu", r);
        std::vector<std::string> sub = {command, "--out", out + dir};
        for (const auto& [k, v] : cfg.passthrough({"sweep_command", "sweep_keys", "sweep_vals", "out"})) {
            sub.push_back("--set");
            sub.push_back(k + "=" + v);
        }
        for (std::size_t k = 0; k < keys.size(); ++k) {
            sub.push_back("--set");
            sub.push_back(keys[k] + "=" + values[k]);
        }
        run_args.push_back(std::move(sub));
    }

    std::vector<int> codes(run_args.size(), 0);
    parallel_for(run_args.size(), [&](std::size_t i) { codes[i] = run_command(run_args[i]); });

    detail::ensure_dir(out);
    nlohmann::json extras;
    extras["runs"] = run_args.size();
    extras["exit_codes"] = codes;
    detail::finish_run(out, "sweep", cfg, extras);
    for (int c : codes)
        if (c != 0) return c;
    return kOk;
}

// ---------------------------------------------------------------------------

inline void print_usage(std::ostream& os) {
    os << "usage: gdm <schedule|diagnose|train|sample|eval|sweep> [options]\n"
          "  --config PATH   load key=value config file\n"
          "  --seed INT      override the seed\n"
          "  --out DIR       output directory (default gdm_out)\n"
          "  --set KEY=VAL   override any config key\n";
}

inline int run_command_impl(const std::vector<std::string>& args) {
    if (args.empty()) {
        print_usage(std::cerr);
        return kConfigExit;
    }
    const std::string& command = args[0];
    if (command == "help" || command == "--help" || command == "-h") {
        print_usage(std::cout);
        return kOk;
    }

    Config cfg;
    std::string out = "gdm_out";
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& flag = args[i];
        auto next = [&]() -> const std::string& {
            if (i + 1 >= args.size()) throw ConfigError("flag " + flag + " needs a value");
            return args[++i];
        };
        if (flag == "--config") {
            cfg.load_file(next());
        } else if (flag == "--seed") {
            cfg.set("seed", next());
        } else if (flag == "--out") {
            out = next();
        } else if (flag == "--set") {
            const std::string& kv = next();
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        } else {
            throw ConfigError("unknown flag '" + flag + "'");
        }
    }

    if (command == "schedule") return cmd_schedule(cfg, out);
    if (command == "diagnose") return cmd_diagnose(cfg, out);
    if (command == "train") return cmd_train(cfg, out);
    if (command == "sample") return cmd_sample(cfg, out);
    if (command == "eval") return cmd_eval(cfg, out);
    if (command == "sweep") return cmd_sweep(cfg, out);
    throw ConfigError("unknown command '" + command + "'");
}

inline int run_command(const std::vector<std::string>& args) {
    try {
        return run_command_impl(args);
    } catch (const NonFiniteLoss& e) {
        std::cerr << "gdm: numerical failure: " << e.what() << "\n";
        return kNumericalExit;
    } catch (const NonFinite& e) {
        std::cerr << "gdm: numerical failure: " << e.what() << "\n";
        return kNumericalExit;
    } catch (const IoError& e) {
        std::cerr << "gdm: io error: " << e.what() << "\n";
        return kIoExit;
    } catch (const Error& e) {
        // remaining library errors are configuration/validation failures
        std::cerr << "gdm: " << e.what() << "\n";
        return kConfigExit;
    } catch (const std::exception& e) {
        std::cerr << "gdm: " << e.what() << "\n";
        return kNumericalExit;
    }
}

} // namespace gdm::cli
