#include "commands.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "gradeprobe/analytics.hpp"
#include "gradeprobe/config.hpp"
#include "gradeprobe/episode_log.hpp"
#include "gradeprobe/errors.hpp"
#include "gradeprobe/grade_service.hpp"
#include "gradeprobe/presets.hpp"
#include "gradeprobe/text.hpp"
#include "gradeprobe/trainer.hpp"

namespace gradeprobe::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("gradeprobe", sink);
    logger->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::info;
    if (const char* env = std::getenv("GRADE_PROBE_LOG_LEVEL"); env && *env) {
        level = spdlog::level::from_str(env);
    }
    logger->set_level(level);
    return logger;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<fs::path> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<EpisodeLog> load_logs(const std::string& pattern) {
    const auto paths = expand_glob(pattern);
    if (paths.empty()) throw InputError("no logs matched '" + pattern + "'");
    std::vector<EpisodeLog> logs;
    for (const auto& p : paths) logs.push_back(read_episode_log(p));
    return logs;
}

// ─── train ────────────────────────────────────────────────────────────────────

struct TrainOptions {
    std::string config_path;
    std::string out_dir;
    std::string responses_path;
    bool parallel = false;
};

struct RunOutcome {
    int run_id = 0;
    std::uint64_t seed = 0;
    fs::path log_path;
    fs::path policy_path;
    long episodes = 0;
    long steps = 0;
    std::string error;
    bool transport_failure = false;
};

RunOutcome execute_run(const ExperimentConfig& cfg, const TrainEnvironment& env, int run_id, const fs::path& out_dir,
                       spdlog::logger& log) {
    RunOutcome outcome;
    outcome.run_id = run_id;
    outcome.seed = run_seed(cfg.run.rng_seed, run_id);
    const std::string stem = "exp" + std::to_string(cfg.experiment_id) + "_run" + std::to_string(run_id);
    outcome.log_path = out_dir / ("episodes_" + stem + ".jsonl");
    outcome.policy_path = out_dir / ("policy_" + stem + ".json");

    EpisodeLogWriter writer(outcome.log_path, LogHeader{kEpisodeLogVersion, cfg.experiment_id, run_id});
    try {
        auto grader = make_grader(cfg.grader);
        const auto observer = [&](const UpdateSummary& s) {
            if (s.update_index % 50 == 0) {
                log.debug("run {} update {}: episodes={} steps={} batch_return={:.3f} entropy={:.3f}", run_id,
                          s.update_index, s.episodes_so_far, s.steps_so_far, s.batch_mean_return,
                          s.last_epoch.entropy);
            }
        };
        TrainResult result = train_run(
            cfg.run, run_id, env, *grader, [&](const EpisodeRecord& r) { writer.append(r); }, observer);
        outcome.episodes = result.episodes;
        outcome.steps = result.steps;

        PolicyDocument doc;
        doc.params = std::move(result.params);
        doc.featurizer = env.featurizer;
        doc.experiment_id = cfg.experiment_id;
        doc.rng_seed = outcome.seed;
        write_file(outcome.policy_path, policy_to_json(doc));
        log.info("run {} finished: {} episodes, {} steps -> {}", run_id, outcome.episodes, outcome.steps,
                 outcome.log_path.string());
    } catch (const TransportError& e) {
        outcome.error = e.what();
        outcome.transport_failure = true;
        outcome.episodes = writer.records_written();
    } catch (const std::exception& e) {
        outcome.error = e.what();
        outcome.episodes = writer.records_written();
    }
    return outcome;
}

int cmd_train(const TrainOptions& opts, std::ostream& out, spdlog::logger& log) {
    ExperimentConfig cfg = load_experiment_config(opts.config_path);
    if (!opts.responses_path.empty()) cfg.responses_path = opts.responses_path;
    const fs::path responses = cfg.responses_path.empty() ? default_seed_responses_path() : fs::path(cfg.responses_path);
    auto seeds = load_seed_responses(responses);
    const TrainEnvironment env = cfg.train_environment(seeds);

    const fs::path out_dir(opts.out_dir);
    fs::create_directories(out_dir);

    const auto started = std::chrono::system_clock::now();
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(cfg.run.num_runs));
    if (opts.parallel && cfg.run.num_runs > 1) {
        std::vector<std::thread> workers;
        for (int r = 0; r < cfg.run.num_runs; ++r) {
            workers.emplace_back([&, r] { outcomes[static_cast<std::size_t>(r)] = execute_run(cfg, env, r, out_dir, log); });
        }
        for (auto& w : workers) w.join();
    } else {
        for (int r = 0; r < cfg.run.num_runs; ++r) {
            outcomes[static_cast<std::size_t>(r)] = execute_run(cfg, env, r, out_dir, log);
            if (!outcomes[static_cast<std::size_t>(r)].error.empty()) break;
        }
    }
    const auto finished = std::chrono::system_clock::now();

    ordered_json runs = ordered_json::array();
    bool failed = false;
    for (const auto& o : outcomes) {
        if (o.log_path.empty()) continue;
        ordered_json jr;
        jr["run_id"] = o.run_id;
        jr["seed"] = o.seed;
        jr["log"] = o.log_path.string();
        jr["policy"] = o.error.empty() ? ordered_json(o.policy_path.string()) : ordered_json(nullptr);
        jr["episodes"] = o.episodes;
        jr["steps"] = o.steps;
        jr["status"] = o.error.empty() ? "completed" : "failed";
        if (!o.error.empty()) {
            jr["error"] = o.error;
            failed = true;
        }
        runs.push_back(std::move(jr));
    }

    ordered_json manifest;
    manifest["software"] = {{"name", "gradeprobe"}, {"version", library_version()}};
    manifest["config"] = ordered_json::parse(config_to_json(cfg));
    manifest["responses"] = {{"path", responses.string()}, {"count", seeds.size()}};
    manifest["parallel"] = opts.parallel;
    manifest["runs"] = std::move(runs);
    manifest["started_at"] = utc_timestamp(started);
    manifest["finished_at"] = utc_timestamp(finished);
    manifest["wall_seconds"] = std::chrono::duration<double>(finished - started).count();
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    if (failed) {
        for (const auto& o : outcomes) {
            if (!o.error.empty()) log.error("run {} failed after {} episodes: {}", o.run_id, o.episodes, o.error);
        }
        return kExitRuntime;
    }
    out << "wrote " << cfg.run.num_runs << " run log(s) and manifest to " << out_dir.string() << "\n";
    return kExitOk;
}

// ─── analyze ──────────────────────────────────────────────────────────────────

struct AnalyzeOptions {
    std::string logs;
    double top_fraction = 0.05;
    std::string report_path;
    bool per_experiment = false;
    std::size_t exemplars = 5;
};

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, spdlog::logger& log) {
    if (!(opts.top_fraction > 0.0 && opts.top_fraction <= 1.0)) {
        throw InputError("--top-pct: must lie in (0, 1] (a fraction, e.g. 0.05 for the top 5%)");
    }
    const auto logs = load_logs(opts.logs);

    std::map<int, std::vector<EpisodeRecord>> pooled;
    for (const auto& l : logs) {
        auto& dst = pooled[l.header.experiment_id];
        dst.insert(dst.end(), l.episodes.begin(), l.episodes.end());
    }
    if (pooled.size() > 1 && !opts.per_experiment) {
        throw InputError("logs mix experiment ids; pass --per-experiment to analyze each separately");
    }

    for (const auto& [experiment, episodes] : pooled) {
        const ExperimentPreset& preset = experiment_preset(experiment);
        const AuditReport report = build_audit_report(episodes, opts.top_fraction, preset, opts.exemplars);

        fs::path path(opts.report_path);
        if (pooled.size() > 1) {
            path.replace_filename(path.stem().string() + "_exp" + std::to_string(experiment) +
                                  path.extension().string());
        }
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_file(path, report_to_json(report, preset.phrases));
        log.info("experiment {}: analyzed top {} of {} episodes -> {}", experiment, report.n_episodes_analyzed,
                 report.n_episodes_pooled, path.string());

        out << "experiment " << experiment << ": top " << report.n_episodes_analyzed << " of "
            << report.n_episodes_pooled << " episodes\n"
            << "  mean actions              " << report.mean_actions << "\n"
            << "  repeat sequence fraction  " << report.repeat_sequence_fraction << "\n"
            << "  triple consecutive        " << report.triple_consecutive_fraction << "\n"
            << "  delete sequence fraction  " << report.delete_sequence_fraction << "\n";
        if (report.helpful_vs_unhelpful_split) {
            out << "  helpful / unhelpful       " << report.helpful_vs_unhelpful_split->helpful << " / "
                << report.helpful_vs_unhelpful_split->unhelpful << "\n";
        }
        for (const auto& ex : report.exemplar_sequences) out << "  e.g. " << ex.rendered << "\n";
    }
    return kExitOk;
}

// ─── curve ────────────────────────────────────────────────────────────────────

struct CurveOptions {
    std::string logs;
    int window = 200;
    std::string out_path;
    long episodes_per_run = 0;  // 0 = shortest run
};

int cmd_curve(const CurveOptions& opts, std::ostream& out, spdlog::logger& log) {
    if (opts.window < 1) throw InputError("--window: must be >= 1");
    if (opts.episodes_per_run < 0) throw InputError("--episodes-per-run: must be >= 0");
    const auto logs = load_logs(opts.logs);

    const int experiment = logs.front().header.experiment_id;
    std::vector<std::vector<double>> returns;
    std::size_t shortest = SIZE_MAX;
    std::size_t longest = 0;
    for (const auto& l : logs) {
        if (l.header.experiment_id != experiment) throw InputError("curve logs must come from a single experiment");
        std::vector<double> r;
        for (const auto& e : l.episodes) r.push_back(e.episode_return);
        shortest = std::min(shortest, r.size());
        longest = std::max(longest, r.size());
        returns.push_back(std::move(r));
    }
    if (shortest == 0) throw InputError("a matched log contains no episodes");

    std::size_t length = shortest;
    if (opts.episodes_per_run > 0) {
        length = static_cast<std::size_t>(opts.episodes_per_run);
        if (length > shortest) {
            log.warn("--episodes-per-run {} exceeds the shortest run ({}); truncating to {}", length, shortest, shortest);
            length = shortest;
        }
    } else if (shortest != longest) {
        log.warn("runs have unequal lengths ({}..{} episodes); truncating to the shortest", shortest, longest);
    }

    const LearningCurve curve = learning_curve(returns, static_cast<std::size_t>(opts.window), length);
    if (curve.degenerate_band) log.warn("only one run matched; confidence band collapses onto the mean");

    fs::path path(opts.out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, curve_to_csv(curve));
    out << "wrote " << curve.mean.size() << " rows (" << curve.runs << " runs, window " << curve.window << ") to "
        << path.string() << "\n";
    return kExitOk;
}

// ─── serve-mock ───────────────────────────────────────────────────────────────

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) {
    g_stop_requested.store(true);
}

int cmd_serve_mock(const std::string& host, int port, std::ostream& out, spdlog::logger& log) {
    if (port < 0 || port > 65535) throw InputError("--port: must lie in 0..65535");
    auto grader = std::make_shared<MockGrader>();
    GradeServer server(grader, "mock-rubric-" + library_version());
    if (!server.bind(host, port)) {
        log.error("cannot bind {}:{}", host, port);
        return kExitRuntime;
    }

    g_stop_requested.store(false);
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    std::thread watcher([&] {
        while (!g_stop_requested.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });

    out << "serving mock grader on http://" << host << ":" << server.port() << "/v1/grade" << std::endl;
    server.listen();
    g_stop_requested.store(true);
    watcher.join();
    std::signal(SIGINT, SIG_DFL);
    std::signal(SIGTERM, SIG_DFL);
    return kExitOk;
}

// ─── probe ────────────────────────────────────────────────────────────────────

struct ProbeOptions {
    std::string policy_path;
    std::string response;
    std::string grader = "mock";
    int experiment = 0;  // 0 = the policy's own preset
    int max_steps = 8;
    double threshold = 3.5;
};

std::string format_distribution(const RatingDistribution& d) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << "[";
    for (std::size_t k = 0; k < kRatingClasses; ++k) os << (k ? " " : "") << d[k];
    os << "]";
    return os.str();
}

int cmd_probe(const ProbeOptions& opts, std::ostream& out) {
    if (normalize_whitespace(opts.response).empty()) throw InputError("--response: must not be empty");

    std::ifstream in(opts.policy_path, std::ios::binary);
    if (!in) throw ConfigError("--policy: cannot open " + opts.policy_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const PolicyDocument doc = policy_from_json(buf.str());

    const int experiment = opts.experiment > 0 ? opts.experiment : doc.experiment_id;
    const ExperimentPreset& preset = experiment_preset(experiment);
    FeaturizerConfig fcfg = doc.featurizer;
    const Featurizer featurizer(preset.phrases, fcfg);
    if (doc.params.action_count != preset.action_count() || doc.params.input_dim != featurizer.dimension()) {
        throw ConfigError("policy dimensions (" + std::to_string(doc.params.input_dim) + " inputs, " +
                          std::to_string(doc.params.action_count) + " actions; trained on preset " +
                          std::to_string(doc.experiment_id) + ") do not match preset " + std::to_string(experiment) +
                          " (" + std::to_string(featurizer.dimension()) + " inputs, " +
                          std::to_string(preset.action_count()) + " actions)");
    }

    std::shared_ptr<Grader> grader;
    if (opts.grader == "mock") {
        grader = std::make_shared<MockGrader>();
    } else {
        grader = std::make_shared<RemoteGrader>(opts.grader);
    }

    EpisodeContext ctx{preset.phrases, EpisodeLimits{opts.max_steps, opts.threshold}, RewardSpec{}};
    const FeaturePolicy policy(doc.params, featurizer);
    Rng rng(0);
    const EpisodeRecord ep = run_episode(opts.response, policy, *grader, ctx, rng, ActionSelection::Greedy);

    out << "preset " << experiment << ", greedy policy (ties -> lowest action index)\n";
    out << "step 0: " << ep.initial_text << "\n"
        << "        E[rating]=" << std::fixed << std::setprecision(3) << expected_rating(ep.initial_rating) << " "
        << format_distribution(ep.initial_rating) << "\n";
    EpisodeRecord partial = ep;
    for (std::size_t t = 0; t < ep.transitions.size(); ++t) {
        partial.transitions.assign(ep.transitions.begin(), ep.transitions.begin() + static_cast<std::ptrdiff_t>(t + 1));
        const auto& tr = ep.transitions[t];
        out << "step " << t + 1 << ": " << describe_action(tr.action, preset.phrases) << "\n"
            << "        " << render_revision(partial, preset.phrases) << "\n"
            << "        E[rating]=" << expected_rating(tr.rating) << " " << format_distribution(tr.rating)
            << " reward=" << tr.reward << "\n";
    }
    out << "termination: " << (ep.termination == Termination::ThresholdReached ? "threshold_reached" : "max_steps")
        << " after " << ep.transitions.size() << " step(s), return=" << ep.episode_return << "\n";
    out.unsetf(std::ios::floatfield);
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Adversarial auditing of automatic short-answer graders with PPO", "gradeprobe"};
    app.require_subcommand(1);
    app.set_version_flag("--version", library_version());

    TrainOptions train_opts;
    auto* train = app.add_subcommand("train", "Train the revision agent and write episode logs");
    train->add_option("--config", train_opts.config_path, "Experiment config (JSON)")->required();
    train->add_option("--out", train_opts.out_dir, "Output directory")->required();
    train->add_option("--responses", train_opts.responses_path, "Seed responses file (one per line)");
    train->add_flag("--parallel", train_opts.parallel, "Run training runs concurrently");

    AnalyzeOptions analyze_opts;
    auto* analyze = app.add_subcommand("analyze", "Audit the top-return episodes of one or more logs");
    analyze->add_option("--logs", analyze_opts.logs, "Glob of episode logs")->required();
    analyze->add_option("--top-pct", analyze_opts.top_fraction, "Top fraction in (0,1], e.g. 0.05")->required();
    analyze->add_option("--report", analyze_opts.report_path, "Report JSON path")->required();
    analyze->add_flag("--per-experiment", analyze_opts.per_experiment, "Write one report per experiment id");
    analyze->add_option("--exemplars", analyze_opts.exemplars, "Number of rendered exemplar sequences");

    CurveOptions curve_opts;
    auto* curve = app.add_subcommand("curve", "Write the smoothed learning curve as CSV");
    curve->add_option("--logs", curve_opts.logs, "Glob of episode logs (one per run)")->required();
    curve->add_option("--window", curve_opts.window, "Rolling window")->required();
    curve->add_option("--out", curve_opts.out_path, "CSV output path")->required();
    curve->add_option("--episodes-per-run", curve_opts.episodes_per_run, "Truncate runs to this many episodes");

    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    auto* serve = app.add_subcommand("serve-mock", "Serve the mock grader over the grading wire protocol");
    serve->add_option("--port", serve_port, "TCP port (0 picks a free one)")->required();
    serve->add_option("--host", serve_host, "Bind address");

    ProbeOptions probe_opts;
    auto* probe = app.add_subcommand("probe", "Greedy single-response revision trace with a trained policy");
    probe->add_option("--policy", probe_opts.policy_path, "Policy JSON written by train")->required();
    probe->add_option("--response", probe_opts.response, "Response text to revise")->required();
    probe->add_option("--grader", probe_opts.grader, "mock or an http:// grader URL");
    probe->add_option("--experiment", probe_opts.experiment, "Preset id (defaults to the policy's)");
    probe->add_option("--max-steps", probe_opts.max_steps, "Revision cap");
    probe->add_option("--threshold", probe_opts.threshold, "Expected-rating threshold on the 0..4 scale");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    auto log = make_logger(err);
    try {
        if (*train) return cmd_train(train_opts, out, *log);
        if (*analyze) return cmd_analyze(analyze_opts, out, *log);
        if (*curve) return cmd_curve(curve_opts, out, *log);
        if (*serve) return cmd_serve_mock(serve_host, serve_port, out, *log);
        if (*probe) return cmd_probe(probe_opts, out);
    } catch (const ConfigError& e) {
        log->error("{}", e.what());
        return kExitValidation;
    } catch (const InputError& e) {
        log->error("{}", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        log->error("{}", e.what());
        return kExitRuntime;
    }
    return kExitValidation;
}

} // namespace gradeprobe::cli
