// mgtd - build corpora, fine-tune detectors, score texts and evaluate
// machine-generated-text detection quality from one binary.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgtd/calibrate.hpp"
#include "mgtd/corpus.hpp"
#include "mgtd/inference.hpp"
#include "mgtd/metrics.hpp"
#include "mgtd/pipeline.hpp"
#include "mgtd/report.hpp"
#include "mgtd/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStageFailure = 1;
constexpr int kExitConfigError = 2;

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& part : mgtd::config::split(text, ',')) {
        auto t = mgtd::config::trim(part);
        if (t.empty()) {
            continue;
        }
        out.push_back(std::stod(t));
    }
    return out;
}

int run_mix(const fs::path& spec_path, const fs::path& out_dir,
            std::optional<std::uint64_t> seed) {
    mgtd::corpus::MixSpec spec;
    try {
        spec = mgtd::corpus::MixSpec::load(spec_path);
        if (seed) {
            spec.seed = *seed;
            spec.seed_explicit = true;
        }
    } catch (const std::exception& ex) {
        std::cerr << "mix: config error: " << ex.what() << "\n";
        return kExitConfigError;
    }
    try {
        auto result = mgtd::corpus::build_mix(spec, out_dir);
        std::cout << result.stats.table();
        std::cout << "corpus: " << result.corpus_path.string() << "\n";
        if (result.validation_path) {
            std::cout << "validation: " << result.validation_path->string() << "\n";
        }
        return kExitOk;
    } catch (const std::exception& ex) {
        std::cerr << "mix: " << ex.what() << "\n";
        return kExitStageFailure;
    }
}

int run_train(const std::string& model, const fs::path& train_path, const fs::path& val_path,
              const std::optional<fs::path>& config_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed) {
    mgtd::train::TrainConfig config;
    try {
        if (config_path) {
            config = mgtd::train::TrainConfig::load(*config_path);
        }
        if (seed) {
            config.seed = *seed;
        }
    } catch (const std::exception& ex) {
        std::cerr << "train: config error: " << ex.what() << "\n";
        return kExitConfigError;
    }
    try {
        auto manifest = mgtd::train::train(model, train_path, val_path, config, out_dir,
                                           &std::cout);
        std::cout << "best checkpoint: " << (out_dir / manifest.best_checkpoint).string()
                  << "\n";
        return kExitOk;
    } catch (const std::exception& ex) {
        std::cerr << "train: " << ex.what() << "\n";
        return kExitStageFailure;
    }
}

int run_score(const fs::path& bundle_dir, const fs::path& in_path, const fs::path& out_path,
              std::optional<double> threshold, int batch_size, std::string dataset,
              bool plain_text) {
    try {
        auto bundle = mgtd::infer::load_bundle(bundle_dir);
        if (!threshold) {
            threshold = bundle.calibrated_threshold;
        }
        if (dataset.empty()) {
            dataset = in_path.stem().string();
        }

        std::vector<mgtd::ScoredSample> scored;
        std::vector<bool> truncated;
        bool labeled = !plain_text && in_path.extension() == ".jsonl";
        if (labeled) {
            // Normalize through ingest so raw labeled JSONL works, not just
            // the canonical corpus schema.
            auto ingested = mgtd::corpus::ingest(in_path, dataset, {});
            if (!ingested.rejects.empty()) {
                std::cerr << "score: " << ingested.rejects.size()
                          << " rows rejected during ingest\n";
            }
            scored = mgtd::infer::score_corpus(bundle, ingested.samples, batch_size, dataset,
                                               &truncated);
        } else {
            std::ifstream in(in_path);
            if (!in) {
                throw std::runtime_error("cannot open input: " + in_path.string());
            }
            std::vector<std::string> texts;
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty()) {
                    texts.push_back(line);
                }
            }
            auto result = mgtd::infer::score_texts(bundle, texts, batch_size);
            truncated = result.truncated;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                mgtd::ScoredSample s;
                s.id = "line" + std::to_string(i + 1);
                s.score = result.scores[i];
                s.dataset = dataset;
                scored.push_back(std::move(s));
            }
        }

        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + out_path.string());
        }
        std::size_t truncated_count = 0;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            auto j = scored[i].to_json();
            if (!labeled) {
                j.erase("label");  // unlabeled plain-text input
            }
            if (truncated[i]) {
                j["truncated"] = true;
                ++truncated_count;
            }
            if (threshold) {
                j["predicted_label"] =
                    mgtd::metrics::predict_machine(scored[i].score, *threshold) ? "machine"
                                                                                : "human";
            }
            out << j.dump() << '\n';
        }
        std::cout << "scored " << scored.size() << " texts";
        if (truncated_count) {
            std::cout << " (" << truncated_count << " truncated to "
                      << bundle.max_input_bytes << " bytes)";
        }
        std::cout << " -> " << out_path.string() << "\n";
        return kExitOk;
    } catch (const std::exception& ex) {
        std::cerr << "score: " << ex.what() << "\n";
        return kExitStageFailure;
    }
}

int run_evaluate(const std::vector<fs::path>& score_files, std::vector<double> thresholds,
                 std::vector<double> fpr_targets, std::optional<std::string> group_by,
                 const fs::path& out_dir, std::optional<std::string> detector) {
    try {
        fs::create_directories(out_dir);
        for (const auto& file : score_files) {
            std::string stem = file.stem().string();
            auto scored = mgtd::read_scores(file, stem);
            mgtd::report::EvaluationEntry entry;
            auto sep = stem.find("__");
            entry.detector = detector.value_or(sep == std::string::npos ? stem
                                                                        : stem.substr(0, sep));
            entry.dataset = scored.empty() || scored.front().dataset.empty()
                                ? stem
                                : scored.front().dataset;
            entry.report = mgtd::metrics::evaluate(scored, thresholds, fpr_targets, group_by);
            entry.roc = mgtd::metrics::roc_curve(scored);
            auto eval_path = out_dir / ("eval_" + stem + ".json");
            {
                std::ofstream out(eval_path, std::ios::binary);
                out << entry.to_json().dump(2) << '\n';
            }
            {
                std::ofstream out(out_dir / ("roc_" + stem + ".csv"), std::ios::binary);
                out << mgtd::metrics::roc_csv(*entry.roc);
            }
            std::cout << stem << ": auc " << entry.report.auc << " -> "
                      << eval_path.string() << "\n";
        }
        return kExitOk;
    } catch (const std::exception& ex) {
        std::cerr << "evaluate: " << ex.what() << "\n";
        return kExitStageFailure;
    }
}

int run_calibrate(const std::vector<std::string>& dataset_files, const std::string& grid_text,
                  const fs::path& out_path) {
    std::map<std::string, std::vector<mgtd::ScoredSample>> by_dataset;
    std::vector<double> grid;
    try {
        for (const auto& pair : dataset_files) {
            auto eq = pair.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("expected dataset=file, got: " + pair);
            }
            auto name = pair.substr(0, eq);
            by_dataset[name] = mgtd::read_scores(pair.substr(eq + 1), name);
        }
        grid = grid_text == "default" ? mgtd::calibrate::default_grid()
                                      : parse_double_list(grid_text);
    } catch (const std::exception& ex) {
        std::cerr << "calibrate: config error: " << ex.what() << "\n";
        return kExitConfigError;
    }
    try {
        auto result = mgtd::calibrate::calibrate(by_dataset, grid);
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + out_path.string());
        }
        out << result.to_json().dump(2) << '\n';
        std::cout << "threshold " << result.threshold << ", average macro F1 "
                  << result.average_macro_f1 << " -> " << out_path.string() << "\n";
        return kExitOk;
    } catch (const std::exception& ex) {
        std::cerr << "calibrate: " << ex.what() << "\n";
        return kExitStageFailure;
    }
}

int run_report(const std::vector<fs::path>& evaluation_files,
               const std::vector<fs::path>& calibration_files, const fs::path& out_dir) {
    try {
        std::vector<mgtd::report::EvaluationEntry> entries;
        for (const auto& file : evaluation_files) {
            entries.push_back(mgtd::report::EvaluationEntry::load(file));
        }
        std::map<std::string, mgtd::calibrate::CalibrationResult> calibrations;
        for (const auto& file : calibration_files) {
            std::ifstream in(file);
            if (!in) {
                throw std::runtime_error("cannot open " + file.string());
            }
            nlohmann::json j = nlohmann::json::parse(in);
            mgtd::calibrate::CalibrationResult r;
            r.threshold = j.at("threshold").get<double>();
            r.average_macro_f1 = j.at("average_macro_f1").get<double>();
            r.grid = j.at("grid").get<std::vector<double>>();
            r.grid_average_macro_f1 = j.at("grid_average_macro_f1").get<std::vector<double>>();
            for (const auto& [name, m] : j.at("per_dataset").items()) {
                r.per_dataset[name] = {m.at("fnr").get<double>(), m.at("fpr").get<double>(),
                                       m.at("macro_f1").get<double>()};
            }
            calibrations[file.stem().string()] = std::move(r);
        }
        auto bundle = mgtd::report::emit(entries, calibrations, out_dir);
        for (const auto& notice : bundle.notices) {
            std::cout << "notice: " << notice << "\n";
        }
        std::cout << "report -> " << out_dir.string() << "\n";
        return kExitOk;
    } catch (const std::exception& ex) {
        std::cerr << "report: " << ex.what() << "\n";
        return kExitStageFailure;
    }
}

int run_pipeline_cmd(const fs::path& config_path, std::optional<std::uint64_t> seed, bool force,
                     std::optional<fs::path> out_override) {
    mgtd::pipeline::PipelineConfig config;
    try {
        config = mgtd::pipeline::PipelineConfig::load(config_path);
        if (seed) {
            config.seed = *seed;
        }
        if (out_override) {
            config.output_root = *out_override;
        }
    } catch (const std::exception& ex) {
        std::cerr << "pipeline: config error: " << ex.what() << "\n";
        return kExitConfigError;
    }
    return mgtd::pipeline::run_pipeline(config, force, std::cout) == 0 ? kExitOk
                                                                       : kExitStageFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"machine-generated text detection toolkit"};
    app.require_subcommand(1);

    // mix
    auto* mix = app.add_subcommand("mix", "build a corpus mixture from a mix spec");
    fs::path mix_spec;
    fs::path mix_out;
    std::optional<std::uint64_t> mix_seed;
    mix->add_option("--spec", mix_spec, "mix spec file")->required();
    mix->add_option("--out", mix_out, "output directory")->required();
    mix->add_option("--seed", mix_seed, "override the spec seed");

    // train
    auto* train = app.add_subcommand("train", "fine-tune a detector");
    std::string train_model;
    fs::path train_corpus, train_val, train_out;
    std::optional<fs::path> train_config;
    std::optional<std::uint64_t> train_seed;
    train->add_option("--model", train_model, "preset name or model directory")->required();
    train->add_option("--train", train_corpus, "training corpus (JSON Lines)")->required();
    train->add_option("--val", train_val, "validation corpus (JSON Lines)")->required();
    train->add_option("--config", train_config, "train config file");
    train->add_option("--out", train_out, "run output directory")->required();
    train->add_option("--seed", train_seed, "override the config seed");

    // score
    auto* score = app.add_subcommand("score", "score texts with a trained detector");
    fs::path score_bundle, score_in, score_out;
    std::optional<double> score_threshold;
    int score_batch = 32;
    std::string score_dataset;
    bool score_plain = false;
    score->add_option("--bundle", score_bundle, "run or checkpoint directory")->required();
    score->add_option("--in", score_in, "corpus JSON Lines or plain text (one doc per line)")
        ->required();
    score->add_option("--out", score_out, "output score file")->required();
    score->add_option("--threshold", score_threshold, "decision threshold for hard labels");
    score->add_option("--batch-size", score_batch, "scoring batch size");
    score->add_option("--dataset", score_dataset, "dataset name stamped on outputs");
    score->add_flag("--text", score_plain, "treat input as plain text lines");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "compute detection metrics from score files");
    std::vector<fs::path> eval_scores;
    std::vector<double> eval_fpr_targets;
    std::string eval_thresholds = "0.5";
    std::optional<std::string> eval_group_by;
    fs::path eval_out;
    std::optional<std::string> eval_detector;
    evaluate->add_option("--scores", eval_scores, "score files")->required()->expected(-1);
    evaluate->add_option("--fpr-target", eval_fpr_targets, "FPR targets (default 0.05)");
    evaluate->add_option("--thresholds", eval_thresholds, "comma list of thresholds");
    evaluate->add_option("--group-by", eval_group_by, "language | generator | dataset");
    evaluate->add_option("--out", eval_out, "output directory")->required();
    evaluate->add_option("--detector", eval_detector, "detector name for the reports");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate",
                                         "pick the threshold maximizing average macro F1");
    std::vector<std::string> calibrate_scores;
    std::string calibrate_grid = "default";
    fs::path calibrate_out;
    calibrate->add_option("--scores", calibrate_scores, "dataset=file pairs")
        ->required()
        ->expected(-1);
    calibrate->add_option("--grid", calibrate_grid, "default or a comma list of thresholds");
    calibrate->add_option("--out", calibrate_out, "output report JSON")->required();

    // report
    auto* report = app.add_subcommand("report", "emit summary tables from evaluations");
    std::vector<fs::path> report_evals;
    std::vector<fs::path> report_calibrations;
    fs::path report_out;
    report->add_option("--evaluations", report_evals, "evaluation JSON files")
        ->required()
        ->expected(-1);
    report->add_option("--calibrations", report_calibrations, "calibration JSON files");
    report->add_option("--out", report_out, "output directory")->required();

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run the full pipeline from a config");
    fs::path pipeline_config;
    std::optional<std::uint64_t> pipeline_seed;
    bool pipeline_force = false;
    std::optional<fs::path> pipeline_out;
    pipeline->add_option("--config", pipeline_config, "pipeline config JSON")->required();
    pipeline->add_option("--seed", pipeline_seed, "override the global seed");
    pipeline->add_flag("--force", pipeline_force, "rerun stages even when up to date");
    pipeline->add_option("--out", pipeline_out, "override the output root");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        app.exit(e);
        return kExitConfigError;
    }

    if (mix->parsed()) {
        return run_mix(mix_spec, mix_out, mix_seed);
    }
    if (train->parsed()) {
        return run_train(train_model, train_corpus, train_val, train_config, train_out,
                         train_seed);
    }
    if (score->parsed()) {
        return run_score(score_bundle, score_in, score_out, score_threshold, score_batch,
                         score_dataset, score_plain);
    }
    if (evaluate->parsed()) {
        std::vector<double> thresholds;
        try {
            thresholds = parse_double_list(eval_thresholds);
        } catch (const std::exception& ex) {
            std::cerr << "evaluate: bad --thresholds: " << ex.what() << "\n";
            return kExitConfigError;
        }
        if (eval_fpr_targets.empty()) {
            eval_fpr_targets.push_back(0.05);
        }
        return run_evaluate(eval_scores, thresholds, eval_fpr_targets, eval_group_by, eval_out,
                            eval_detector);
    }
    if (calibrate->parsed()) {
        return run_calibrate(calibrate_scores, calibrate_grid, calibrate_out);
    }
    if (report->parsed()) {
        return run_report(report_evals, report_calibrations, report_out);
    }
    if (pipeline->parsed()) {
        return run_pipeline_cmd(pipeline_config, pipeline_seed, pipeline_force, pipeline_out);
    }
    return kExitConfigError;
}
