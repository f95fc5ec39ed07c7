#include "mgtd/pipeline.hpp"

#include <fstream>
#include <set>

#include "mgtd/calibrate.hpp"
#include "mgtd/corpus.hpp"
#include "mgtd/digest.hpp"
#include "mgtd/inference.hpp"
#include "mgtd/metrics.hpp"
#include "mgtd/random.hpp"
#include "mgtd/report.hpp"
#include "mgtd/trainer.hpp"

namespace mgtd::pipeline {

namespace {

std::filesystem::path resolve_relative(const std::filesystem::path& base,
                                       const std::filesystem::path& p) {
    return p.is_relative() && !base.empty() ? base / p : p;
}

// A stage is up to date when its recorded input digests match and all its
// outputs still exist. Digests, not timestamps.
struct StageGuard {
    std::filesystem::path manifest_path;
    nlohmann::json inputs = nlohmann::json::object();
    std::vector<std::filesystem::path> outputs;

    void input_file(const std::string& key, const std::filesystem::path& path) {
        inputs[key] = digest::sha256_file(path);
    }
    void input_value(const std::string& key, const std::string& value) {
        inputs[key] = digest::sha256_hex(value);
    }

    bool up_to_date() const {
        std::ifstream in(manifest_path);
        if (!in) {
            return false;
        }
        nlohmann::json recorded = nlohmann::json::parse(in, nullptr, false);
        if (recorded.is_discarded() || recorded.value("inputs", nlohmann::json()) != inputs) {
            return false;
        }
        for (const auto& out : recorded.value("outputs", nlohmann::json::array())) {
            if (!std::filesystem::exists(out.get<std::string>())) {
                return false;
            }
        }
        return true;
    }

    void commit() const {
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : outputs) {
            outs.push_back(o.string());
        }
        std::ofstream out(manifest_path, std::ios::binary);
        out << nlohmann::json{{"inputs", inputs}, {"outputs", outs}}.dump(2) << '\n';
    }
};

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open pipeline config: " + path.string());
    }
    nlohmann::json j = nlohmann::json::parse(in);
    PipelineConfig c;
    c.base_dir = path.parent_path();
    c.seed = j.value("seed", 0ULL);
    if (!j.contains("output_root")) {
        throw std::runtime_error(path.string() + ": missing output_root");
    }
    c.output_root = resolve_relative(c.base_dir, j.at("output_root").get<std::string>());
    const auto datasets = j.value("datasets", nlohmann::json::object());
    for (const auto& [name, p] : datasets.items()) {
        c.datasets[name] = resolve_relative(c.base_dir, p.get<std::string>());
    }
    const auto stages = j.value("stages", nlohmann::json::object());
    for (const auto& m : stages.value("mix", nlohmann::json::array())) {
        MixStage s;
        s.name = m.at("name").get<std::string>();
        s.spec = resolve_relative(c.base_dir, m.at("spec").get<std::string>());
        c.mixes.push_back(std::move(s));
    }
    for (const auto& t : stages.value("train", nlohmann::json::array())) {
        TrainStage s;
        s.name = t.at("name").get<std::string>();
        s.model = t.at("model").get<std::string>();
        s.train_ref = t.at("train").get<std::string>();
        s.validation_ref = t.at("validation").get<std::string>();
        if (t.contains("config")) {
            s.config = resolve_relative(c.base_dir, t.at("config").get<std::string>());
        }
        c.trains.push_back(std::move(s));
    }
    for (const auto& sc : stages.value("score", nlohmann::json::array())) {
        ScoreStage s;
        s.detector = sc.at("detector").get<std::string>();
        s.dataset = sc.at("dataset").get<std::string>();
        s.batch_size = sc.value("batch_size", 32);
        c.scores.push_back(std::move(s));
    }
    if (stages.contains("evaluate")) {
        EvaluateStage s;
        const auto& e = stages.at("evaluate");
        if (e.contains("thresholds")) {
            s.thresholds = e.at("thresholds").get<std::vector<double>>();
        }
        if (e.contains("fpr_targets")) {
            s.fpr_targets = e.at("fpr_targets").get<std::vector<double>>();
        }
        if (e.contains("group_by")) {
            s.group_by = e.at("group_by").get<std::string>();
        }
        c.evaluate = std::move(s);
    }
    if (stages.contains("calibrate")) {
        CalibrateStage s;
        const auto& cal = stages.at("calibrate");
        if (cal.contains("grid") && cal.at("grid").is_array()) {
            s.grid = cal.at("grid").get<std::vector<double>>();
        }
        c.calibrate = std::move(s);
    }
    c.report = stages.contains("report");
    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    std::set<std::string> mix_names;
    for (const auto& m : mixes) {
        if (!mix_names.insert(m.name).second) {
            throw std::runtime_error("pipeline: duplicate mix stage `" + m.name + "`");
        }
    }
    std::set<std::string> train_names;
    for (const auto& t : trains) {
        if (!train_names.insert(t.name).second) {
            throw std::runtime_error("pipeline: duplicate train stage `" + t.name + "`");
        }
    }
    auto check_ref = [&](const std::string& ref, const std::string& where) {
        if (ref.rfind("mix:", 0) == 0) {
            auto rest = ref.substr(4);
            auto colon = rest.find(':');
            std::string name = colon == std::string::npos ? rest : rest.substr(0, colon);
            if (!mix_names.count(name)) {
                throw std::runtime_error("pipeline: " + where + " references unknown mix `" +
                                         name + "`");
            }
        } else if (ref.rfind("dataset:", 0) == 0) {
            if (!datasets.count(ref.substr(8))) {
                throw std::runtime_error("pipeline: " + where + " references unknown dataset `" +
                                         ref.substr(8) + "`");
            }
        }
    };
    for (const auto& t : trains) {
        check_ref(t.train_ref, "train `" + t.name + "`");
        check_ref(t.validation_ref, "train `" + t.name + "`");
    }
    for (const auto& s : scores) {
        if (!train_names.count(s.detector)) {
            throw std::runtime_error("pipeline: score stage references unknown detector `" +
                                     s.detector + "`");
        }
        if (!datasets.count(s.dataset)) {
            check_ref(s.dataset, "score stage");
            if (s.dataset.rfind("mix:", 0) != 0) {
                throw std::runtime_error("pipeline: score stage references unknown dataset `" +
                                         s.dataset + "`");
            }
        }
    }
    if ((evaluate || calibrate) && scores.empty()) {
        throw std::runtime_error("pipeline: evaluate/calibrate stages require score entries");
    }
    if (report && !evaluate) {
        throw std::runtime_error("pipeline: report stage requires the evaluate stage");
    }
}

std::filesystem::path PipelineConfig::resolve_corpus_ref(const std::string& ref) const {
    if (ref.rfind("mix:", 0) == 0) {
        auto rest = ref.substr(4);
        auto colon = rest.find(':');
        std::string name = colon == std::string::npos ? rest : rest.substr(0, colon);
        std::string part = colon == std::string::npos ? "corpus" : rest.substr(colon + 1);
        if (part != "corpus" && part != "validation") {
            throw std::runtime_error("pipeline: bad mix reference `" + ref + "`");
        }
        return output_root / "mix" / name / (part + ".jsonl");
    }
    if (ref.rfind("dataset:", 0) == 0) {
        return datasets.at(ref.substr(8));
    }
    auto it = datasets.find(ref);
    if (it != datasets.end()) {
        return it->second;
    }
    return resolve_relative(base_dir, ref);
}

int run_pipeline(const PipelineConfig& config, bool force, std::ostream& log) {
    std::filesystem::create_directories(config.output_root);
    std::string current_stage = "setup";
    std::filesystem::path current_manifest;
    try {
        // mix stages
        for (const auto& mix : config.mixes) {
            current_stage = "mix[" + mix.name + "]";
            auto stage_dir = config.output_root / "mix" / mix.name;
            std::filesystem::create_directories(stage_dir);
            StageGuard guard{stage_dir / ".stage.json"};
            current_manifest = guard.manifest_path;

            auto spec = corpus::MixSpec::load(mix.spec);
            if (!spec.seed_explicit) {
                spec.seed = rng::derive_seed(config.seed, "stage|mix|" + mix.name);
            }
            guard.input_value("spec", spec.serialized() + "|seed=" + std::to_string(spec.seed));
            for (const auto& input : spec.inputs) {
                guard.input_file("source|" + input.name, input.path);
            }
            guard.outputs = {stage_dir / "corpus.jsonl", stage_dir / "stats.json"};
            if (spec.validation_per_class) {
                guard.outputs.push_back(stage_dir / "validation.jsonl");
            }
            if (!force && guard.up_to_date()) {
                log << current_stage << ": skipped (up to date)\n";
                continue;
            }
            auto result = corpus::build_mix(spec, stage_dir);
            guard.commit();
            log << current_stage << ": " << result.stats.final_counts.human << " human / "
                << result.stats.final_counts.machine << " machine\n";
        }

        // train stages
        for (const auto& t : config.trains) {
            current_stage = "train[" + t.name + "]";
            auto stage_dir = config.output_root / "train" / t.name;
            std::filesystem::create_directories(stage_dir);
            StageGuard guard{stage_dir / ".stage.json"};
            current_manifest = guard.manifest_path;

            train::TrainConfig tc;
            if (t.config) {
                tc = train::TrainConfig::load(*t.config);
            }
            if (!tc.seed) {
                tc.seed = rng::derive_seed(config.seed, "stage|train|" + t.name);
            }
            auto train_path = config.resolve_corpus_ref(t.train_ref);
            auto val_path = config.resolve_corpus_ref(t.validation_ref);
            guard.input_file("train", train_path);
            guard.input_file("validation", val_path);
            guard.input_value("model", t.model);
            guard.input_value("config", t.config ? digest::sha256_file(*t.config)
                                                 : std::string("default"));
            guard.input_value("seed", std::to_string(*tc.seed));
            guard.outputs = {stage_dir / "manifest.json", stage_dir / "best"};
            if (!force && guard.up_to_date()) {
                log << current_stage << ": skipped (up to date)\n";
                continue;
            }
            auto manifest = train::train(t.model, train_path, val_path, tc, stage_dir, &log);
            guard.commit();
            log << current_stage << ": best " << manifest.best_checkpoint << " after "
                << manifest.total_steps << " steps\n";
        }

        // score stages
        auto score_path = [&](const PipelineConfig::ScoreStage& s) {
            return config.output_root / "score" / (s.detector + "__" + s.dataset + ".jsonl");
        };
        for (const auto& s : config.scores) {
            current_stage = "score[" + s.detector + " x " + s.dataset + "]";
            auto stage_dir = config.output_root / "score";
            std::filesystem::create_directories(stage_dir);
            StageGuard guard{stage_dir / ("." + s.detector + "__" + s.dataset + ".stage.json")};
            current_manifest = guard.manifest_path;

            auto run_dir = config.output_root / "train" / s.detector;
            auto bundle = infer::load_bundle(run_dir);
            auto corpus_path = config.resolve_corpus_ref(s.dataset);
            guard.input_file("weights", bundle.dir / "weights.bin");
            guard.input_file("corpus", corpus_path);
            guard.input_value("batch_size", std::to_string(s.batch_size));
            auto out_path = score_path(s);
            guard.outputs = {out_path};
            if (!force && guard.up_to_date()) {
                log << current_stage << ": skipped (up to date)\n";
                continue;
            }
            // Eval sets are external data: normalize through ingest so raw
            // schemas (text/label/...) work alongside canonical corpora.
            auto ingested = corpus::ingest(corpus_path, s.dataset, {});
            if (!ingested.rejects.empty()) {
                log << current_stage << ": " << ingested.rejects.size()
                    << " rows rejected during ingest\n";
            }
            auto scored = infer::score_corpus(bundle, ingested.samples, s.batch_size,
                                              s.dataset);
            write_scores(out_path, scored);
            guard.commit();
            log << current_stage << ": " << scored.size() << " samples scored\n";
        }

        // evaluate stage
        auto eval_path = [&](const PipelineConfig::ScoreStage& s) {
            return config.output_root / "evaluate" / (s.detector + "__" + s.dataset + ".json");
        };
        if (config.evaluate) {
            const auto& e = *config.evaluate;
            auto stage_dir = config.output_root / "evaluate";
            std::filesystem::create_directories(stage_dir);
            for (const auto& s : config.scores) {
                current_stage = "evaluate[" + s.detector + " x " + s.dataset + "]";
                StageGuard guard{stage_dir /
                                 ("." + s.detector + "__" + s.dataset + ".stage.json")};
                current_manifest = guard.manifest_path;
                guard.input_file("scores", score_path(s));
                nlohmann::json params{{"thresholds", e.thresholds},
                                      {"fpr_targets", e.fpr_targets}};
                if (e.group_by) {
                    params["group_by"] = *e.group_by;
                }
                guard.input_value("params", params.dump());
                auto out_path = eval_path(s);
                auto roc_path = stage_dir / ("roc_" + s.detector + "__" + s.dataset + ".csv");
                guard.outputs = {out_path, roc_path};
                if (!force && guard.up_to_date()) {
                    log << current_stage << ": skipped (up to date)\n";
                    continue;
                }
                auto scored = read_scores(score_path(s), s.dataset);
                report::EvaluationEntry entry;
                entry.detector = s.detector;
                entry.dataset = s.dataset;
                entry.report = metrics::evaluate(scored, e.thresholds, e.fpr_targets, e.group_by);
                entry.roc = metrics::roc_curve(scored);
                {
                    std::ofstream out(out_path, std::ios::binary);
                    out << entry.to_json().dump(2) << '\n';
                }
                {
                    std::ofstream out(roc_path, std::ios::binary);
                    out << metrics::roc_csv(*entry.roc);
                }
                guard.commit();
                log << current_stage << ": auc " << entry.report.auc << "\n";
            }
        }

        // calibrate stage (one threshold per detector across its datasets)
        if (config.calibrate) {
            auto stage_dir = config.output_root / "calibrate";
            std::filesystem::create_directories(stage_dir);
            std::set<std::string> detectors;
            for (const auto& s : config.scores) {
                detectors.insert(s.detector);
            }
            for (const auto& detector : detectors) {
                current_stage = "calibrate[" + detector + "]";
                StageGuard guard{stage_dir / ("." + detector + ".stage.json")};
                current_manifest = guard.manifest_path;
                std::map<std::string, std::vector<ScoredSample>> by_dataset;
                for (const auto& s : config.scores) {
                    if (s.detector == detector) {
                        guard.input_file("scores|" + s.dataset, score_path(s));
                    }
                }
                auto grid = config.calibrate->grid.empty() ? calibrate::default_grid()
                                                           : config.calibrate->grid;
                guard.input_value("grid", nlohmann::json(grid).dump());
                auto out_path = stage_dir / (detector + ".json");
                guard.outputs = {out_path};
                if (!force && guard.up_to_date()) {
                    log << current_stage << ": skipped (up to date)\n";
                    continue;
                }
                for (const auto& s : config.scores) {
                    if (s.detector == detector) {
                        by_dataset[s.dataset] = read_scores(score_path(s), s.dataset);
                    }
                }
                auto result = calibrate::calibrate(by_dataset, grid);
                {
                    std::ofstream out(out_path, std::ios::binary);
                    out << result.to_json().dump(2) << '\n';
                }
                // Stamp the calibrated threshold into the detector bundle.
                auto bundle = infer::load_bundle(config.output_root / "train" / detector);
                infer::write_bundle_metadata(bundle.dir, result.threshold);
                guard.commit();
                log << current_stage << ": threshold " << result.threshold << "\n";
            }
        }

        // report stage
        if (config.report) {
            current_stage = "report";
            auto stage_dir = config.output_root / "report";
            std::filesystem::create_directories(stage_dir);
            StageGuard guard{stage_dir / ".stage.json"};
            current_manifest = guard.manifest_path;
            std::vector<report::EvaluationEntry> entries;
            for (const auto& s : config.scores) {
                guard.input_file("eval|" + s.detector + "|" + s.dataset, eval_path(s));
            }
            std::map<std::string, calibrate::CalibrationResult> calibrations;
            if (config.calibrate) {
                std::set<std::string> detectors;
                for (const auto& s : config.scores) {
                    detectors.insert(s.detector);
                }
                for (const auto& d : detectors) {
                    guard.input_file("calibration|" + d,
                                     config.output_root / "calibrate" / (d + ".json"));
                }
            }
            guard.outputs = {stage_dir / "summary.csv", stage_dir / "report.json"};
            if (!force && guard.up_to_date()) {
                log << current_stage << ": skipped (up to date)\n";
            } else {
                for (const auto& s : config.scores) {
                    entries.push_back(report::EvaluationEntry::load(eval_path(s)));
                }
                if (config.calibrate) {
                    std::set<std::string> detectors;
                    for (const auto& s : config.scores) {
                        detectors.insert(s.detector);
                    }
                    for (const auto& d : detectors) {
                        std::ifstream in(config.output_root / "calibrate" / (d + ".json"));
                        nlohmann::json j = nlohmann::json::parse(in);
                        calibrate::CalibrationResult r;
                        r.threshold = j.at("threshold").get<double>();
                        r.average_macro_f1 = j.at("average_macro_f1").get<double>();
                        r.grid = j.at("grid").get<std::vector<double>>();
                        r.grid_average_macro_f1 =
                            j.at("grid_average_macro_f1").get<std::vector<double>>();
                        for (const auto& [name, m] : j.at("per_dataset").items()) {
                            r.per_dataset[name] = {m.at("fnr").get<double>(),
                                                   m.at("fpr").get<double>(),
                                                   m.at("macro_f1").get<double>()};
                        }
                        calibrations[d] = std::move(r);
                    }
                }
                auto bundle = report::emit(entries, calibrations, stage_dir);
                guard.commit();
                for (const auto& notice : bundle.notices) {
                    log << "report: " << notice << "\n";
                }
                log << "report: written to " << stage_dir.string() << "\n";
            }
        }
    } catch (const std::exception& ex) {
        log << current_stage << ": FAILED: " << ex.what() << "\n";
        if (!current_manifest.empty()) {
            log << "see stage manifest: " << current_manifest.string() << "\n";
        }
        return 1;
    }
    return 0;
}

}  // namespace mgtd::pipeline
