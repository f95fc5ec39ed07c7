#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "mgtd/calibrate.hpp"
#include "mgtd/csv.hpp"
#include "mgtd/metrics.hpp"
#include "mgtd/pipeline.hpp"
#include "mgtd/report.hpp"
#include "mgtd/scored_sample.hpp"
#include "mgtd/text_sample.hpp"
#include "helpers.hpp"

using namespace mgtd;
using namespace mgtd_test;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Source rows with language-specific vocabularies for both labels, so
// per-language groups are informative.
void write_synthetic_source(const std::filesystem::path& path, int per_class_per_lang,
                            unsigned seed, const std::string& tag) {
    static const std::map<std::string, std::pair<const char*, const char*>> vocab{
        {"en", {"meadow harbor violin", "latent decoder sampling"}},
        {"de", {"wiese hafen geige", "vektor modell ausgabe"}},
    };
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> salt(0, 999999);
    std::ofstream out(path, std::ios::binary);
    for (const auto& [lang, words] : vocab) {
        for (int i = 0; i < per_class_per_lang; ++i) {
            nlohmann::json h{{"text", std::string(words.first) + " " + tag + " " +
                                          std::to_string(salt(gen))},
                             {"label", "human"},
                             {"language", lang}};
            out << h.dump() << '\n';
            nlohmann::json m{{"text", std::string(words.second) + " " + tag + " " +
                                          std::to_string(salt(gen))},
                             {"label", "machine"},
                             {"generator", "gen-" + std::to_string(i % 2)},
                             {"language", lang}};
            out << m.dump() << '\n';
        }
    }
}

// Full desk-scale pipeline fixture: one mix, one detector, two eval sets.
std::filesystem::path write_pipeline_fixture(const TempDir& dir) {
    write_synthetic_source(dir / "src_train.jsonl", 30, 1, "tr");
    write_synthetic_source(dir / "evalA.jsonl", 10, 2, "ea");
    write_synthetic_source(dir / "evalB.jsonl", 10, 3, "eb");
    write_file(dir / "train_mix.cfg",
               "name = train_mix\n"
               "seed = 5\n"
               "validation_per_class = 12\n"
               "input = src_train.jsonl name=srcA\n");
    write_file(dir / "train.cfg",
               "batch_size = 12\n"
               "max_epochs = 2\n"
               "eval_interval_steps = 4\n"
               "learning_rate = 1e-3\n"
               "seed = 9\n");
    nlohmann::json config{
        {"seed", 42},
        {"output_root", "out"},
        {"datasets", {{"evalA", "evalA.jsonl"}, {"evalB", "evalB.jsonl"}}},
        {"stages",
         {{"mix", {{{"name", "train_mix"}, {"spec", "train_mix.cfg"}}}},
          {"train",
           {{{"name", "det"},
             {"model", "tiny-ff-mini"},
             {"train", "mix:train_mix"},
             {"validation", "mix:train_mix:validation"},
             {"config", "train.cfg"}}}},
          {"score",
           {{{"detector", "det"}, {"dataset", "evalA"}},
            {{"detector", "det"}, {"dataset", "evalB"}}}},
          {"evaluate",
           {{"thresholds", {0.5}}, {"fpr_targets", {0.05}}, {"group_by", "language"}}},
          {"calibrate", nlohmann::json::object()},
          {"report", nlohmann::json::object()}}},
    };
    auto path = dir / "pipeline.json";
    write_file(path, config.dump(2));
    return path;
}

}  // namespace

TEST_CASE("run_pipeline executes all stages and skips them on rerun") {
    TempDir dir("pipe");
    auto config_path = write_pipeline_fixture(dir);
    auto config = pipeline::PipelineConfig::load(config_path);

    std::ostringstream log;
    REQUIRE(pipeline::run_pipeline(config, false, log) == 0);
    auto out = dir / "out";
    CHECK(std::filesystem::exists(out / "mix" / "train_mix" / "corpus.jsonl"));
    CHECK(std::filesystem::exists(out / "mix" / "train_mix" / "validation.jsonl"));
    CHECK(std::filesystem::exists(out / "train" / "det" / "manifest.json"));
    CHECK(std::filesystem::exists(out / "score" / "det__evalA.jsonl"));
    CHECK(std::filesystem::exists(out / "score" / "det__evalB.jsonl"));
    CHECK(std::filesystem::exists(out / "evaluate" / "det__evalA.json"));
    CHECK(std::filesystem::exists(out / "evaluate" / "roc_det__evalA.csv"));
    CHECK(std::filesystem::exists(out / "calibrate" / "det.json"));
    CHECK(std::filesystem::exists(out / "report" / "summary.csv"));
    CHECK(std::filesystem::exists(out / "report" / "per_language_auc.csv"));
    CHECK(std::filesystem::exists(out / "report" / "calibration.csv"));
    CHECK(log.str().find("FAILED") == std::string::npos);

    // Rerun: every stage reports skipped.
    std::ostringstream rerun_log;
    REQUIRE(pipeline::run_pipeline(config, false, rerun_log) == 0);
    std::istringstream lines(rerun_log.str());
    std::string line;
    int stage_lines = 0;
    while (std::getline(lines, line)) {
        if (line.find(':') == std::string::npos) {
            continue;
        }
        ++stage_lines;
        CHECK(line.find("skipped") != std::string::npos);
    }
    CHECK(stage_lines >= 8);  // mix, train, 2x score, 2x evaluate, calibrate, report

    // Force bypasses the guards.
    std::ostringstream force_log;
    REQUIRE(pipeline::run_pipeline(config, true, force_log) == 0);
    CHECK(force_log.str().find("skipped") == std::string::npos);
}

TEST_CASE("report cells match independent recomputation from score files") {
    TempDir dir("pipe_recompute");
    auto config_path = write_pipeline_fixture(dir);
    auto config = pipeline::PipelineConfig::load(config_path);
    std::ostringstream log;
    REQUIRE(pipeline::run_pipeline(config, false, log) == 0);

    auto out = dir / "out";
    // summary.csv: auc cell equals a fresh evaluation of the score file.
    std::ifstream summary(out / "report" / "summary.csv");
    csv::Reader reader(summary, ',');
    REQUIRE(reader.header().size() >= 3);
    CHECK(reader.header()[2] == "auc");
    std::map<std::string, double> auc_cells;
    while (auto row = reader.next()) {
        auc_cells[(*row)[1]] = std::stod((*row)[2]);
    }
    for (const auto& dataset : {"evalA", "evalB"}) {
        auto scored = read_scores(out / "score" / ("det__" + std::string(dataset) + ".jsonl"));
        double expected = metrics::auc(metrics::roc_curve(scored));
        CHECK(auc_cells.at(dataset) == doctest::Approx(expected).epsilon(1e-4));
    }

    // per-language matrix: each cell equals auc over the hand-filtered slice.
    std::ifstream matrix(out / "report" / "per_language_auc.csv");
    csv::Reader mreader(matrix, ',');
    auto header = mreader.header();
    REQUIRE(header.size() > 2);
    while (auto row = mreader.next()) {
        auto scored = read_scores(out / "score" / ("det__" + (*row)[0] + ".jsonl"));
        for (std::size_t c = 2; c < header.size(); ++c) {
            if ((*row)[c].empty()) {
                continue;
            }
            std::vector<ScoredSample> slice;
            for (const auto& s : scored) {
                if (s.language == header[c]) {
                    slice.push_back(s);
                }
            }
            double expected = metrics::auc(metrics::roc_curve(slice));
            CHECK(std::stod((*row)[c]) == doctest::Approx(expected).epsilon(1e-4));
        }
    }

    // Calibration table mirrors the per-detector calibration JSON.
    std::ifstream calib_json(out / "calibrate" / "det.json");
    auto calib = nlohmann::json::parse(calib_json);
    std::ifstream ctable(out / "report" / "calibration.csv");
    csv::Reader creader(ctable, ',');
    auto crow = creader.next();
    REQUIRE(crow);
    CHECK((*crow)[0] == "det");
    CHECK(std::stod((*crow)[1]) ==
          doctest::Approx(calib.at("threshold").get<double>()).epsilon(1e-9));
    CHECK(std::stod(crow->back()) ==
          doctest::Approx(calib.at("average_macro_f1").get<double>()).epsilon(1e-3));
}

TEST_CASE("pipeline config validation catches dangling references") {
    TempDir dir("pipe_bad");
    nlohmann::json config{
        {"seed", 1},
        {"output_root", "out"},
        {"datasets", nlohmann::json::object()},
        {"stages",
         {{"train",
           {{{"name", "det"},
             {"model", "tiny-ff-mini"},
             {"train", "mix:nonexistent"},
             {"validation", "mix:nonexistent:validation"}}}}}},
    };
    write_file(dir / "pipeline.json", config.dump());
    CHECK_THROWS_WITH(pipeline::PipelineConfig::load(dir / "pipeline.json"),
                      doctest::Contains("unknown mix"));
}

TEST_CASE("pipeline halts downstream stages on a failing stage") {
    TempDir dir("pipe_fail");
    // Mix over an input that yields an empty corpus.
    write_file(dir / "bad.jsonl", R"({"text":"  ","label":"human"})" "\n");
    write_file(dir / "mix.cfg", "name = broken\ninput = bad.jsonl name=bad\n");
    nlohmann::json config{
        {"seed", 1},
        {"output_root", "out"},
        {"stages", {{"mix", {{{"name", "broken"}, {"spec", "mix.cfg"}}}}}},
    };
    write_file(dir / "pipeline.json", config.dump());
    auto loaded = pipeline::PipelineConfig::load(dir / "pipeline.json");
    std::ostringstream log;
    CHECK(pipeline::run_pipeline(loaded, false, log) == 1);
    CHECK(log.str().find("FAILED") != std::string::npos);
}

#ifdef MGTD_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    int status = std::system((std::string(MGTD_CLI_PATH) + " " + args + " >/dev/null 2>&1")
                                 .c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes: 0 success, 1 stage failure, 2 config error") {
    TempDir dir("cli");
    // Config error: missing spec file.
    CHECK(run_cli("mix --spec " + (dir / "nope.cfg").string() + " --out " +
                  (dir / "out").string()) == 2);
    // Parse error: unknown flag.
    CHECK(run_cli("mix --bogus") == 2);
    // Stage failure: valid spec, empty final corpus.
    write_file(dir / "bad.jsonl", R"({"text":"   ","label":"human"})" "\n");
    write_file(dir / "mix.cfg", "name = empty\ninput = bad.jsonl name=bad\n");
    CHECK(run_cli("mix --spec " + (dir / "mix.cfg").string() + " --out " +
                  (dir / "out").string()) == 1);
    // Success.
    write_file(dir / "ok.jsonl",
               R"({"text":"hello world","label":"human"})" "\n"
               R"({"text":"generated text","label":"machine","generator":"g"})" "\n");
    write_file(dir / "ok.cfg", "name = ok\ninput = ok.jsonl name=ok\n");
    CHECK(run_cli("mix --spec " + (dir / "ok.cfg").string() + " --out " +
                  (dir / "out_ok").string()) == 0);
    // Help exits zero.
    CHECK(run_cli("--help") == 0);
}
#endif
