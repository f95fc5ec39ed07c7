#include "mgtd/scored_sample.hpp"

#include <cmath>
#include <fstream>

namespace mgtd {

nlohmann::json ScoredSample::to_json() const {
    nlohmann::json j{
        {"id", id},
        {"label", to_string(label)},
        {"score", score},
        {"dataset", dataset},
    };
    if (!language.empty()) {
        j["language"] = language;
    }
    if (!generator.empty()) {
        j["generator"] = generator;
    }
    return j;
}

std::vector<ScoredSample> read_scores(const std::filesystem::path& path,
                                      const std::string& default_dataset) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open score file: " + path.string());
    }
    std::vector<ScoredSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + why);
        };
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            fail("unparseable JSON");
        }
        ScoredSample s;
        if (!j.contains("id") || !j["id"].is_string()) {
            fail("missing id");
        }
        s.id = j["id"].get<std::string>();
        if (!j.contains("label") || !j["label"].is_string()) {
            fail("missing label (scores without ground truth cannot be evaluated)");
        }
        auto label = parse_label(j["label"].get<std::string>());
        if (!label) {
            fail("invalid label `" + j["label"].get<std::string>() + "`");
        }
        s.label = *label;
        if (!j.contains("score") || !j["score"].is_number()) {
            fail("missing score");
        }
        s.score = j["score"].get<double>();
        if (!std::isfinite(s.score) || s.score < 0.0 || s.score > 1.0) {
            fail("score outside [0, 1]: " + j["score"].dump());
        }
        if (j.contains("language") && j["language"].is_string()) {
            s.language = j["language"].get<std::string>();
        }
        if (j.contains("generator") && j["generator"].is_string()) {
            s.generator = j["generator"].get<std::string>();
        }
        if (j.contains("dataset") && j["dataset"].is_string()) {
            s.dataset = j["dataset"].get<std::string>();
        }
        if (s.dataset.empty()) {
            s.dataset = default_dataset;
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoredSample>& scores) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write score file: " + path.string());
    }
    for (const auto& s : scores) {
        out << s.to_json().dump() << '\n';
    }
}

}  // namespace mgtd
