#include "mgtd/text_sample.hpp"

#include <fstream>

#include "mgtd/normalize.hpp"

namespace mgtd {

const char* to_string(Label label) {
    return label == Label::human ? "human" : "machine";
}

std::optional<Label> parse_label(std::string_view text) {
    if (text == "human") {
        return Label::human;
    }
    if (text == "machine") {
        return Label::machine;
    }
    return std::nullopt;
}

Label other(Label label) {
    return label == Label::human ? Label::machine : Label::human;
}

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") {
        return Split::train;
    }
    if (text == "validation" || text == "val" || text == "dev") {
        return Split::validation;
    }
    if (text == "test") {
        return Split::test;
    }
    return std::nullopt;
}

nlohmann::json TextSample::to_json() const {
    nlohmann::json j{
        {"id", id},
        {"text", text},
        {"label", to_string(label)},
        {"generator", generator},
        {"language", language},
        {"domain", domain},
        {"source", source},
        {"split", to_string(split)},
    };
    if (!origin_id.empty()) {
        j["origin_id"] = origin_id;
    }
    return j;
}

TextSample TextSample::from_json(const nlohmann::json& j) {
    TextSample s;
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    auto label = parse_label(j.at("label").get<std::string>());
    if (!label) {
        throw std::runtime_error("invalid label: " + j.at("label").get<std::string>());
    }
    s.label = *label;
    s.generator = j.at("generator").get<std::string>();
    s.language = j.at("language").get<std::string>();
    s.domain = j.at("domain").get<std::string>();
    s.source = j.at("source").get<std::string>();
    auto split = parse_split(j.at("split").get<std::string>());
    if (!split) {
        throw std::runtime_error("invalid split: " + j.at("split").get<std::string>());
    }
    s.split = *split;
    if (j.contains("origin_id")) {
        s.origin_id = j.at("origin_id").get<std::string>();
    }
    return s;
}

std::optional<std::string> TextSample::violation() const {
    if (normalize::blank(text)) {
        return "text is empty after trimming";
    }
    if ((label == Label::human) != (generator == "human")) {
        return std::string("label ") + to_string(label) + " inconsistent with generator `" +
               generator + "`";
    }
    if (id.empty()) {
        return "empty id";
    }
    return std::nullopt;
}

std::vector<TextSample> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open corpus: " + path.string());
    }
    std::vector<TextSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(TextSample::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& ex) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                                     ex.what());
        }
        if (auto why = out.back().violation()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + *why);
        }
    }
    return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<TextSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write corpus: " + path.string());
    }
    for (const auto& s : samples) {
        out << s.to_json().dump() << '\n';
    }
}

}  // namespace mgtd
