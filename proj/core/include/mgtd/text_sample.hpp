#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mgtd {

enum class Label { human, machine };

const char* to_string(Label label);
std::optional<Label> parse_label(std::string_view text);
Label other(Label label);

enum class Split { train, validation, test };

const char* to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

// One labeled text with its provenance. The unit of every corpus operation.
struct TextSample {
    std::string id;
    std::string text;
    Label label = Label::human;
    std::string generator;  // model name, or "human" for human-written texts
    std::string language;   // ISO-639-1 code, or "und"
    std::string domain;
    std::string source;     // origin dataset name
    Split split = Split::train;
    std::string origin_id;  // set on up-sampled copies, points at the original

    nlohmann::json to_json() const;
    static TextSample from_json(const nlohmann::json& j);

    // Checks the type invariants; returns a reason on failure.
    std::optional<std::string> violation() const;
};

// JSON Lines corpus IO. Reading validates every record and throws
// std::runtime_error naming the line on the first invalid one.
std::vector<TextSample> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<TextSample>& samples);

}  // namespace mgtd
