#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtd/mix_spec.hpp"
#include "mgtd/text_sample.hpp"

namespace mgtd::corpus {

struct LabelCounts {
    std::int64_t human = 0;
    std::int64_t machine = 0;

    std::int64_t& of(Label label) { return label == Label::human ? human : machine; }
    std::int64_t of(Label label) const { return label == Label::human ? human : machine; }
    std::int64_t total() const { return human + machine; }
    bool operator==(const LabelCounts&) const = default;
};

LabelCounts count_labels(const std::vector<TextSample>& samples);

// Bookkeeping for one build_mix run. `conservation_holds` checks, per label,
//   ingested == final + validation_held_out
//              + duplicates_removed + cap_removed + language_removed
//              + sampling_removed - upsampled_added
struct CorpusStats {
    std::string mix_name;
    std::uint64_t seed = 0;
    LabelCounts ingested;
    std::int64_t rejected_rows = 0;  // dropped before entering the corpus
    LabelCounts duplicates_removed;
    LabelCounts cap_removed;
    LabelCounts language_removed;
    LabelCounts sampling_removed;
    LabelCounts upsampled_added;
    LabelCounts validation_held_out;
    LabelCounts final_counts;
    LabelCounts target_shortfall;      // class_target left unmet
    LabelCounts validation_shortfall;  // validation_per_class left unmet
    std::map<std::string, LabelCounts> per_source;    // of the final corpus
    std::map<std::string, LabelCounts> per_language;  // of the final corpus

    bool conservation_holds() const;
    nlohmann::json to_json() const;
    std::string table() const;
};

struct RejectEntry {
    std::string source;
    std::size_t row = 0;  // 1-based data-row number in the source
    std::string reason;
};

struct IngestResult {
    std::vector<TextSample> samples;
    std::vector<RejectEntry> rejects;
};

// Reads one source file (JSON Lines, CSV, or TSV with a header row),
// normalizes rows into TextSamples and collects per-row rejects instead of
// failing the run. Missing language/domain become "und"/"unknown"; ids are
// namespaced as `<source_name>/<local id or row number>`.
IngestResult ingest(const std::filesystem::path& path, const std::string& source_name,
                    const std::vector<std::pair<std::string, std::string>>& field_mapping,
                    std::optional<SourceFormat> format = std::nullopt);

struct DedupResult {
    std::vector<TextSample> samples;
    std::int64_t duplicates_removed = 0;
    LabelCounts removed_per_label;
};

// Exact dedup on the normalized text key (NFC + whitespace collapse,
// case-sensitive); the first occurrence in input order survives.
DedupResult deduplicate(const std::vector<TextSample>& samples);

// Seeded down-sampling of every (language, source, label) group to at most
// `per_group_cap` samples. Survivors keep their input order.
std::vector<TextSample> apply_caps(const std::vector<TextSample>& samples,
                                   std::int64_t per_group_cap, std::uint64_t seed,
                                   LabelCounts* removed = nullptr);

// Drops all samples of languages with fewer than `min_count` samples in the
// input. Order-preserving.
std::vector<TextSample> filter_languages(const std::vector<TextSample>& samples,
                                         std::int64_t min_count, LabelCounts* removed = nullptr);

// Under upsample_minority, duplicates seeded draws (with replacement) of the
// minority class until per-label counts match. Copies get fresh ids and an
// origin_id pointing at the source sample, and are appended after the input.
std::vector<TextSample> balance(const std::vector<TextSample>& samples, BalancePolicy policy,
                                std::uint64_t seed, LabelCounts* added = nullptr);

// Seeded sampling without replacement of min(class_target, available) per
// label. A shortfall is recorded, not an error. Survivors keep input order.
std::vector<TextSample> sample_fixed(const std::vector<TextSample>& samples,
                                     std::int64_t class_target, std::uint64_t seed,
                                     LabelCounts* removed = nullptr,
                                     LabelCounts* shortfall = nullptr);

struct BuildResult {
    CorpusStats stats;
    std::filesystem::path corpus_path;
    std::optional<std::filesystem::path> validation_path;
    std::filesystem::path stats_json_path;
    std::filesystem::path stats_table_path;
    std::optional<std::filesystem::path> rejects_path;
};

// Full pipeline: ingest -> deduplicate -> apply_caps -> filter_languages ->
// sample_fixed -> balance, then an optional disjoint validation carve-out.
// Rerunning with the same spec and inputs is byte-identical. Throws on an
// empty final corpus.
BuildResult build_mix(const MixSpec& spec, const std::filesystem::path& out_dir);

}  // namespace mgtd::corpus
