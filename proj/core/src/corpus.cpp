#include "mgtd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mgtd/csv.hpp"
#include "mgtd/normalize.hpp"
#include "mgtd/random.hpp"

namespace mgtd::corpus {

namespace {

std::string ascii_lower(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

using Row = std::vector<std::pair<std::string, std::string>>;  // column -> value

std::optional<std::string> row_value(const Row& row, const std::string& column) {
    for (const auto& [col, val] : row) {
        if (col == column) {
            return val;
        }
    }
    return std::nullopt;
}

// Field resolution: an explicit mapping wins; otherwise a column with the
// exact field name passes through, unless that column is consumed as the
// source of some mapping.
class FieldResolver {
public:
    explicit FieldResolver(const std::vector<std::pair<std::string, std::string>>& mapping)
        : mapping_(mapping) {
        for (const auto& [col, field] : mapping) {
            mapped_fields_.insert(field);
            source_columns_.insert(col);
        }
    }

    std::optional<std::string> value(const Row& row, const std::string& field) const {
        for (const auto& [col, dest] : mapping_) {
            if (dest == field) {
                return row_value(row, col);
            }
        }
        if (source_columns_.count(field)) {
            return std::nullopt;
        }
        return row_value(row, field);
    }

private:
    const std::vector<std::pair<std::string, std::string>>& mapping_;
    std::set<std::string> mapped_fields_;
    std::set<std::string> source_columns_;
};

// One source row -> TextSample, or a reject reason.
std::optional<TextSample> convert_row(const Row& row, const FieldResolver& fields,
                                      const std::string& source_name, std::size_t data_row,
                                      std::string* reason) {
    TextSample s;
    s.source = source_name;

    auto text = fields.value(row, "text");
    if (!text) {
        *reason = "missing text";
        return std::nullopt;
    }
    if (normalize::blank(*text)) {
        *reason = "text empty after trimming";
        return std::nullopt;
    }
    s.text = *text;

    auto label_raw = fields.value(row, "label");
    if (!label_raw) {
        *reason = "missing label";
        return std::nullopt;
    }
    auto label = parse_label(ascii_lower(config::trim(*label_raw)));
    if (!label) {
        *reason = "label `" + *label_raw + "` is not human/machine";
        return std::nullopt;
    }
    s.label = *label;

    std::string generator = config::trim(fields.value(row, "generator").value_or(""));
    if (s.label == Label::human) {
        if (!generator.empty() && generator != "human") {
            *reason = "human-labeled row names generator `" + generator + "`";
            return std::nullopt;
        }
        s.generator = "human";
    } else {
        if (generator == "human") {
            *reason = "machine-labeled row names generator `human`";
            return std::nullopt;
        }
        s.generator = generator.empty() ? "unknown" : generator;
    }

    std::string language = config::trim(fields.value(row, "language").value_or(""));
    s.language = language.empty() ? "und" : language;
    std::string domain = config::trim(fields.value(row, "domain").value_or(""));
    s.domain = domain.empty() ? "unknown" : domain;

    std::string split_raw = config::trim(fields.value(row, "split").value_or(""));
    if (split_raw.empty()) {
        s.split = Split::train;
    } else {
        auto split = parse_split(ascii_lower(split_raw));
        if (!split) {
            *reason = "invalid split `" + split_raw + "`";
            return std::nullopt;
        }
        s.split = *split;
    }

    std::string local_id = config::trim(fields.value(row, "id").value_or(""));
    if (local_id.empty()) {
        local_id = "row" + std::to_string(data_row);
    }
    s.id = source_name + "/" + local_id;
    return s;
}

Row json_to_row(const nlohmann::json& j) {
    Row row;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) {
            row.emplace_back(key, value.get<std::string>());
        } else if (value.is_number() || value.is_boolean()) {
            row.emplace_back(key, value.dump());
        }
        // nested objects/arrays are not mappable and are skipped
    }
    return row;
}

std::string group_key(const TextSample& s) {
    return s.language + "\x1f" + s.source + "\x1f" + to_string(s.label);
}

}  // namespace

LabelCounts count_labels(const std::vector<TextSample>& samples) {
    LabelCounts counts;
    for (const auto& s : samples) {
        ++counts.of(s.label);
    }
    return counts;
}

bool CorpusStats::conservation_holds() const {
    for (Label label : {Label::human, Label::machine}) {
        std::int64_t reconstructed = final_counts.of(label) + validation_held_out.of(label) +
                                     duplicates_removed.of(label) + cap_removed.of(label) +
                                     language_removed.of(label) + sampling_removed.of(label) -
                                     upsampled_added.of(label);
        if (reconstructed != ingested.of(label)) {
            return false;
        }
    }
    return true;
}

nlohmann::json CorpusStats::to_json() const {
    auto counts = [](const LabelCounts& c) {
        return nlohmann::json{{"human", c.human}, {"machine", c.machine}};
    };
    nlohmann::json per_source_json = nlohmann::json::object();
    for (const auto& [source, c] : per_source) {
        per_source_json[source] = counts(c);
    }
    nlohmann::json per_language_json = nlohmann::json::object();
    for (const auto& [language, c] : per_language) {
        per_language_json[language] = counts(c);
    }
    return nlohmann::json{
        {"mix_name", mix_name},
        {"seed", seed},
        {"ingested", counts(ingested)},
        {"rejected_rows", rejected_rows},
        {"duplicates_removed", counts(duplicates_removed)},
        {"cap_removed", counts(cap_removed)},
        {"language_removed", counts(language_removed)},
        {"sampling_removed", counts(sampling_removed)},
        {"upsampled_added", counts(upsampled_added)},
        {"validation_held_out", counts(validation_held_out)},
        {"final", counts(final_counts)},
        {"target_shortfall", counts(target_shortfall)},
        {"validation_shortfall", counts(validation_shortfall)},
        {"conservation_holds", conservation_holds()},
        {"per_source", per_source_json},
        {"per_language", per_language_json},
    };
}

std::string CorpusStats::table() const {
    std::ostringstream out;
    auto line = [&](const std::string& name, const LabelCounts& c) {
        out << "  " << name;
        for (std::size_t i = name.size(); i < 24; ++i) {
            out << ' ';
        }
        out << c.human << " human / " << c.machine << " machine\n";
    };
    out << "corpus mix `" << mix_name << "` (seed " << seed << ")\n";
    line("ingested", ingested);
    out << "  rejected rows           " << rejected_rows << "\n";
    line("duplicates removed", duplicates_removed);
    line("cap removed", cap_removed);
    line("language removed", language_removed);
    line("sampling removed", sampling_removed);
    line("upsampled added", upsampled_added);
    line("validation held out", validation_held_out);
    line("final", final_counts);
    out << "  conservation            " << (conservation_holds() ? "ok" : "VIOLATED") << "\n";
    out << "per source:\n";
    for (const auto& [source, c] : per_source) {
        line(source, c);
    }
    out << "per language:\n";
    for (const auto& [language, c] : per_language) {
        line(language, c);
    }
    return out.str();
}

IngestResult ingest(const std::filesystem::path& path, const std::string& source_name,
                    const std::vector<std::pair<std::string, std::string>>& field_mapping,
                    std::optional<SourceFormat> format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("ingest: cannot open " + path.string());
    }
    SourceFormat fmt = format.value_or(deduce_format(path));
    FieldResolver fields(field_mapping);
    IngestResult result;
    std::unordered_set<std::string> seen_ids;

    auto emit = [&](const Row& row, std::size_t row_no) {
        std::string reason;
        auto sample = convert_row(row, fields, source_name, row_no, &reason);
        if (!sample) {
            result.rejects.push_back({source_name, row_no, reason});
            return;
        }
        if (!seen_ids.insert(sample->id).second) {
            result.rejects.push_back({source_name, row_no, "duplicate id `" + sample->id + "`"});
            return;
        }
        result.samples.push_back(std::move(*sample));
    };

    if (fmt == SourceFormat::jsonl) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (config::trim(line).empty()) {
                continue;
            }
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                result.rejects.push_back({source_name, line_no, "unparseable JSON"});
                continue;
            }
            emit(json_to_row(j), line_no);
        }
    } else {
        csv::Reader reader(in, fmt == SourceFormat::csv ? ',' : '\t');
        if (reader.header().empty()) {
            throw std::runtime_error("ingest: " + path.string() + " has no header row");
        }
        while (auto rec = reader.next()) {
            Row row;
            for (std::size_t i = 0; i < reader.header().size() && i < rec->size(); ++i) {
                row.emplace_back(reader.header()[i], (*rec)[i]);
            }
            emit(row, reader.record_line());
        }
    }
    return result;
}

DedupResult deduplicate(const std::vector<TextSample>& samples) {
    DedupResult result;
    result.samples.reserve(samples.size());
    std::unordered_set<std::string> seen;
    seen.reserve(samples.size() * 2);
    for (const auto& s : samples) {
        if (seen.insert(normalize::dedup_key(s.text)).second) {
            result.samples.push_back(s);
        } else {
            ++result.duplicates_removed;
            ++result.removed_per_label.of(s.label);
        }
    }
    return result;
}

std::vector<TextSample> apply_caps(const std::vector<TextSample>& samples,
                                   std::int64_t per_group_cap, std::uint64_t seed,
                                   LabelCounts* removed) {
    if (per_group_cap < 1) {
        throw std::invalid_argument("apply_caps: per_group_cap must be >= 1");
    }
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        groups[group_key(samples[i])].push_back(i);
    }
    std::vector<bool> keep(samples.size(), true);
    for (const auto& [key, members] : groups) {
        if (static_cast<std::int64_t>(members.size()) <= per_group_cap) {
            continue;
        }
        // Seed derived from the group key, so selection inside one group is
        // independent of all other groups.
        rng::Prng prng(rng::derive_seed(seed, "cap|" + key));
        auto chosen = rng::sample_indices(members.size(), static_cast<std::size_t>(per_group_cap),
                                          prng);
        std::vector<bool> in_group_keep(members.size(), false);
        for (auto c : chosen) {
            in_group_keep[c] = true;
        }
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (!in_group_keep[m]) {
                keep[members[m]] = false;
            }
        }
    }
    std::vector<TextSample> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (keep[i]) {
            out.push_back(samples[i]);
        } else if (removed) {
            ++removed->of(samples[i].label);
        }
    }
    return out;
}

std::vector<TextSample> filter_languages(const std::vector<TextSample>& samples,
                                         std::int64_t min_count, LabelCounts* removed) {
    if (min_count < 1) {
        throw std::invalid_argument("filter_languages: min_count must be >= 1");
    }
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& s : samples) {
        ++counts[s.language];
    }
    std::vector<TextSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (counts[s.language] >= min_count) {
            out.push_back(s);
        } else if (removed) {
            ++removed->of(s.label);
        }
    }
    return out;
}

std::vector<TextSample> balance(const std::vector<TextSample>& samples, BalancePolicy policy,
                                std::uint64_t seed, LabelCounts* added) {
    if (policy == BalancePolicy::none) {
        return samples;
    }
    LabelCounts counts = count_labels(samples);
    if (counts.human == 0 || counts.machine == 0) {
        throw std::runtime_error(std::string("balance: degenerate corpus, no ") +
                                 (counts.human == 0 ? "human" : "machine") + " samples");
    }
    if (counts.human == counts.machine) {
        return samples;
    }
    Label minority = counts.human < counts.machine ? Label::human : Label::machine;
    std::int64_t need = std::abs(counts.human - counts.machine);

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label == minority) {
            pool.push_back(i);
        }
    }
    std::vector<TextSample> out = samples;
    out.reserve(samples.size() + static_cast<std::size_t>(need));
    rng::Prng prng(rng::derive_seed(seed, std::string("balance|") + to_string(minority)));
    std::unordered_map<std::size_t, int> copies;  // original index -> copies made
    for (std::int64_t k = 0; k < need; ++k) {
        std::size_t pick = pool[prng.below(pool.size())];
        TextSample copy = samples[pick];
        copy.origin_id = copy.id;
        copy.id += "#up" + std::to_string(++copies[pick]);
        out.push_back(std::move(copy));
        if (added) {
            ++added->of(minority);
        }
    }
    return out;
}

std::vector<TextSample> sample_fixed(const std::vector<TextSample>& samples,
                                     std::int64_t class_target, std::uint64_t seed,
                                     LabelCounts* removed, LabelCounts* shortfall) {
    if (class_target < 1) {
        throw std::invalid_argument("sample_fixed: class_target must be >= 1");
    }
    std::vector<bool> keep(samples.size(), false);
    for (Label label : {Label::human, Label::machine}) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].label == label) {
                pool.push_back(i);
            }
        }
        auto available = static_cast<std::int64_t>(pool.size());
        if (available <= class_target) {
            for (auto i : pool) {
                keep[i] = true;
            }
            if (shortfall) {
                shortfall->of(label) += class_target - available;
            }
            continue;
        }
        rng::Prng prng(rng::derive_seed(seed, std::string("sample|") + to_string(label)));
        for (auto c : rng::sample_indices(pool.size(), static_cast<std::size_t>(class_target),
                                          prng)) {
            keep[pool[c]] = true;
        }
    }
    std::vector<TextSample> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (keep[i]) {
            out.push_back(samples[i]);
        } else if (removed) {
            ++removed->of(samples[i].label);
        }
    }
    return out;
}

BuildResult build_mix(const MixSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    std::filesystem::create_directories(out_dir);

    CorpusStats stats;
    stats.mix_name = spec.name;
    stats.seed = spec.seed;

    std::vector<TextSample> samples;
    std::vector<RejectEntry> rejects;
    for (const auto& input : spec.inputs) {
        auto result = ingest(input.path, input.name, input.field_mapping, input.format);
        samples.insert(samples.end(), std::make_move_iterator(result.samples.begin()),
                       std::make_move_iterator(result.samples.end()));
        rejects.insert(rejects.end(), result.rejects.begin(), result.rejects.end());
    }
    stats.ingested = count_labels(samples);
    stats.rejected_rows = static_cast<std::int64_t>(rejects.size());

    auto deduped = deduplicate(samples);
    samples = std::move(deduped.samples);
    stats.duplicates_removed = deduped.removed_per_label;

    if (spec.per_group_cap) {
        samples = apply_caps(samples, *spec.per_group_cap, rng::derive_seed(spec.seed, "caps"),
                             &stats.cap_removed);
    }
    if (spec.language_min_count) {
        samples = filter_languages(samples, *spec.language_min_count, &stats.language_removed);
    }

    std::vector<TextSample> validation;
    if (spec.class_target) {
        std::vector<TextSample> pool = samples;
        samples = sample_fixed(pool, *spec.class_target,
                               rng::derive_seed(spec.seed, "sample_fixed"),
                               &stats.sampling_removed, &stats.target_shortfall);
        if (spec.validation_per_class) {
            // The validation subsample comes from the leftover pool, so it is
            // disjoint from the main corpus by construction.
            std::unordered_set<std::string> main_ids;
            for (const auto& s : samples) {
                main_ids.insert(s.id);
            }
            std::vector<TextSample> remainder;
            for (const auto& s : pool) {
                if (!main_ids.count(s.id)) {
                    remainder.push_back(s);
                }
            }
            LabelCounts taken;
            validation = sample_fixed(remainder, *spec.validation_per_class,
                                      rng::derive_seed(spec.seed, "validation"), nullptr,
                                      &stats.validation_shortfall);
            taken = count_labels(validation);
            stats.validation_held_out = taken;
            stats.sampling_removed.human -= taken.human;
            stats.sampling_removed.machine -= taken.machine;
        }
    } else if (spec.validation_per_class) {
        // No class target: the validation subsample is carved out of the
        // corpus itself.
        validation = sample_fixed(samples, *spec.validation_per_class,
                                  rng::derive_seed(spec.seed, "validation"), nullptr,
                                  &stats.validation_shortfall);
        std::unordered_set<std::string> val_ids;
        for (const auto& s : validation) {
            val_ids.insert(s.id);
        }
        std::vector<TextSample> rest;
        for (auto& s : samples) {
            if (!val_ids.count(s.id)) {
                rest.push_back(std::move(s));
            }
        }
        samples = std::move(rest);
        stats.validation_held_out = count_labels(validation);
    }
    for (auto& s : validation) {
        s.split = Split::validation;
    }

    if (spec.balance_policy != BalancePolicy::none) {
        samples = balance(samples, spec.balance_policy, rng::derive_seed(spec.seed, "balance"),
                          &stats.upsampled_added);
    }

    stats.final_counts = count_labels(samples);
    for (const auto& s : samples) {
        ++stats.per_source[s.source].of(s.label);
        ++stats.per_language[s.language].of(s.label);
    }
    if (stats.final_counts.total() == 0) {
        throw std::runtime_error("build_mix: final corpus for `" + spec.name + "` is empty");
    }

    BuildResult result;
    result.stats = stats;
    result.corpus_path = out_dir / "corpus.jsonl";
    write_corpus(result.corpus_path, samples);
    if (!validation.empty() || spec.validation_per_class) {
        result.validation_path = out_dir / "validation.jsonl";
        write_corpus(*result.validation_path, validation);
    }
    result.stats_json_path = out_dir / "stats.json";
    {
        std::ofstream out(result.stats_json_path, std::ios::binary);
        out << stats.to_json().dump(2) << '\n';
    }
    result.stats_table_path = out_dir / "stats.txt";
    {
        std::ofstream out(result.stats_table_path, std::ios::binary);
        out << stats.table();
    }
    if (!rejects.empty()) {
        result.rejects_path = out_dir / "rejects.jsonl";
        std::ofstream out(*result.rejects_path, std::ios::binary);
        for (const auto& r : rejects) {
            out << nlohmann::json{{"source", r.source}, {"row", r.row}, {"reason", r.reason}}
                       .dump()
                << '\n';
        }
    }
    return result;
}

}  // namespace mgtd::corpus
