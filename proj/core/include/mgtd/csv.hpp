#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace mgtd::csv {

// Minimal RFC-4180 style reader. Quoted fields may contain the delimiter,
// doubled quotes, and embedded newlines. The first record is the header.
class Reader {
public:
    Reader(std::istream& in, char delimiter);

    const std::vector<std::string>& header() const { return header_; }

    // Next data record, or nullopt at end of input. Records shorter than the
    // header are padded with empty fields; longer ones keep their extras.
    std::optional<std::vector<std::string>> next();

    // 1-based line number where the last returned record started.
    std::size_t record_line() const { return record_line_; }

private:
    std::optional<std::vector<std::string>> parse_record();

    std::istream& in_;
    char delim_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

std::string escape_field(const std::string& field, char delimiter = ',');
std::string join_row(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace mgtd::csv
