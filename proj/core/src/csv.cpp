#include "mgtd/csv.hpp"

namespace mgtd::csv {

Reader::Reader(std::istream& in, char delimiter) : in_(in), delim_(delimiter) {
    if (auto h = parse_record()) {
        header_ = std::move(*h);
        // Strip a UTF-8 BOM from the first header cell.
        if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) {
            header_[0].erase(0, 3);
        }
    }
}

std::optional<std::vector<std::string>> Reader::next() {
    auto rec = parse_record();
    if (!rec) {
        return std::nullopt;
    }
    if (rec->size() < header_.size()) {
        rec->resize(header_.size());
    }
    return rec;
}

std::optional<std::vector<std::string>> Reader::parse_record() {
    // Skip blank lines between records.
    int c = in_.peek();
    while (c == '\n' || c == '\r') {
        in_.get();
        if (c == '\r' && in_.peek() == '\n') {
            in_.get();
        }
        ++line_;
        c = in_.peek();
    }
    if (c == EOF) {
        return std::nullopt;
    }
    record_line_ = line_ + 1;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool saw_any = false;
    while (true) {
        c = in_.get();
        if (c == EOF) {
            if (!saw_any && field.empty() && fields.empty()) {
                return std::nullopt;
            }
            fields.push_back(std::move(field));
            return fields;
        }
        saw_any = true;
        if (quoted) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') {
                    ++line_;
                }
                field.push_back(static_cast<char>(c));
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim_) {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in_.peek() == '\n') {
                in_.get();
            }
            ++line_;
            fields.push_back(std::move(field));
            return fields;
        } else if (c == '\n') {
            ++line_;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(static_cast<char>(c));
        }
    }
}

std::string escape_field(const std::string& field, char delimiter) {
    bool needs_quotes = field.find_first_of("\"\r\n") != std::string::npos ||
                        field.find(delimiter) != std::string::npos;
    if (!needs_quotes) {
        return field;
    }
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') {
            out += "\"\"";
        } else {
            out.push_back(ch);
        }
    }
    out.push_back('"');
    return out;
}

std::string join_row(const std::vector<std::string>& fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            out.push_back(delimiter);
        }
        out += escape_field(fields[i], delimiter);
    }
    out.push_back('\n');
    return out;
}

}  // namespace mgtd::csv
