#include "ptm/csv.hpp"

#include <istream>
#include <ostream>

namespace ptm {

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == std::istream::traits_type::eof()) return false;

    record_line_ = line_no_;
    std::string cur;
    bool quoted = false;
    bool any = false;

    for (;;) {
        if (c == std::istream::traits_type::eof()) {
            fields.push_back(std::move(cur));
            return true;
        }
        any = true;
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                int nx = in_.peek();
                if (nx == '"') {
                    in_.get();
                    cur.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_no_;
                cur.push_back(ch);
            }
        } else {
            if (ch == '"' && cur.empty()) {
                quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(cur));
                cur.clear();
            } else if (ch == '\n') {
                ++line_no_;
                if (!cur.empty() && cur.back() == '\r') cur.pop_back();
                fields.push_back(std::move(cur));
                return true;
            } else {
                cur.push_back(ch);
            }
        }
        c = in_.get();
    }
    (void)any;
}

std::string csv_escape(std::string_view field) {
    bool needs_quote = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quote) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(',');
        out << csv_escape(fields[i]);
    }
    out.put('\n');
}

}  // namespace ptm
