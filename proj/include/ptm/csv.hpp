#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ptm {

// RFC-4180 CSV. Quoted fields may contain commas, quotes ("" escape) and
// newlines; rows end at an unquoted \n (a preceding \r is stripped).
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads one record. Returns false at end of input.
    // line() reports the 1-based line where the record started.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 1;
    std::size_t record_line_ = 0;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);
inline void write_csv_row(std::ostream& out, std::initializer_list<std::string> fields) {
    write_csv_row(out, std::span<const std::string>(fields.begin(), fields.size()));
}

}  // namespace ptm
