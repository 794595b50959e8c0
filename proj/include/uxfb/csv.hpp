#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace uxfb::csv {

struct Record {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quote escaping, quoted fields may
/// span lines. Blank lines are skipped. Throws Error(Parse) on an unterminated
/// quote.
std::vector<Record> read(std::istream& in);

/// Quotes the field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace uxfb::csv
