#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mpg {

/// Shortest round-trip text for a double: 17 significant digits, "inf"/"-inf"/"nan" otherwise.
std::string format_number(double x);

/// A rectangular table of already formatted cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

enum class OutputFormat { kCsv, kJson };

OutputFormat parse_format(const std::string& name);
const char* extension(OutputFormat format);

std::string to_csv(const Table& table);
/// Array of objects keyed by the header; numeric-looking cells are emitted as
/// numbers, "inf"/"nan" as null.
std::string to_json(const Table& table);
void write_table(const std::filesystem::path& stem, const Table& table, OutputFormat format);
void write_text(const std::filesystem::path& path, const std::string& text);

std::string sha256_hex(const std::string& bytes);

}  // namespace mpg
