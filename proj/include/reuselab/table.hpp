#pragma once

#include <string>
#include <vector>

namespace reuselab {

// Plain tabular output shared by every report the CLI renders.
struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;  // provenance lines

  std::string to_markdown() const {
    std::string out = "|";
    for (const auto& h : headers) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < headers.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& row : rows) {
      out += "|";
      for (const auto& cell : row) out += " " + cell + " |";
      out += "\n";
    }
    if (!footer.empty()) {
      out += "\n";
      for (const auto& line : footer) out += "_" + line + "_\n";
    }
    return out;
  }

  std::string to_csv() const {
    std::string out = join_csv(headers);
    for (const auto& row : rows) out += join_csv(row);
    for (const auto& line : footer) out += "# " + line + "\n";
    return out;
  }

 private:
  static std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string q = "\"";
    for (char c : cell) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  static std::string join_csv(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += quote(cells[i]);
    }
    return line + "\n";
  }
};

}  // namespace reuselab
