#include "treevar/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace treevar {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::vector<double>> read_numeric_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.empty()) continue;
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (size_t i = 0; i < fields.size(); ++i)
      if (!parse_double(fields[i], row[i])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (first) {  // header line
        first = false;
        continue;
      }
      throw io_error(path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    first = false;
    if (!rows.empty() && rows.back().size() != row.size())
      throw io_error(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
  const auto rows = read_numeric_rows(path);
  if (rows.empty()) throw io_error(path + ": no numeric rows");
  Matrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv_matrix(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  if (!header.empty()) {
    if (static_cast<int>(header.size()) != m.cols())
      throw io_error("write_csv_matrix: header width mismatch");
    for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\n";
  }
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
  if (!out) throw io_error("write failed: " + path);
}

EdgeListCsv read_edge_list(const std::string& path) {
  const auto rows = read_numeric_rows(path);
  EdgeListCsv out;
  for (const auto& row : rows) {
    if (row.size() != 2 && row.size() != 3) throw io_error(path + ": edge rows need 2-3 columns");
    const int i = static_cast<int>(row[0]), j = static_cast<int>(row[1]);
    if (i < 0 || j < 0 || i == j) throw io_error(path + ": invalid edge endpoints");
    out.edges.emplace_back(std::min(i, j), std::max(i, j));
    out.weights.push_back(row.size() == 3 ? row[2] : 1.0);
    out.p = std::max(out.p, std::max(i, j) + 1);
  }
  return out;
}

void write_edge_list(const std::string& path, const std::vector<Edge>& edges,
                     const std::vector<double>& weights, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << "\n";
  for (size_t e = 0; e < edges.size(); ++e) {
    out << edges[e].first << "," << edges[e].second;
    if (!weights.empty()) out << "," << format_double(weights[e]);
    out << "\n";
  }
  if (!out) throw io_error("write failed: " + path);
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t\r");
      const auto e2 = s.find_last_not_of(" \t\r");
      return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
    };
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw io_error(path + ":" + std::to_string(lineno) + ": empty key");
    out[key] = val;
  }
  return out;
}

}  // namespace treevar
