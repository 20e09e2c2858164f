#pragma once

#include "treevar/graph.hpp"

#include <map>
#include <string>

namespace treevar {

// Matrices travel as comma-separated values, one row per line, optional
// single header line (detected by non-numeric first field). Doubles are
// written with round-trippable precision so reruns are byte-identical.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& header = {});

std::string format_double(double x);

// columns i,j[,weight]; weights default to 1
struct EdgeListCsv {
  int p = 0;  // 1 + max index seen (or an explicit override)
  std::vector<Edge> edges;
  std::vector<double> weights;
};
EdgeListCsv read_edge_list(const std::string& path);
void write_edge_list(const std::string& path, const std::vector<Edge>& edges,
                     const std::vector<double>& weights = {},
                     const std::vector<std::string>& header = {"i", "j", "weight"});

// flat "key = value" config lines, '#' comments
std::map<std::string, std::string> read_config(const std::string& path);

}  // namespace treevar
