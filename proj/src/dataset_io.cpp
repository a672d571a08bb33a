#include "nyla/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace nyla {

namespace {

std::string at_line(const std::string& path, std::size_t line, const std::string& what) {
  return path + ":" + std::to_string(line) + ": " + what;
}

double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw io_error(at_line(path, line, "not a number: '" + tok + "'"));
  }
  if (pos != tok.size())
    throw io_error(at_line(path, line, "trailing characters in number: '" + tok + "'"));
  if (!std::isfinite(v)) throw io_error(at_line(path, line, "non-finite value"));
  return v;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<int> map_labels(const std::vector<double>& raw, const std::string& path) {
  std::set<double> classes(raw.begin(), raw.end());
  std::vector<int> out;
  out.reserve(raw.size());
  const bool pm1 = std::all_of(classes.begin(), classes.end(),
                               [](double v) { return v == 1.0 || v == -1.0; });
  if (pm1) {
    for (double v : raw) out.push_back(v >= 0.0 ? 1 : -1);
    return out;
  }
  if (classes.size() != 2)
    throw io_error(path + ": labels form " + std::to_string(classes.size()) +
                   " classes; exactly two (or +-1) expected");
  const double lo = *classes.begin();
  for (double v : raw) out.push_back(v == lo ? -1 : 1);
  return out;
}

Dataset ingest_csv(const std::string& path, std::ifstream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(t);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trimmed(tok);
      if (tok.empty()) throw io_error(at_line(path, lineno, "empty field"));
      row.push_back(parse_double(tok, path, lineno));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error(at_line(path, lineno,
                             "row has " + std::to_string(row.size()) + " fields, expected " +
                                 std::to_string(rows.front().size())));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path + ": no data rows");

  const std::size_t ncols = rows.front().size();
  bool last_is_label = ncols >= 2;
  if (last_is_label)
    for (const auto& r : rows)
      if (r.back() != 1.0 && r.back() != -1.0) {
        last_is_label = false;
        break;
      }

  const std::size_t d = last_is_label ? ncols - 1 : ncols;
  Dataset ds;
  ds.points = Matrix(static_cast<index_t>(rows.size()), static_cast<index_t>(d));
  std::vector<double> raw_labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j)
      ds.points(static_cast<index_t>(i), static_cast<index_t>(j)) = rows[i][j];
    if (last_is_label) raw_labels.push_back(rows[i].back());
  }
  if (last_is_label) ds.labels = map_labels(raw_labels, path);
  return ds;
}

Dataset ingest_sparse(const std::string& path, std::ifstream& in) {
  struct Row {
    double label;
    std::vector<std::pair<index_t, double>> entries;
  };
  std::vector<Row> rows;
  index_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    std::stringstream ss(t);
    std::string tok;
    if (!(ss >> tok)) continue;
    Row row;
    row.label = parse_double(tok, path, lineno);
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw io_error(at_line(path, lineno, "expected idx:val, got '" + tok + "'"));
      const std::string idx_s = tok.substr(0, colon);
      const std::string val_s = tok.substr(colon + 1);
      const double idx_d = parse_double(idx_s, path, lineno);
      if (idx_d < 1.0 || idx_d != std::floor(idx_d))
        throw io_error(at_line(path, lineno, "index must be a positive integer: '" + idx_s + "'"));
      const index_t idx = static_cast<index_t>(idx_d);
      row.entries.emplace_back(idx - 1, parse_double(val_s, path, lineno));
      dim = std::max(dim, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path + ": no data rows");
  if (dim == 0) throw io_error(path + ": no features found");

  Dataset ds;
  ds.points = Matrix(static_cast<index_t>(rows.size()), dim);
  std::vector<double> raw_labels;
  raw_labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, v] : rows[i].entries) ds.points(static_cast<index_t>(i), j) = v;
    raw_labels.push_back(rows[i].label);
  }
  ds.labels = map_labels(raw_labels, path);
  return ds;
}

}  // namespace

DatasetFormat parse_format(const std::string& name) {
  if (name == "csv") return DatasetFormat::csv;
  if (name == "sparse" || name == "sparse-index-value") return DatasetFormat::sparse_index_value;
  throw io_error("unknown dataset format: '" + name + "'");
}

Dataset ingest(const std::string& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open file");
  return format == DatasetFormat::csv ? ingest_csv(path, in) : ingest_sparse(path, in);
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  char buf[64];
  for (index_t i = 0; i < data.size(); ++i) {
    for (index_t j = 0; j < data.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.points(i, j));
      out << (j ? "," : "") << buf;
    }
    if (data.labels) out << "," << (*data.labels)[static_cast<std::size_t>(i)];
    out << "\n";
  }
  if (!out) throw io_error(path + ": write failed");
}

}  // namespace nyla
