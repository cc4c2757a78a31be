#include "steer/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "steer/error.hpp"
#include "steer/rng.hpp"

namespace steer {

using nlohmann::json;

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

std::string dataset_id_for(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("ds-") + buf;
}

namespace {

[[noreturn]] void reject(const std::string& msg, std::size_t row, std::size_t col,
                         std::size_t line) {
  json detail = {{"line", line}};
  if (row > 0) detail["row"] = row;
  if (col > 0) detail["column"] = col;
  std::string where = row > 0 ? " at row " + std::to_string(row) : std::string();
  if (col > 0) where += ", column " + std::to_string(col);
  throw Error(ErrorCode::invalid_csv, msg + where, std::move(detail));
}

// RFC-4180-ish: quoted fields with doubled quotes, no embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t row, std::size_t lineno) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) reject("unterminated quoted field", row, cells.size() + 1, lineno);
  cells.push_back(std::move(cur));
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_real(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset load_csv(std::string_view bytes, std::string name, std::optional<std::string> positive) {
  Dataset ds;
  ds.id = dataset_id_for(bytes);
  ds.name = name.empty() ? ds.id : std::move(name);

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) reject("missing header row", 0, 0, 1);
  if (lines.front().size() >= 3 && lines.front().substr(0, 3) == "\xEF\xBB\xBF") {
    lines.front().remove_prefix(3);
  }

  const auto header = split_csv_line(lines.front(), 0, 1);
  if (header.size() < 2) reject("need at least one feature column and a label column", 0, 0, 1);
  ds.n_cols = header.size() - 1;
  for (std::size_t c = 0; c < ds.n_cols; ++c) ds.feature_names.emplace_back(trim(header[c]));

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li;
    const std::size_t lineno = li + 1;
    const auto cells = split_csv_line(lines[li], row, lineno);
    if (cells.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " cells, found " +
                 std::to_string(cells.size()),
             row, 0, lineno);
    }
    for (std::size_t c = 0; c < ds.n_cols; ++c) {
      if (trim(cells[c]).empty()) reject("empty feature cell", row, c + 1, lineno);
      double v;
      if (!parse_real(cells[c], v)) reject("non-numeric feature cell", row, c + 1, lineno);
      ds.features.push_back(v);
    }
    const std::string label(trim(cells.back()));
    if (label.empty()) reject("empty label cell", row, header.size(), lineno);
    auto it = std::find(ds.classes.begin(), ds.classes.end(), label);
    if (it == ds.classes.end()) {
      ds.classes.push_back(label);
      it = ds.classes.end() - 1;
    }
    ds.labels.push_back(static_cast<int>(it - ds.classes.begin()));
  }
  ds.n_rows = ds.labels.size();
  if (ds.n_rows < 2) reject("need at least 2 data rows", 0, 0, lines.size());
  if (ds.classes.size() < 2) reject("need at least 2 distinct classes", 0, 0, lines.size());

  if (positive) {
    auto it = std::find(ds.classes.begin(), ds.classes.end(), *positive);
    if (it == ds.classes.end()) {
      throw Error(ErrorCode::invalid_csv, "positive class '" + *positive + "' not present",
                  json{{"positive_class", *positive}});
    }
    ds.positive_class = static_cast<int>(it - ds.classes.begin());
  } else {
    auto it = std::max_element(ds.classes.begin(), ds.classes.end());
    ds.positive_class = static_cast<int>(it - ds.classes.begin());
  }
  return ds;
}

std::string to_csv(const Dataset& ds) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& f : ds.feature_names) os << f << ',';
  os << "label\n";
  for (std::size_t r = 0; r < ds.n_rows; ++r) {
    for (std::size_t c = 0; c < ds.n_cols; ++c) os << ds.at(r, c) << ',';
    os << ds.classes[static_cast<std::size_t>(ds.labels[r])] << '\n';
  }
  return os.str();
}

Dataset make_blobs(std::size_t n, std::size_t d, double separation, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double offset = separation / std::sqrt(static_cast<double>(d));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.n_rows = n;
  ds.n_cols = d;
  ds.classes = {"negative", "positive"};
  ds.positive_class = 1;
  for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      ds.features.push_back(noise(rng) + (labels[i] == 1 ? offset : 0.0));
    }
  }
  ds.labels = std::move(labels);
  // Keep class order consistent with what load_csv would infer.
  if (ds.labels.front() == 1) {
    std::swap(ds.classes[0], ds.classes[1]);
    for (int& y : ds.labels) y = 1 - y;
    ds.positive_class = 0;
  }
  const std::string csv = to_csv(ds);
  ds.id = dataset_id_for(csv);
  ds.name = "blobs";
  return ds;
}

json describe(const Dataset& ds) {
  json counts = json::object();
  const auto cc = ds.class_counts();
  for (std::size_t i = 0; i < ds.classes.size(); ++i) counts[ds.classes[i]] = cc[i];
  return {{"id", ds.id},
          {"name", ds.name},
          {"n", ds.n_rows},
          {"d", ds.n_cols},
          {"classes", ds.classes},
          {"class_counts", counts},
          {"positive_class", ds.classes[static_cast<std::size_t>(ds.positive_class)]},
          {"feature_names", ds.feature_names}};
}

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.id = ds.id;
  out.name = ds.name;
  out.n_rows = rows.size();
  out.n_cols = ds.n_cols;
  out.classes = ds.classes;
  out.positive_class = ds.positive_class;
  out.feature_names = ds.feature_names;
  out.features.reserve(rows.size() * ds.n_cols);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    auto src = ds.row(r);
    out.features.insert(out.features.end(), src.begin(), src.end());
    out.labels.push_back(ds.labels[r]);
  }
  return out;
}

}  // namespace steer
