#include "atekit/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace atekit::dataio {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  std::string out(s.substr(a, b - a));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return v;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA"; }

std::size_t column_index(const CsvTable& t, const std::string& name, ErrorCode code) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw Error(code, "column '" + name + "' not found");
  return static_cast<std::size_t>(it - t.header.begin());
}

double parse_cell(const CsvTable& t, std::size_t r, std::size_t c) {
  const std::string& s = t.rows[r][c];
  if (is_missing(s)) throw Error(ErrorCode::MissingValue, "missing value in column '" + t.header[c] + "'", r, c);
  const auto v = parse_number(s);
  if (!v) throw Error(ErrorCode::ParseError, "cannot parse '" + s + "' in column '" + t.header[c] + "'", r, c);
  return *v;
}

double parse_treatment(const CsvTable& t, std::size_t r, std::size_t c) {
  const std::string& s = t.rows[r][c];
  if (is_missing(s)) throw Error(ErrorCode::MissingValue, "missing treatment value", r, c);
  const auto v = parse_number(s);
  if (!v || (*v != 0.0 && *v != 1.0)) {
    throw Error(ErrorCode::NonBinaryTreatment, "treatment value '" + s + "' is not 0 or 1", r, c);
  }
  return *v;
}

double parse_binary_text(const CsvTable& t, std::size_t r, std::size_t c, const std::string& positive) {
  const std::string& s = t.rows[r][c];
  if (positive.empty()) return parse_cell(t, r, c);
  if (is_missing(s)) throw Error(ErrorCode::MissingValue, "missing value in column '" + t.header[c] + "'", r, c);
  return s == positive ? 1.0 : 0.0;
}

Dataset build(std::vector<RawRecord> records, std::vector<std::string> names) {
  return validate_dataset(records, std::move(names));
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t r = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      t.header = split_line(line);
      have_header = true;
      continue;
    }
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::ParseError,
                  "row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()),
                  r, std::min(cells.size(), t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    ++r;
  }
  if (!have_header) throw Error(ErrorCode::ParseError, "file has no header row");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FileNotFound, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

Dataset table_to_dataset(const CsvTable& t, const std::string& outcome_col, const std::string& treatment_col,
                         const std::vector<std::string>& drop_cols) {
  const std::size_t yc = column_index(t, outcome_col, ErrorCode::MissingColumn);
  const std::size_t wc = column_index(t, treatment_col, ErrorCode::MissingColumn);
  for (const auto& d : drop_cols) column_index(t, d, ErrorCode::MissingColumn);
  const std::size_t n = t.rows.size();

  std::vector<RawRecord> rec(n);
  for (std::size_t r = 0; r < n; ++r) {
    rec[r].y = parse_cell(t, r, yc);
    rec[r].w = parse_treatment(t, r, wc);
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == yc || c == wc) continue;
    if (std::find(drop_cols.begin(), drop_cols.end(), t.header[c]) != drop_cols.end()) continue;
    bool numeric = true, any_number = false;
    for (std::size_t r = 0; r < n && numeric; ++r) {
      const std::string& s = t.rows[r][c];
      if (is_missing(s)) continue;
      if (parse_number(s)) any_number = true;
      else numeric = false;
    }
    if (numeric && (any_number || n == 0)) {
      for (std::size_t r = 0; r < n; ++r) rec[r].x.push_back(parse_cell(t, r, c));
      names.push_back(t.header[c]);
      continue;
    }
    std::set<std::string> levels;
    for (std::size_t r = 0; r < n; ++r) {
      if (t.rows[r][c].empty()) {
        throw Error(ErrorCode::MissingValue, "missing value in column '" + t.header[c] + "'", r, c);
      }
      levels.insert(t.rows[r][c]);
    }
    std::vector<std::string> kept(levels.begin(), levels.end());
    if (!kept.empty()) kept.erase(kept.begin());
    for (const auto& lv : kept) {
      for (std::size_t r = 0; r < n; ++r) rec[r].x.push_back(t.rows[r][c] == lv ? 1.0 : 0.0);
      names.push_back(t.header[c] + "=" + lv);
    }
  }
  return build(std::move(rec), std::move(names));
}

Dataset load_csv(const std::string& path, const std::string& outcome_col, const std::string& treatment_col,
                 const std::vector<std::string>& drop_cols) {
  return table_to_dataset(read_csv(path), outcome_col, treatment_col, drop_cols);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::FileNotFound, "cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest is not valid JSON: ") + e.what());
  }
  const nlohmann::json* list = &j;
  if (j.is_object() && j.contains("columns")) list = &j["columns"];
  if (!list->is_array()) throw Error(ErrorCode::ParseError, "manifest must be a JSON list");
  std::vector<ManifestEntry> out;
  try {
    for (const auto& item : *list) {
      ManifestEntry e;
      e.source_column = item.at("source_column").get<std::string>();
      const std::string kind = item.at("kind").get<std::string>();
      if (kind == "numeric") e.kind = ManifestEntry::Kind::numeric;
      else if (kind == "categorical") e.kind = ManifestEntry::Kind::categorical;
      else throw Error(ErrorCode::ParseError, "unknown manifest kind '" + kind + "'");
      if (item.contains("levels")) e.levels = item["levels"].get<std::vector<std::string>>();
      const std::string role = item.value("role", std::string("covariate"));
      if (role == "covariate") e.role = ManifestEntry::Role::covariate;
      else if (role == "outcome") e.role = ManifestEntry::Role::outcome;
      else if (role == "treatment") e.role = ManifestEntry::Role::treatment;
      else throw Error(ErrorCode::ParseError, "unknown manifest role '" + role + "'");
      e.positive = item.value("positive", std::string());
      if (e.kind == ManifestEntry::Kind::categorical && e.role == ManifestEntry::Role::covariate &&
          e.levels.size() < 2) {
        throw Error(ErrorCode::ParseError, "categorical column '" + e.source_column + "' needs at least 2 levels");
      }
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed manifest entry: ") + e.what());
  }
  return out;
}

std::size_t encoded_width(const std::vector<ManifestEntry>& manifest) {
  std::size_t w = 0;
  for (const auto& e : manifest) {
    if (e.role != ManifestEntry::Role::covariate) continue;
    w += e.kind == ManifestEntry::Kind::numeric ? 1 : e.levels.size() - 1;
  }
  return w;
}

Dataset apply_manifest(const CsvTable& t, const std::vector<ManifestEntry>& manifest) {
  const ManifestEntry* outcome = nullptr;
  const ManifestEntry* treatment = nullptr;
  for (const auto& e : manifest) {
    column_index(t, e.source_column, ErrorCode::SchemaMismatch);
    if (e.role == ManifestEntry::Role::outcome) outcome = &e;
    if (e.role == ManifestEntry::Role::treatment) treatment = &e;
  }
  if (!outcome || !treatment) throw Error(ErrorCode::SchemaMismatch, "manifest needs an outcome and a treatment");
  const std::size_t n = t.rows.size();
  const std::size_t yc = column_index(t, outcome->source_column, ErrorCode::SchemaMismatch);
  const std::size_t wc = column_index(t, treatment->source_column, ErrorCode::SchemaMismatch);
  std::vector<RawRecord> rec(n);
  for (std::size_t r = 0; r < n; ++r) {
    rec[r].y = parse_binary_text(t, r, yc, outcome->positive);
    rec[r].w = treatment->positive.empty() ? parse_treatment(t, r, wc) : parse_binary_text(t, r, wc, treatment->positive);
  }
  std::vector<std::string> names;
  for (const auto& e : manifest) {
    if (e.role != ManifestEntry::Role::covariate) continue;
    const std::size_t c = column_index(t, e.source_column, ErrorCode::SchemaMismatch);
    if (e.kind == ManifestEntry::Kind::numeric) {
      for (std::size_t r = 0; r < n; ++r) rec[r].x.push_back(parse_cell(t, r, c));
      names.push_back(e.source_column);
      continue;
    }
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& s = t.rows[r][c];
      if (std::find(e.levels.begin(), e.levels.end(), s) == e.levels.end()) {
        throw Error(ErrorCode::SchemaMismatch, "level '" + s + "' of '" + e.source_column + "' not in manifest", r, c);
      }
    }
    for (std::size_t k = 1; k < e.levels.size(); ++k) {
      for (std::size_t r = 0; r < n; ++r) rec[r].x.push_back(t.rows[r][c] == e.levels[k] ? 1.0 : 0.0);
      names.push_back(e.source_column + "=" + e.levels[k]);
    }
  }
  return build(std::move(rec), std::move(names));
}

Dataset rhc_prepare(const std::string& csv_path, const std::string& manifest_path) {
  const auto manifest = load_manifest(manifest_path);
  return apply_manifest(read_csv(csv_path), manifest);
}

}  // namespace atekit::dataio
