#include "mfh/io.hpp"

#include <charconv>
#include <limits>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfh/error.hpp"
#include "mfh/serialize.hpp"

namespace mfh {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

namespace {

double parse_number(const std::string& tok, std::size_t row) {
  std::size_t b = tok.find_first_not_of(" \t\r");
  std::size_t e = tok.find_last_not_of(" \t\r");
  if (b == std::string::npos) throw MalformedCsv("empty field in row " + std::to_string(row));
  const std::string s = tok.substr(b, e - b + 1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    // from_chars rejects "inf"/"nan" spellings with a sign prefix on some libs
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw MalformedCsv("non-numeric token '" + s + "' in row " + std::to_string(row));
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ls(line);
  while (std::getline(ls, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
  return fs::path(stem.string() + suffix);
}

}  // namespace

std::vector<double> CsvTable::column(std::size_t i) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(i));
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (!have_header) {
      for (auto& c : cells) {
        const auto b = c.find_first_not_of(' ');
        t.header.push_back(b == std::string::npos ? "" : c.substr(b));
      }
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw MalformedCsv("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                         " fields, header has " + std::to_string(t.header.size()));
    std::vector<double> r;
    r.reserve(cells.size());
    for (const auto& c : cells) r.push_back(parse_number(c, row));
    t.rows.push_back(std::move(r));
  }
  if (!have_header) throw MalformedCsv("missing header row");
  return t;
}

CsvTable read_csv(const fs::path& file) { return parse_csv(read_text(file)); }

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + table.header[i];
  out += '\n';
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
    out += '\n';
  }
  return out;
}

void write_csv(const CsvTable& table, const fs::path& file) { write_text(file, to_csv(table)); }

void write_path(const SamplePath& path, const fs::path& stem) {
  CsvTable t{{"t", "value"}, {}};
  t.rows.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) t.rows.push_back({path.times[i], path.values[i]});
  write_csv(t, with_suffix(stem, ".csv"));
  json meta = meta_to_json(path.meta);
  meta["schema_version"] = kSchemaVersion;
  write_text(with_suffix(stem, ".meta.json"), meta.dump(2) + "\n");
}

SamplePath read_path(const fs::path& stem) {
  SamplePath p;
  const auto t = read_csv(with_suffix(stem, ".csv"));
  if (t.header.size() != 2 || t.header[0] != "t" || t.header[1] != "value")
    throw MalformedCsv("path csv must have header t,value");
  p.times = t.column(0);
  p.values = t.column(1);
  json meta;
  try {
    meta = json::parse(read_text(with_suffix(stem, ".meta.json")));
  } catch (const json::exception& e) {
    throw IoError(std::string("bad path sidecar: ") + e.what());
  }
  if (meta.value("schema_version", 0) != kSchemaVersion)
    throw IoError("unsupported path schema_version");
  p.meta = meta_from_json(meta);
  p.validate();
  return p;
}

void write_field(const GeneratorFieldSample& field, const fs::path& file) {
  std::string out = "t\\h";
  for (double h : field.h_values) out += "," + format_double(h);
  out += '\n';
  for (std::size_t i = 0; i < field.times.size(); ++i) {
    out += format_double(field.times[i]);
    for (std::size_t k = 0; k < field.h_values.size(); ++k) out += "," + format_double(field.at(i, k));
    out += '\n';
  }
  write_text(file, out);
  json meta = meta_to_json(field.meta);
  meta["schema_version"] = kSchemaVersion;
  write_text(fs::path(file.string() + ".meta.json"), meta.dump(2) + "\n");
}

GeneratorFieldSample read_field(const fs::path& file) {
  const std::string text = read_text(file);
  std::istringstream in(text);
  std::string line;
  GeneratorFieldSample f;
  if (!std::getline(in, line)) throw MalformedCsv("empty field file");
  auto head = split(line);
  if (head.empty() || head[0] != "t\\h") throw MalformedCsv("field csv must start with t\\h");
  for (std::size_t i = 1; i < head.size(); ++i) f.h_values.push_back(parse_number(head[i], 1));
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != head.size()) throw MalformedCsv("row " + std::to_string(row) + " has wrong width");
    f.times.push_back(parse_number(cells[0], row));
    for (std::size_t i = 1; i < cells.size(); ++i) f.values.push_back(parse_number(cells[i], row));
  }
  const fs::path side(file.string() + ".meta.json");
  if (fs::exists(side)) f.meta = meta_from_json(json::parse(read_text(side)));
  return f;
}

}  // namespace mfh
