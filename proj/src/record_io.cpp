#include "record_io.hpp"

#include "error.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace qtomo {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename onto " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path out = csv;
  out.replace_filename(csv.stem().string() + ".meta.json");
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  ::gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::string format_record_csv(const MeasurementRecord& record) {
  record.validate();
  std::string out = "time_s";
  for (int i = 1; i <= record.dim; ++i) out += ",p_" + std::to_string(i);
  for (int i = 1; i <= record.dim; ++i) out += ",sigma_" + std::to_string(i);
  out += '\n';
  for (int j = 0; j < record.num_times(); ++j) {
    out += format_double(record.times[static_cast<std::size_t>(j)]);
    for (int i = 0; i < record.dim; ++i) out += ',' + format_double(record.means(i, j));
    for (int i = 0; i < record.dim; ++i) out += ',' + format_double(record.sigmas(i, j));
    out += '\n';
  }
  return out;
}

namespace {

struct Field {
  std::string_view text;
  int column;  // 1-based
};

std::vector<Field> split_line(std::string_view line) {
  std::vector<Field> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view raw = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    std::size_t lead = 0;
    while (lead < raw.size() && (raw[lead] == ' ' || raw[lead] == '\t')) ++lead;
    std::size_t end = raw.size();
    while (end > lead && (raw[end - 1] == ' ' || raw[end - 1] == '\t')) --end;
    fields.push_back({raw.substr(lead, end - lead), static_cast<int>(start + lead + 1)});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(const Field& f, int line) {
  double value = 0.0;
  const char* first = f.text.data();
  const char* last = first + f.text.size();
  if (!f.text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (f.text.empty() || res.ec != std::errc() || res.ptr != last) {
    throw ParseError("expected a number, got '" + std::string(f.text) + "'", line, f.column);
  }
  return value;
}

std::pair<int, int> offset_location(std::string_view text, std::size_t offset) {
  int line = 1;
  int column = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

const char* sigma_kind_name(SigmaKind kind) {
  return kind == SigmaKind::StandardError ? "standard_error" : "standard_deviation";
}

}  // namespace

MeasurementRecord parse_record_csv(std::string_view text, const MeasurementRecord& defaults) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string_view::npos) lines.pop_back();
  if (lines.empty()) throw ParseError("empty record file", 1, 1);

  const auto header = split_line(lines[0]);
  if (header.size() < 3 || header.size() % 2 == 0) {
    throw ParseError("header must be time_s, p_1..p_n, sigma_1..sigma_n", 1, 1);
  }
  const int n = static_cast<int>(header.size() - 1) / 2;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    std::string expected = c == 0 ? "time_s"
                           : c <= n ? "p_" + std::to_string(c)
                                    : "sigma_" + std::to_string(c - n);
    if (header[static_cast<std::size_t>(c)].text != expected) {
      throw ParseError("expected column '" + expected + "'", 1, header[static_cast<std::size_t>(c)].column);
    }
  }

  const int m = static_cast<int>(lines.size()) - 1;
  MeasurementRecord record = defaults;
  record.dim = n;
  record.times.assign(static_cast<std::size_t>(m), 0.0);
  record.means.resize(n, m);
  record.sigmas.resize(n, m);
  for (int j = 0; j < m; ++j) {
    const int line_no = j + 2;
    const auto fields = split_line(lines[static_cast<std::size_t>(j + 1)]);
    if (fields.size() != header.size()) {
      const int col = static_cast<int>(lines[static_cast<std::size_t>(j + 1)].size()) + 1;
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no, fields.size() > header.size() ? fields[header.size()].column : col);
    }
    record.times[static_cast<std::size_t>(j)] = parse_number(fields[0], line_no);
    for (int i = 0; i < n; ++i) {
      record.means(i, j) = parse_number(fields[static_cast<std::size_t>(1 + i)], line_no);
      const Field& sf = fields[static_cast<std::size_t>(1 + n + i)];
      const double s = parse_number(sf, line_no);
      if (s < 0.0) {
        throw SchemaError("sigmas", "negative value at line " + std::to_string(line_no) + ", column " +
                                        std::to_string(sf.column));
      }
      record.sigmas(i, j) = s;
    }
  }
  if (record.repeats < 1) throw SchemaError("repeats", "repeats must be >= 1");
  if (!(record.atoms_per_shot > 0.0)) throw SchemaError("atoms_per_shot", "must be positive");
  if (const int floored = apply_sigma_floor(record); floored > 0) {
    record.warnings.push_back(std::to_string(floored) + " sigma entries raised to the shot-noise floor " +
                              format_double(sigma_floor(record.repeats, record.atoms_per_shot)));
  }
  record.validate();
  return record;
}

std::string format_record_sidecar(const MeasurementRecord& record, const std::string& created_utc) {
  json doc;
  doc["dim"] = record.dim;
  doc["repeats"] = record.repeats;
  doc["atoms_per_shot"] = record.atoms_per_shot;
  doc["sigma_kind"] = sigma_kind_name(record.sigma_kind);
  doc["warnings"] = record.warnings;
  doc["metadata"] = {{"created_utc", created_utc}};
  return doc.dump(2) + "\n";
}

void save_record(const MeasurementRecord& record, const std::filesystem::path& csv) {
  const std::string table = format_record_csv(record);
  write_file_atomic(csv, table);
  write_file_atomic(sidecar_path(csv), format_record_sidecar(record, utc_timestamp()));
}

MeasurementRecord load_record(const std::filesystem::path& csv) {
  MeasurementRecord defaults;
  std::optional<int> declared_dim;
  const auto meta = sidecar_path(csv);
  if (std::filesystem::exists(meta)) {
    const std::string text = read_file(meta);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto [line, column] = offset_location(text, e.byte > 0 ? e.byte - 1 : 0);
      throw ParseError(meta.filename().string() + ": malformed JSON", line, column);
    }
    try {
      if (doc.contains("dim")) declared_dim = doc.at("dim").get<int>();
      if (doc.contains("repeats")) defaults.repeats = doc.at("repeats").get<int>();
      if (doc.contains("atoms_per_shot")) defaults.atoms_per_shot = doc.at("atoms_per_shot").get<double>();
      if (doc.contains("sigma_kind")) {
        const auto kind = doc.at("sigma_kind").get<std::string>();
        if (kind == "standard_deviation") {
          defaults.sigma_kind = SigmaKind::StandardDeviation;
        } else if (kind == "standard_error") {
          defaults.sigma_kind = SigmaKind::StandardError;
        } else {
          throw SchemaError("sigma_kind", "expected standard_deviation or standard_error, got " + kind);
        }
      }
      if (doc.contains("warnings")) defaults.warnings = doc.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw SchemaError("sidecar", e.what());
    }
  }
  MeasurementRecord record = parse_record_csv(read_file(csv), defaults);
  if (declared_dim && *declared_dim != record.dim) {
    throw SchemaError("dim", "sidecar declares " + std::to_string(*declared_dim) + " sublevels, table has " +
                                 std::to_string(record.dim));
  }
  return record;
}

}  // namespace qtomo
