#pragma once

// Measurement-record files: a CSV table `time_s,p_1..p_n,sigma_1..sigma_n`
// plus a JSON sidecar `<stem>.meta.json` carrying the acquisition settings.

#include "tomography.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace qtomo {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Writes `content` to a temporary file next to `path`, then renames it over
/// `path`. Throws Error(IoError).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

std::string format_record_csv(const MeasurementRecord& record);

/// Parses the table only; acquisition fields come from `defaults`. Sigmas
/// below the shot-noise floor are raised to it with a warning, then the record
/// is validated. Throws ParseError or SchemaError.
MeasurementRecord parse_record_csv(std::string_view text, const MeasurementRecord& defaults = {});

/// Sidecar document for `record`. `created_utc` goes under "metadata" and is
/// the only field that varies between identical saves.
std::string format_record_sidecar(const MeasurementRecord& record, const std::string& created_utc);

/// Writes the CSV and its sidecar, both atomically.
void save_record(const MeasurementRecord& record, const std::filesystem::path& csv);

/// Reads the CSV and, when present, its sidecar.
MeasurementRecord load_record(const std::filesystem::path& csv);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace qtomo
