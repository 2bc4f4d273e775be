// dataset.hpp -- JSONL ingestion for input items and calibration records.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pacr/core.hpp"

namespace pacr::gw {

// One unscored dataset item: {"id": ..., "prompt": ..., "gold": optional}.
struct InputItem {
  std::string id;
  std::string prompt;
  std::optional<std::string> gold;
};

std::vector<InputItem> read_input_jsonl(const std::string& path);

// Records as produced by the scoring stage.  Parse errors carry the line
// number.  Precomputed loss without a stored expert answer is allowed (the
// fully offline path); types and ranges are checked here.
std::vector<CalibrationRecord> read_records_jsonl(const std::string& path);
void write_records_jsonl(std::span<const CalibrationRecord> records, const std::string& path);

std::string record_to_json_line(const CalibrationRecord& r);
CalibrationRecord record_from_json_line(const std::string& line, std::size_t line_no);

// Seeded shuffle split into (calibration, test).
std::pair<std::vector<CalibrationRecord>, std::vector<CalibrationRecord>> split_records(
    std::vector<CalibrationRecord> records, double cal_fraction, std::uint64_t seed);

}  // namespace pacr::gw
