#include "pacr/gateway/dataset.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pacr/errors.hpp"
#include "pacr/rng.hpp"

namespace pacr::gw {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, std::size_t line_no, const char* what) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw IngestError(std::string(what) + ": not valid JSON: " + e.what(), line_no);
  }
}

std::vector<std::string> read_lines(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(std::string(what) + ": cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<InputItem> read_input_jsonl(const std::string& path) {
  std::vector<InputItem> items;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path, "input")) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const json j = parse_line(line, line_no, "input");
    InputItem item;
    try {
      item.id = j.at("id").get<std::string>();
      item.prompt = j.at("prompt").get<std::string>();
      if (j.contains("gold") && !j.at("gold").is_null())
        item.gold = j.at("gold").get<std::string>();
    } catch (const json::exception& e) {
      throw IngestError(std::string("input: ") + e.what(), line_no);
    }
    items.push_back(std::move(item));
  }
  return items;
}

CalibrationRecord record_from_json_line(const std::string& line, std::size_t line_no) {
  const json j = parse_line(line, line_no, "records");
  CalibrationRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.uncertainty = j.at("uncertainty").get<double>();
    r.cheap_answer = j.at("cheap_answer").get<std::string>();
    r.cheap_tokens = j.at("cheap_tokens").get<long long>();
    r.prompt = j.value("prompt", std::string{});
    if (j.contains("expert_answer") && !j.at("expert_answer").is_null())
      r.expert_answer = j.at("expert_answer").get<std::string>();
    if (j.contains("expert_tokens") && !j.at("expert_tokens").is_null())
      r.expert_tokens = j.at("expert_tokens").get<long long>();
    if (j.contains("loss") && !j.at("loss").is_null()) r.loss = j.at("loss").get<double>();
    if (j.contains("gold_answer") && !j.at("gold_answer").is_null())
      r.gold_answer = j.at("gold_answer").get<std::string>();
    r.score_kind = j.value("score_kind", std::string{});
    if (j.contains("flags")) r.flags = j.at("flags").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IngestError(std::string("records: ") + e.what(), line_no);
  }
  if (!(r.uncertainty >= 0.0 && r.uncertainty <= 1.0))
    throw IngestError("records: uncertainty must lie in [0, 1], got " +
                          std::to_string(r.uncertainty),
                      line_no);
  if (r.loss && !(*r.loss >= 0.0))
    throw IngestError("records: loss must be >= 0", line_no);
  return r;
}

std::vector<CalibrationRecord> read_records_jsonl(const std::string& path) {
  std::vector<CalibrationRecord> records;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path, "records")) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    records.push_back(record_from_json_line(line, line_no));
  }
  return records;
}

std::string record_to_json_line(const CalibrationRecord& r) {
  json j{
      {"id", r.id},
      {"uncertainty", r.uncertainty},
      {"cheap_answer", r.cheap_answer},
      {"cheap_tokens", r.cheap_tokens},
  };
  if (!r.prompt.empty()) j["prompt"] = r.prompt;
  if (r.expert_answer) j["expert_answer"] = *r.expert_answer;
  if (r.expert_tokens) j["expert_tokens"] = *r.expert_tokens;
  if (r.loss) j["loss"] = *r.loss;
  if (r.gold_answer) j["gold_answer"] = *r.gold_answer;
  if (!r.score_kind.empty()) j["score_kind"] = r.score_kind;
  if (!r.flags.empty()) j["flags"] = r.flags;
  return j.dump();
}

void write_records_jsonl(std::span<const CalibrationRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError("records: cannot write '" + path + "'");
  for (const CalibrationRecord& r : records) out << record_to_json_line(r) << '\n';
  if (!out.flush()) throw IngestError("records: write to '" + path + "' failed");
}

std::pair<std::vector<CalibrationRecord>, std::vector<CalibrationRecord>> split_records(
    std::vector<CalibrationRecord> records, double cal_fraction, std::uint64_t seed) {
  if (!(cal_fraction > 0.0 && cal_fraction < 1.0))
    throw RangeError("split_records: cal_fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  for (std::size_t i = records.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(records[i - 1], records[j]);
  }
  const auto n_cal = static_cast<std::size_t>(
      std::llround(cal_fraction * static_cast<double>(records.size())));
  std::vector<CalibrationRecord> cal(records.begin(),
                                     records.begin() + static_cast<std::ptrdiff_t>(n_cal));
  std::vector<CalibrationRecord> test(records.begin() + static_cast<std::ptrdiff_t>(n_cal),
                                      records.end());
  return {std::move(cal), std::move(test)};
}

}  // namespace pacr::gw
