// Scenario config parsing: JSON directly, or a flat TOML-style subset
// ([section] headers, dotted keys, scalar and numeric-array values) that is
// converted into the same JSON tree before mapping.
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pacr/simulation.hpp"

namespace pacr::sim {

using nlohmann::json;

namespace {

bool looks_like_json(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{';
  }
  return false;
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

json parse_scalar(const std::string& raw, std::size_t line_no) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return raw.substr(1, raw.size() - 2);
  if (raw == "true") return true;
  if (raw == "false") return false;
  try {
    if (raw.find_first_of(".eE") == std::string::npos) return std::stoll(raw);
    return std::stod(raw);
  } catch (const std::exception&) {
    throw IngestError("scenario: cannot parse value '" + raw + "'", line_no);
  }
}

json parse_value(const std::string& raw, std::size_t line_no) {
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') throw IngestError("scenario: unterminated array", line_no);
    json arr = json::array();
    std::string inner = raw.substr(1, raw.size() - 2);
    std::stringstream ss(inner);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (!part.empty()) arr.push_back(parse_scalar(part, line_no));
    }
    return arr;
  }
  return parse_scalar(raw, line_no);
}

void assign_dotted(json& root, const std::string& dotted, json value, std::size_t line_no) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (key.empty()) throw IngestError("scenario: empty key segment", line_no);
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json toml_subset_to_json(const std::string& text) {
  json root = json::object();
  std::string section;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw IngestError("scenario: malformed section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IngestError("scenario: expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    if (key.empty() || raw.empty())
      throw IngestError("scenario: expected key = value", line_no);
    const std::string dotted = section.empty() ? key : section + "." + key;
    assign_dotted(root, dotted, parse_value(raw, line_no), line_no);
  }
  return root;
}

SimScenario scenario_from_tree(const json& j) {
  SimScenario s;
  try {
    s.name = j.value("name", s.name);
    s.n_cal = j.value("n_cal", s.n_cal);
    s.n_test = j.value("n_test", s.n_test);
    s.reps = j.value("reps", s.reps);
    s.base_seed = j.value("base_seed", s.base_seed);
    if (j.contains("uncertainty")) {
      const json& u = j.at("uncertainty");
      const std::string kind = u.value("kind", "beta");
      if (kind != "beta") throw ConfigError("scenario: unknown uncertainty law '" + kind + "'");
      s.uncertainty.a = u.value("a", s.uncertainty.a);
      s.uncertainty.b = u.value("b", s.uncertainty.b);
    }
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      const std::string kind = l.value("kind", "bernoulli_sigmoid");
      if (kind == "bernoulli_sigmoid") {
        s.loss.kind = LossLaw::Kind::kBernoulliSigmoid;
        s.loss.gain = l.value("gain", s.loss.gain);
        s.loss.midpoint = l.value("midpoint", s.loss.midpoint);
      } else if (kind == "clamp_gauss") {
        s.loss.kind = LossLaw::Kind::kClampGauss;
        s.loss.offset = l.value("offset", 0.0);
        s.loss.slope = l.value("slope", 1.0);
        s.loss.noise = l.value("noise", 0.0);
      } else {
        throw ConfigError("scenario: unknown loss law '" + kind + "'");
      }
    }
    s.budget.epsilon = j.value("epsilon", s.budget.epsilon);
    s.budget.alpha = j.value("alpha", s.budget.alpha);
    s.budget.loss_lower = j.value("loss_lower", s.budget.loss_lower);
    s.budget.loss_upper = j.value("loss_upper", s.budget.loss_upper);
    s.pi = j.value("pi", s.pi);
    s.sample_size = j.value("sample_size", s.sample_size);
    if (j.contains("sampling"))
      s.sampling = sampling_mode_from_string(j.at("sampling").get<std::string>());
    if (j.contains("bound")) s.bound = bound_kind_from_string(j.at("bound").get<std::string>());
    s.holdout_slack = j.value("holdout_slack", s.holdout_slack);
    if (j.contains("tokens")) {
      const json& t = j.at("tokens");
      s.tokens.expert_tokens = t.value("expert_tokens", s.tokens.expert_tokens);
      s.tokens.ratio_mean = t.value("ratio_mean", s.tokens.ratio_mean);
      s.tokens.ratio_sd = t.value("ratio_sd", s.tokens.ratio_sd);
    }
    if (j.contains("coverage_grid"))
      s.coverage_grid = j.at("coverage_grid").get<std::vector<double>>();
    s.threads = j.value("threads", s.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: mistyped field: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace

SimScenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }
  return scenario_from_tree(j);
}

SimScenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("scenario: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (looks_like_json(text)) return scenario_from_json_text(text);
  return scenario_from_tree(toml_subset_to_json(text));
}

}  // namespace pacr::sim
