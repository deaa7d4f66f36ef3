#include "pairforge/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "pairforge/error.hpp"

namespace pairforge {

namespace fs = std::filesystem;

std::string AgentPair::to_string() const {
  return std::to_string(instruction) + ":" + std::to_string(response);
}

AgentPair AgentPair::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("agent pair '" + std::string(text) + "' is not of the form j:k");
  }
  auto parse_int = [&](std::string_view part) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size() || value < 0) {
      throw ParseError("agent pair '" + std::string(text) + "' has a bad index");
    }
    return value;
  };
  return AgentPair{parse_int(text.substr(0, colon)), parse_int(text.substr(colon + 1))};
}

std::string OutputRecord::provenance_string() const {
  return provenance ? provenance->to_string() : std::string("base");
}

std::string trim(std::string_view text) {
  constexpr std::string_view ws = " \t\n\r\f\v";
  auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(ws);
  return std::string(text.substr(first, last - first + 1));
}

namespace {

bool is_blank(std::string_view line) { return line.find_first_not_of(" \t\r") == std::string_view::npos; }

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(pos, end - pos);
    if (!is_blank(line)) fn(line_no, line);
    pos = end + 1;
  }
}

Json parse_object_line(std::size_t line_no, std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw ParseError("line " + std::to_string(line_no) + ": invalid JSON");
  }
  if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": not an object");
  return j;
}

std::string required_string(const Json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError("line " + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  if (!it->is_string()) {
    throw ParseError("line " + std::to_string(line_no) + ": field '" + key + "' is not a string");
  }
  return it->get<std::string>();
}

const std::set<std::string>& output_keys() {
  static const std::set<std::string> keys{"seed_id", "instruction", "response", "score", "provenance"};
  return keys;
}

}  // namespace

std::vector<InstructionSample> parse_seed_dataset(std::string_view text) {
  std::vector<InstructionSample> samples;
  std::set<std::string> seen;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    Json j = parse_object_line(line_no, line);
    InstructionSample s;
    s.id = required_string(j, "id", line_no);
    s.instruction = trim(required_string(j, "instruction", line_no));
    s.response = trim(required_string(j, "response", line_no));
    if (s.instruction.empty()) throw ValidationError("sample '" + s.id + "': empty instruction");
    if (s.response.empty()) throw ValidationError("sample '" + s.id + "': empty response");
    if (!seen.insert(s.id).second) throw ValidationError("duplicate id '" + s.id + "'");
    for (auto& [key, value] : j.items()) {
      if (key != "id" && key != "instruction" && key != "response") s.extra[key] = value;
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

std::vector<InstructionSample> load_seed_dataset(const fs::path& path) {
  return parse_seed_dataset(read_file(path));
}

Json to_json(const InstructionSample& sample) {
  Json j = {{"id", sample.id}, {"instruction", sample.instruction}, {"response", sample.response}};
  for (auto& [key, value] : sample.extra.items()) j[key] = value;
  return j;
}

Json to_json(const OutputRecord& r) {
  Json j = {{"seed_id", r.seed_id},
            {"instruction", r.instruction},
            {"response", r.response},
            {"score", r.score},
            {"provenance", r.provenance_string()}};
  for (auto& [key, value] : r.extra.items()) {
    if (!output_keys().count(key)) j[key] = value;
  }
  return j;
}

OutputRecord output_record_from_json(const Json& j) {
  OutputRecord r;
  r.seed_id = j.at("seed_id").get<std::string>();
  r.instruction = j.at("instruction").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.score = j.at("score").get<double>();
  auto prov = j.at("provenance").get<std::string>();
  if (prov != "base") r.provenance = AgentPair::parse(prov);
  for (auto& [key, value] : j.items()) {
    if (!output_keys().count(key)) r.extra[key] = value;
  }
  return r;
}

Json to_json(const CandidateRecord& c) {
  Json j = {{"seed_id", c.seed_id},
            {"index", c.index},
            {"pair", c.pair.to_string()},
            {"is_base", c.is_base},
            {"instruction", c.instruction},
            {"response", c.response},
            {"ifd_small", c.ifd_small},
            {"ifd_large", c.ifd_large},
            {"pi_dual", c.pi_dual},
            {"pi_llm", c.pi_llm},
            {"pi_composite", c.pi_composite},
            {"status", c.status == CandidateStatus::ok ? "ok" : "dropped"}};
  if (!c.reason.empty()) j["reason"] = c.reason;
  if (c.referee_parse_failure) j["referee_parse_failure"] = true;
  if (c.seed_fallback) j["seed_fallback"] = true;
  return j;
}

CandidateRecord candidate_record_from_json(const Json& j) {
  CandidateRecord c;
  c.seed_id = j.at("seed_id").get<std::string>();
  c.index = j.at("index").get<int>();
  c.pair = AgentPair::parse(j.at("pair").get<std::string>());
  c.is_base = j.at("is_base").get<bool>();
  c.instruction = j.at("instruction").get<std::string>();
  c.response = j.at("response").get<std::string>();
  c.ifd_small = j.at("ifd_small").get<double>();
  c.ifd_large = j.at("ifd_large").get<double>();
  c.pi_dual = j.at("pi_dual").get<double>();
  c.pi_llm = j.at("pi_llm").get<double>();
  c.pi_composite = j.at("pi_composite").get<double>();
  auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "dropped") throw ParseError("unknown candidate status '" + status + "'");
  c.status = status == "ok" ? CandidateStatus::ok : CandidateStatus::dropped;
  c.reason = j.value("reason", std::string());
  c.referee_parse_failure = j.value("referee_parse_failure", false);
  c.seed_fallback = j.value("seed_fallback", false);
  return c;
}

std::string to_line(const OutputRecord& record) { return to_json(record).dump(); }
std::string to_line(const CandidateRecord& record) { return to_json(record).dump(); }

void validate_output_records(const std::vector<OutputRecord>& records,
                             const std::vector<CandidateRecord>* candidates) {
  if (records.empty()) throw ValidationError("no output records");
  for (const auto& r : records) {
    if (!(r.score >= 0.0 && r.score <= 1.0)) {
      throw ValidationError("record '" + r.seed_id + "': score outside [0,1]");
    }
    if (!r.provenance && r.score != 0.0) {
      throw ValidationError("record '" + r.seed_id + "': base record with non-zero score");
    }
    if (r.provenance && r.score <= 0.0) {
      throw ValidationError("record '" + r.seed_id + "': candidate record with zero score");
    }
  }
  if (!candidates) return;

  struct Best {
    double score = 0.0;
    const CandidateRecord* winner = nullptr;
  };
  std::map<std::string, Best> best;
  for (const auto& c : *candidates) {
    auto& b = best[c.seed_id];
    if (c.is_base || c.status != CandidateStatus::ok) continue;
    if (c.pi_composite > b.score) {  // strict: lowest index wins ties
      b.score = c.pi_composite;
      b.winner = &c;
    }
  }
  for (const auto& r : records) {
    auto it = best.find(r.seed_id);
    double expected = it == best.end() ? 0.0 : it->second.score;
    if (r.score != expected) {
      throw ValidationError("record '" + r.seed_id + "': score does not equal the maximum candidate composite");
    }
    if (r.provenance) {
      const auto* w = it->second.winner;
      if (!w || w->pair != *r.provenance) {
        throw ValidationError("record '" + r.seed_id + "': provenance does not name the winning candidate");
      }
    }
  }
}

void write_output_dataset(const std::vector<OutputRecord>& records, const fs::path& path,
                          const std::vector<CandidateRecord>* candidates) {
  validate_output_records(records, candidates);
  std::string content;
  for (const auto& r : records) {
    content += to_line(r);
    content += '\n';
  }
  write_file_atomic(path, content);
}

std::vector<OutputRecord> load_output_dataset(const fs::path& path) {
  std::vector<OutputRecord> records;
  for_each_line(read_file(path), [&](std::size_t line_no, std::string_view line) {
    try {
      records.push_back(output_record_from_json(parse_object_line(line_no, line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return records;
}

std::vector<CandidateRecord> load_candidate_log(const fs::path& path) {
  std::vector<CandidateRecord> records;
  for_each_line(read_file(path), [&](std::size_t line_no, std::string_view line) {
    try {
      records.push_back(candidate_record_from_json(parse_object_line(line_no, line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return records;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "': " + std::generic_category().message(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "': " + std::generic_category().message(errno));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

}  // namespace pairforge
