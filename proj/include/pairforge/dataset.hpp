#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pairforge {

using Json = nlohmann::ordered_json;

/// Index of an (instruction agent j, response agent k) pair in the roster.
struct AgentPair {
  int instruction = 0;
  int response = 0;

  auto operator<=>(const AgentPair&) const = default;

  /// "j:k"
  std::string to_string() const;
  static AgentPair parse(std::string_view text);
};

/// One instruction-response pair of a seed or output dataset.
struct InstructionSample {
  std::string id;
  std::string instruction;
  std::string response;
  /// Fields of the input line other than id/instruction/response, in input
  /// order. Echoed to the output record for this seed.
  Json extra = Json::object();

  bool operator==(const InstructionSample&) const = default;
};

enum class CandidateStatus { ok, dropped };

/// A generated candidate and every score computed for it. Base candidates
/// are logged with is_base set; they never take part in batch
/// normalization or evolution.
struct CandidateRecord {
  std::string seed_id;
  int index = 0;  // generation order within the seed; base candidates come first
  AgentPair pair;
  bool is_base = false;
  std::string instruction;
  std::string response;
  double ifd_small = 0.0;
  double ifd_large = 0.0;
  double pi_dual = 0.0;
  double pi_llm = 0.0;
  double pi_composite = 0.0;
  CandidateStatus status = CandidateStatus::ok;
  std::string reason;            // why a candidate was dropped
  bool referee_parse_failure = false;
  bool seed_fallback = false;    // base text replaced by the seed sample itself

  bool operator==(const CandidateRecord&) const = default;
};

/// One element of the tailored output dataset.
struct OutputRecord {
  std::string seed_id;
  std::string instruction;
  std::string response;
  double score = 0.0;
  /// The winning pair, or nullopt when the base sample was kept.
  std::optional<AgentPair> provenance;
  Json extra = Json::object();

  std::string provenance_string() const;
  bool operator==(const OutputRecord&) const = default;
};

/// Trim leading and trailing whitespace only.
std::string trim(std::string_view text);

/// Read a seed dataset: one JSON object per line with string fields `id`,
/// `instruction` and `response`. Blank lines are skipped. Throws ParseError
/// with the 1-based line number, or ValidationError naming the offending id.
std::vector<InstructionSample> load_seed_dataset(const std::filesystem::path& path);
std::vector<InstructionSample> parse_seed_dataset(std::string_view text);

/// Check every record, then write them atomically (temp file + rename).
/// With `candidates`, each record's score must also equal the maximum
/// composite logged for its seed, and a pair provenance must name a
/// candidate that attains it.
void write_output_dataset(const std::vector<OutputRecord>& records, const std::filesystem::path& path,
                          const std::vector<CandidateRecord>* candidates = nullptr);
std::vector<OutputRecord> load_output_dataset(const std::filesystem::path& path);

/// Validation run by write_output_dataset; exposed for the pipeline.
void validate_output_records(const std::vector<OutputRecord>& records,
                             const std::vector<CandidateRecord>* candidates);

Json to_json(const InstructionSample& sample);
Json to_json(const OutputRecord& record);
Json to_json(const CandidateRecord& record);
OutputRecord output_record_from_json(const Json& j);
CandidateRecord candidate_record_from_json(const Json& j);

/// Serialized line without the trailing newline.
std::string to_line(const OutputRecord& record);
std::string to_line(const CandidateRecord& record);

std::vector<CandidateRecord> load_candidate_log(const std::filesystem::path& path);

/// Write `content` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace pairforge
