#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lumen/descriptor.hpp"

namespace lumen {

struct QueryRecord {
  std::string id;
  std::vector<std::string> positives;
  std::vector<std::string> junk;
};

// Per-query positive/junk partition over an ordered database. Everything not
// listed is negative; the query itself is excluded from its own ranking.
struct RetrievalProtocol {
  std::vector<std::string> database;
  std::vector<QueryRecord> queries;

  // Throws ProtocolError naming the first offending id or rule.
  void validate() const;
};

enum class Condition { Day, Sunset, Night };

const char* to_string(Condition c);
Condition condition_from_string(std::string_view s);

struct TokyoImageMeta {
  std::string image_id;
  int location = 0;   // >= 1
  int direction = 0;  // 0, 1 or 2
  Condition condition = Condition::Day;
};

// Database ids ordered by descending cosine similarity, ties broken by
// ascending id.
struct RankedList {
  std::string query_id;
  std::vector<std::string> ids;
  std::vector<double> scores;
};

RankedList rank(const Descriptor& query, const DescriptorSet& db);

// Junk ids and the query id are removed from the ranking first;
// AP = (1/|P|) * sum of precision@k over positive ranks k. Queries with no
// positives are not evaluable and yield nullopt.
std::optional<double> average_precision(const RankedList& ranked,
                                        std::span<const std::string> positives,
                                        std::span<const std::string> junk);

struct QueryResult {
  std::string id;
  double ap = 0.0;
  bool skipped = false;
};

struct EvaluationReport {
  std::vector<QueryResult> per_query;
  std::vector<std::string> skipped;  // queries with no evaluable positives
  std::size_t evaluated = 0;
  double map = 0.0;  // mean AP over evaluable queries, in [0,1]

  double map_percent() const { return map * 100.0; }
};

// threads <= 1 runs serially; parallel runs aggregate in query order, so the
// report is identical for any worker count.
EvaluationReport mean_ap(const RetrievalProtocol& protocol, const DescriptorSet& db,
                         const DescriptorSet& queries, int threads = 1);

// Every image queries the rest: positives share (location, direction) with a
// different condition; same location but different direction is junk.
RetrievalProtocol build_tokyo_protocol(std::span<const TokyoImageMeta> meta);

struct ConditionPairResult {
  Condition query_condition;
  Condition database_condition;
  EvaluationReport report;
};

// The six ordered condition pairs (D>S, S>D, S>N, N>S, D>N, N>D): queries
// restricted to the first condition, positives to the second; the third
// condition at the same (location, direction) moves to junk.
std::vector<ConditionPairResult> condition_breakdown(
    std::span<const TokyoImageMeta> meta, const DescriptorSet& db,
    const DescriptorSet& queries, int threads = 1);

// JSON protocol file:
//   {"database": [ids], "queries": [{"id":.., "positives":[..], "junk":[..]}]}
RetrievalProtocol load_protocol(const std::filesystem::path& path);
void save_protocol(const RetrievalProtocol& protocol,
                   const std::filesystem::path& path);

// CSV `image_id,location,direction,condition` (optional header row).
std::vector<TokyoImageMeta> load_tokyo_metadata(const std::filesystem::path& path);

}  // namespace lumen
