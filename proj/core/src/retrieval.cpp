#include "lumen/retrieval.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lumen/errors.hpp"
#include "lumen/parallel.hpp"

namespace lumen {

namespace {

using json = nlohmann::json;

std::unordered_set<std::string> to_set(std::span<const std::string> ids) {
  return {ids.begin(), ids.end()};
}

}  // namespace

const char* to_string(Condition c) {
  switch (c) {
    case Condition::Day: return "day";
    case Condition::Sunset: return "sunset";
    case Condition::Night: return "night";
  }
  return "?";
}

Condition condition_from_string(std::string_view s) {
  if (s == "day") return Condition::Day;
  if (s == "sunset") return Condition::Sunset;
  if (s == "night") return Condition::Night;
  throw InvalidInput("unknown condition '" + std::string(s) +
                     "' (expected day, sunset or night)");
}

void RetrievalProtocol::validate() const {
  std::unordered_set<std::string> db;
  for (const auto& id : database) {
    if (!db.insert(id).second)
      throw ProtocolError("duplicate database id: " + id);
  }
  for (const auto& q : queries) {
    std::unordered_set<std::string> pos;
    for (const auto& id : q.positives) {
      if (!db.contains(id))
        throw ProtocolError("query " + q.id + ": positive id not in database: " + id);
      if (!pos.insert(id).second)
        throw ProtocolError("query " + q.id + ": duplicate positive id: " + id);
      if (id == q.id)
        throw ProtocolError("query " + q.id + " lists itself as positive");
    }
    std::unordered_set<std::string> junk;
    for (const auto& id : q.junk) {
      if (!db.contains(id))
        throw ProtocolError("query " + q.id + ": junk id not in database: " + id);
      if (!junk.insert(id).second)
        throw ProtocolError("query " + q.id + ": duplicate junk id: " + id);
      if (id == q.id)
        throw ProtocolError("query " + q.id + " lists itself as junk");
      if (pos.contains(id))
        throw ProtocolError("query " + q.id + ": id both positive and junk: " + id);
    }
  }
}

RankedList rank(const Descriptor& query, const DescriptorSet& db) {
  if (query.dim() != db.dim())
    throw InvalidInput("query dimension " + std::to_string(query.dim()) +
                       " does not match database dimension " + std::to_string(db.dim()));
  const std::size_t n = db.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Descriptor& d = db.at(i);
    double dot = 0.0;
    for (int k = 0; k < db.dim(); ++k)
      dot += static_cast<double>(query.values[static_cast<std::size_t>(k)]) *
             d.values[static_cast<std::size_t>(k)];
    sims[i] = dot;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return db.at(a).image_id < db.at(b).image_id;
  });

  RankedList out;
  out.query_id = query.image_id;
  out.ids.reserve(n);
  out.scores.reserve(n);
  for (std::size_t i : order) {
    out.ids.push_back(db.at(i).image_id);
    out.scores.push_back(sims[i]);
  }
  return out;
}

std::optional<double> average_precision(const RankedList& ranked,
                                        std::span<const std::string> positives,
                                        std::span<const std::string> junk) {
  const auto pos = to_set(positives);
  const auto jnk = to_set(junk);
  if (pos.empty()) return std::nullopt;

  std::size_t kept = 0;
  std::size_t hits = 0;
  double sum = 0.0;
  for (const auto& id : ranked.ids) {
    if (id == ranked.query_id || jnk.contains(id)) continue;
    ++kept;
    if (pos.contains(id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(kept);
    }
  }
  return sum / static_cast<double>(pos.size());
}

EvaluationReport mean_ap(const RetrievalProtocol& protocol, const DescriptorSet& db,
                         const DescriptorSet& queries, int threads) {
  protocol.validate();
  DescriptorSet ranked_db(db.dim());
  for (const auto& id : protocol.database) {
    const Descriptor* d = db.find(id);
    if (!d) throw ProtocolError("database id has no descriptor: " + id);
    ranked_db.add(*d);
  }
  for (const auto& q : protocol.queries) {
    if (!queries.find(q.id)) throw ProtocolError("query id has no descriptor: " + q.id);
  }

  EvaluationReport report;
  report.per_query.resize(protocol.queries.size());
  parallel_for(protocol.queries.size(), threads, [&](std::size_t i) {
    const QueryRecord& q = protocol.queries[i];
    const RankedList ranked = rank(*queries.find(q.id), ranked_db);
    const auto ap = average_precision(ranked, q.positives, q.junk);
    QueryResult& r = report.per_query[i];
    r.id = q.id;
    r.skipped = !ap.has_value();
    r.ap = ap.value_or(0.0);
  });

  // Aggregation stays in protocol order for any worker count.
  double sum = 0.0;
  for (const QueryResult& r : report.per_query) {
    if (r.skipped) {
      report.skipped.push_back(r.id);
    } else {
      sum += r.ap;
      ++report.evaluated;
    }
  }
  report.map = report.evaluated > 0 ? sum / static_cast<double>(report.evaluated) : 0.0;
  return report;
}

RetrievalProtocol build_tokyo_protocol(std::span<const TokyoImageMeta> meta) {
  std::map<std::pair<int, int>, std::vector<const TokyoImageMeta*>> by_view;
  std::map<int, std::vector<const TokyoImageMeta*>> by_location;
  std::unordered_set<std::string> seen_ids;
  std::set<std::tuple<int, int, Condition>> seen_keys;

  for (const TokyoImageMeta& m : meta) {
    if (m.location < 1)
      throw InvalidInput("image " + m.image_id + ": location must be >= 1");
    if (m.direction < 0 || m.direction > 2)
      throw InvalidInput("image " + m.image_id + ": direction must be 0, 1 or 2");
    if (!seen_ids.insert(m.image_id).second)
      throw InvalidInput("duplicate image id: " + m.image_id);
    if (!seen_keys.insert({m.location, m.direction, m.condition}).second)
      throw InvalidInput("duplicate (location, direction, condition) for image " +
                         m.image_id);
    by_view[{m.location, m.direction}].push_back(&m);
    by_location[m.location].push_back(&m);
  }

  RetrievalProtocol protocol;
  protocol.database.reserve(meta.size());
  for (const TokyoImageMeta& m : meta) protocol.database.push_back(m.image_id);

  protocol.queries.reserve(meta.size());
  for (const TokyoImageMeta& m : meta) {
    QueryRecord q;
    q.id = m.image_id;
    for (const TokyoImageMeta* other : by_view[{m.location, m.direction}]) {
      if (other->condition != m.condition) q.positives.push_back(other->image_id);
    }
    for (const TokyoImageMeta* other : by_location[m.location]) {
      if (other->direction != m.direction) q.junk.push_back(other->image_id);
    }
    protocol.queries.push_back(std::move(q));
  }
  return protocol;
}

std::vector<ConditionPairResult> condition_breakdown(
    std::span<const TokyoImageMeta> meta, const DescriptorSet& db,
    const DescriptorSet& queries, int threads) {
  // Validates metadata and reuses the same grouping rules.
  RetrievalProtocol base = build_tokyo_protocol(meta);
  (void)base;

  std::map<std::pair<int, int>, std::vector<const TokyoImageMeta*>> by_view;
  std::map<int, std::vector<const TokyoImageMeta*>> by_location;
  for (const TokyoImageMeta& m : meta) {
    by_view[{m.location, m.direction}].push_back(&m);
    by_location[m.location].push_back(&m);
  }

  static constexpr std::pair<Condition, Condition> kPairs[] = {
      {Condition::Day, Condition::Sunset},   {Condition::Sunset, Condition::Day},
      {Condition::Sunset, Condition::Night}, {Condition::Night, Condition::Sunset},
      {Condition::Day, Condition::Night},    {Condition::Night, Condition::Day}};

  std::vector<ConditionPairResult> results;
  results.reserve(6);
  for (const auto& [from, to] : kPairs) {
    RetrievalProtocol protocol;
    protocol.database.reserve(meta.size());
    for (const TokyoImageMeta& m : meta) protocol.database.push_back(m.image_id);
    for (const TokyoImageMeta& m : meta) {
      if (m.condition != from) continue;
      QueryRecord q;
      q.id = m.image_id;
      for (const TokyoImageMeta* other : by_view[{m.location, m.direction}]) {
        if (other == &m) continue;
        if (other->condition == to)
          q.positives.push_back(other->image_id);
        else
          q.junk.push_back(other->image_id);  // third condition moves to junk
      }
      for (const TokyoImageMeta* other : by_location[m.location]) {
        if (other->direction != m.direction) q.junk.push_back(other->image_id);
      }
      protocol.queries.push_back(std::move(q));
    }
    ConditionPairResult r;
    r.query_condition = from;
    r.database_condition = to;
    r.report = mean_ap(protocol, db, queries, threads);
    results.push_back(std::move(r));
  }
  return results;
}

RetrievalProtocol load_protocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProtocolError(path.string() + ": cannot open for reading");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ProtocolError(path.string() + ": " + e.what());
  }

  RetrievalProtocol protocol;
  try {
    if (!j.is_object() || !j.contains("database") || !j.contains("queries"))
      throw ProtocolError(path.string() + ": expected {database, queries}");
    protocol.database = j.at("database").get<std::vector<std::string>>();
    for (const auto& jq : j.at("queries")) {
      QueryRecord q;
      q.id = jq.at("id").get<std::string>();
      if (jq.contains("positives"))
        q.positives = jq.at("positives").get<std::vector<std::string>>();
      if (jq.contains("junk")) q.junk = jq.at("junk").get<std::vector<std::string>>();
      protocol.queries.push_back(std::move(q));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(path.string() + ": " + e.what());
  }
  protocol.validate();
  return protocol;
}

void save_protocol(const RetrievalProtocol& protocol,
                   const std::filesystem::path& path) {
  protocol.validate();
  json j;
  j["database"] = protocol.database;
  j["queries"] = json::array();
  for (const QueryRecord& q : protocol.queries) {
    json jq;
    jq["id"] = q.id;
    jq["positives"] = q.positives;
    jq["junk"] = q.junk;
    j["queries"].push_back(std::move(jq));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ProtocolError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

std::vector<TokyoImageMeta> load_tokyo_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path.string() + ": cannot open for reading");

  std::vector<TokyoImageMeta> meta;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "image_id,location,direction,condition") continue;

    std::array<std::string, 4> fields;
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= 4)
          throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                             ": expected 4 fields");
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 4)
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": expected 4 fields");
    TokyoImageMeta m;
    m.image_id = fields[0];
    try {
      m.location = std::stoi(fields[1]);
      m.direction = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": location/direction must be integers");
    }
    m.condition = condition_from_string(fields[3]);
    meta.push_back(std::move(m));
  }
  return meta;
}

}  // namespace lumen
