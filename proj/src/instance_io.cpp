#include "umsched/instance_io.hpp"

#include <fstream>
#include <stdexcept>

namespace umsched {

using nlohmann::json;

json instance_to_json(const Instance& instance) {
  json doc;
  if (!instance.id().empty()) doc["id"] = instance.id();
  doc["m"] = instance.machines();
  doc["n"] = instance.jobs();
  doc["weights"] = instance.weights();
  json rows = json::array();
  for (int i = 0; i < instance.machines(); ++i) {
    json row = json::array();
    for (int j = 0; j < instance.jobs(); ++j) {
      if (instance.finite(i, j)) {
        row.push_back(*instance.p(i, j));
      } else {
        row.push_back(nullptr);
      }
    }
    rows.push_back(std::move(row));
  }
  doc["p"] = std::move(rows);
  return doc;
}

Instance instance_from_json(const json& doc) {
  const int m = doc.at("m").get<int>();
  const int n = doc.at("n").get<int>();
  auto weights = doc.at("weights").get<std::vector<std::int64_t>>();
  if (static_cast<int>(weights.size()) != n) throw std::invalid_argument("weights must have n entries");
  const json& rows = doc.at("p");
  if (!rows.is_array() || static_cast<int>(rows.size()) != m) {
    throw std::invalid_argument("p must have m rows");
  }
  std::vector<ProcTime> times;
  times.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  for (const json& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw std::invalid_argument("each row of p must have n entries");
    }
    for (const json& v : row) {
      if (v.is_null()) {
        times.push_back(kInfinite);
      } else {
        times.push_back(v.get<std::int64_t>());
      }
    }
  }
  return Instance(m, std::move(weights), std::move(times), doc.value("id", std::string{}));
}

Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return instance_from_json(json::parse(in));
}

void write_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << instance_to_json(instance).dump(2) << '\n';
}

json schedule_to_json(const Schedule& schedule) {
  return json{{"machine_of", schedule.machine_of}, {"order", schedule.order}};
}

json assignment_to_json(const Assignment& assignment) {
  return json{{"machine_of", assignment.machine_of}};
}

}  // namespace umsched
