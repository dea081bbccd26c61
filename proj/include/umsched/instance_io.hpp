#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "umsched/core_model.hpp"

namespace umsched {

/// Instance JSON: {"id"?, "m", "n", "weights": [n], "p": [[n] x m]} where a
/// null entry of p is an infinite processing time. Rows of p are machines.
nlohmann::json instance_to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& doc);

Instance read_instance(const std::string& path);
void write_instance(const Instance& instance, const std::string& path);

nlohmann::json schedule_to_json(const Schedule& schedule);
nlohmann::json assignment_to_json(const Assignment& assignment);

}  // namespace umsched
