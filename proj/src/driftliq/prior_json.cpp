#include "driftliq/prior_json.hpp"

#include <json.hpp>

#include "driftliq/errors.hpp"

namespace driftliq {

using nlohmann::json;

namespace {

double need_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    raise(ErrorCode::ConfigError, std::string("prior JSON needs numeric field '") + key + "'");
  return j[key].get<double>();
}

std::vector<double> need_array(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array())
    raise(ErrorCode::ConfigError, std::string("prior JSON needs array field '") + key + "'");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number())
      raise(ErrorCode::ConfigError, std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Prior prior_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::ConfigError, std::string("prior JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    raise(ErrorCode::ConfigError, "prior JSON needs a string field 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "two_point")
    return Prior::two_point(need_number(j, "l"), need_number(j, "h"), need_number(j, "pi"));
  if (kind == "normal") return Prior::normal(need_number(j, "m"), need_number(j, "gamma"));
  if (kind == "discrete") return Prior::discrete(need_array(j, "points"), need_array(j, "weights"));
  if (kind == "quadrature")
    return Prior::quadrature(need_array(j, "nodes"), need_array(j, "weights"));
  raise(ErrorCode::ConfigError, "unknown prior kind '" + kind + "'");
}

std::string prior_to_json(const Prior& prior) {
  json j;
  switch (prior.kind) {
    case PriorKind::TwoPoint:
      j = {{"kind", "two_point"}, {"l", prior.l}, {"h", prior.h}, {"pi", prior.pi}};
      break;
    case PriorKind::Normal:
      j = {{"kind", "normal"}, {"m", prior.m}, {"gamma", prior.gamma}};
      break;
    case PriorKind::Discrete:
      j = {{"kind", "discrete"}, {"points", prior.points}, {"weights", prior.weights}};
      break;
    case PriorKind::Quadrature:
      j = {{"kind", "quadrature"}, {"nodes", prior.points}, {"weights", prior.weights}};
      break;
  }
  return j.dump();
}

}  // namespace driftliq
