#ifndef IPS_SERIALIZATION_H_
#define IPS_SERIALIZATION_H_

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/experiment.h"

namespace ips {

using Json = nlohmann::ordered_json;

// Missing fields take their defaults; unknown fields are a format error.
ExperimentConfig ConfigFromJson(const Json& j);
Json ToJson(const ExperimentConfig& config);

Json ToJson(const Placement& placement);
Placement PlacementFromJson(const Json& j);
Json ToJson(const PlacementResult& result, const PsoConfig& config);

struct RadioMap {
  RoomSpec room;
  Placement placement;
  PathLossParams path_loss;
  std::vector<ReferencePoint> rps;
};
Json ToJson(const RadioMap& map, const SeedConfig& seeds);
RadioMap RadioMapFromJson(const Json& j);

Json ToJson(std::span<const SurveyLocation> locations, const SeedConfig& seeds);
std::vector<SurveyLocation> SurveyLocationsFromJson(const Json& j);

Json ToJson(const Dataset& dataset, const SeedConfig& seeds);
Dataset DatasetFromJson(const Json& j);

Json ToJson(const PositionModel& model, const SeedConfig& seeds);
PositionModel ModelFromJson(const Json& j);

Json ReportToJson(const EvalReport& report, const EvalReport& baseline,
                  const SeedConfig& seeds);

void WriteLossCsv(std::ostream& out, const PositionModel& model);
void WriteScatterCsv(std::ostream& out, const EvalReport& report);
void WriteCdfCsv(std::ostream& out, const EvalReport& report);

Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& j);

}  // namespace ips

#endif  // IPS_SERIALIZATION_H_
