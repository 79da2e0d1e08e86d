#include "ips/zone_classifier.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ips/error.h"

namespace ips {

void ZoneGrid::Validate() const {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorKind::kInvalidConfig, "zone grid must be at least 1x1");
  }
}

namespace {

// Cell index along one axis; a coordinate on a boundary goes to the lower cell.
int CellIndex(double coord, double extent, int cells) {
  const double pitch = extent / cells;
  const int idx = static_cast<int>(std::ceil(coord / pitch)) - 1;
  return std::clamp(idx, 0, cells - 1);
}

}  // namespace

std::vector<ReferencePoint> AssignZones(std::span<const ReferencePoint> rps,
                                        const RoomSpec& room,
                                        const ZoneGrid& zones) {
  zones.Validate();
  std::vector<int> cell(rps.size());
  std::map<int, int> dense;
  for (std::size_t i = 0; i < rps.size(); ++i) {
    const Point2& p = rps[i].position;
    if (!room.Contains(p)) {
      throw Error(ErrorKind::kDomain, "RP " + std::to_string(rps[i].id) +
                                          " lies outside the room");
    }
    cell[i] = CellIndex(p.y, room.length, zones.rows) * zones.cols +
              CellIndex(p.x, room.width, zones.cols);
    dense.emplace(cell[i], 0);
  }
  int next = 0;
  for (auto& [c, label] : dense) label = next++;

  std::vector<ReferencePoint> out(rps.begin(), rps.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].zone = dense.at(cell[i]);
  return out;
}

int KnnClassify(const Fingerprint& query,
                std::span<const LabeledFingerprint> db,
                const KnnConfig& config) {
  if (db.empty()) throw Error(ErrorKind::kInvalidConfig, "KNN database is empty");
  if (config.k_neighbors < 1 ||
      static_cast<std::size_t>(config.k_neighbors) > db.size()) {
    throw Error(ErrorKind::kInvalidConfig,
                "k_neighbors=" + std::to_string(config.k_neighbors) +
                    " outside [1, " + std::to_string(db.size()) + "]");
  }
  struct Ranked {
    double distance;
    int id;
    int zone;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(db.size());
  for (const LabeledFingerprint& e : db) {
    ranked.push_back({FingerprintDistance(query, e.fingerprint), e.id, e.zone});
  }
  const auto closer = [](const Ranked& a, const Ranked& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  };
  const auto kth = ranked.begin() + config.k_neighbors;
  std::partial_sort(ranked.begin(), kth, ranked.end(), closer);

  // zone -> (votes, rank of its closest member)
  std::map<int, std::pair<int, int>> tally;
  for (int r = 0; r < config.k_neighbors; ++r) {
    auto [it, inserted] = tally.try_emplace(ranked[r].zone, 0, r);
    ++it->second.first;
  }
  int best_zone = ranked.front().zone;
  std::pair<int, int> best{0, 0};
  for (const auto& [zone, stats] : tally) {
    if (stats.first > best.first ||
        (stats.first == best.first && stats.second < best.second)) {
      best = stats;
      best_zone = zone;
    }
  }
  return best_zone;
}

std::vector<LabeledFingerprint> ToLabeledDb(std::span<const ReferencePoint> rps) {
  std::vector<LabeledFingerprint> db;
  db.reserve(rps.size());
  for (const ReferencePoint& rp : rps) {
    if (!rp.zone) {
      throw Error(ErrorKind::kInvalidConfig,
                  "RP " + std::to_string(rp.id) + " has no zone label");
    }
    db.push_back({rp.id, rp.fingerprint, *rp.zone});
  }
  return db;
}

}  // namespace ips
