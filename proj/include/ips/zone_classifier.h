#ifndef IPS_ZONE_CLASSIFIER_H_
#define IPS_ZONE_CLASSIFIER_H_

#include <span>
#include <vector>

#include "ips/radio_model.h"

namespace ips {

struct ZoneGrid {
  int rows = 3;  // along y
  int cols = 2;  // along x

  void Validate() const;
};

struct KnnConfig {
  int k_neighbors = 3;
};

struct LabeledFingerprint {
  int id = 0;  // distance ties resolve toward the lower id
  Fingerprint fingerprint;
  int zone = 0;
};

// Labels each RP with the zone cell that contains it. A point on a cell
// boundary belongs to the lower-index cell. Occupied cells are renumbered
// densely in row-major cell order, so an empty cell never leaves a gap.
std::vector<ReferencePoint> AssignZones(std::span<const ReferencePoint> rps,
                                        const RoomSpec& room,
                                        const ZoneGrid& zones);

// Majority zone among the k nearest entries. Vote ties go to the tied zone
// whose closest member ranks first, i.e. the nearest neighbor's zone when it
// is among the tied ones.
int KnnClassify(const Fingerprint& query,
                std::span<const LabeledFingerprint> db,
                const KnnConfig& config);

std::vector<LabeledFingerprint> ToLabeledDb(std::span<const ReferencePoint> rps);

}  // namespace ips

#endif  // IPS_ZONE_CLASSIFIER_H_
