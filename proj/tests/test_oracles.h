#ifndef IPS_TESTS_TEST_ORACLES_H_
#define IPS_TESTS_TEST_ORACLES_H_

// Reference computations that deliberately avoid the library's code paths.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace ips::oracle {

struct Xy {
  double x, y;
};

inline double Dist(Xy a, Xy b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}

// Direct double sum of fingerprint dissimilarities over neighbor pairs.
inline double PlacementObjective(const std::vector<Xy>& sources, const std::vector<Xy>& rps,
                                 double radius, double rssi0, double d0, double alpha) {
  std::vector<std::vector<double>> fp(rps.size());
  for (std::size_t i = 0; i < rps.size(); ++i) {
    for (const Xy& s : sources) {
      fp[i].push_back(rssi0 - 10.0 * alpha * std::log10(Dist(rps[i], s) / d0));
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rps.size(); ++i) {
    for (std::size_t j = 0; j < rps.size(); ++j) {
      if (i == j || !(Dist(rps[i], rps[j]) < radius)) continue;
      double sq = 0.0;
      for (std::size_t l = 0; l < sources.size(); ++l) {
        sq += (fp[i][l] - fp[j][l]) * (fp[i][l] - fp[j][l]);
      }
      total += std::sqrt(sq);
    }
  }
  return total;
}

// Default 7 x 4 room, 3 rows x 6 cols, 0.5 m margin.
inline std::vector<Xy> DefaultGrid() {
  std::vector<Xy> out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 6; ++c) out.push_back({0.5 + c * 1.2, 0.5 + r * 1.5});
  }
  return out;
}

// k-NN by sorting every (distance, id) pair; vote ties go to the zone whose
// best-ranked member comes first.
inline int KnnBySort(const std::vector<double>& query,
                     const std::vector<std::vector<double>>& db_fp,
                     const std::vector<int>& db_id, const std::vector<int>& db_zone, int k) {
  std::vector<std::pair<std::pair<double, int>, int>> all;
  for (std::size_t i = 0; i < db_fp.size(); ++i) {
    double sq = 0.0;
    for (std::size_t l = 0; l < query.size(); ++l) {
      sq += (query[l] - db_fp[i][l]) * (query[l] - db_fp[i][l]);
    }
    all.push_back({{std::sqrt(sq), db_id[i]}, db_zone[i]});
  }
  std::sort(all.begin(), all.end());
  int best_zone = -1, best_votes = 0;
  for (int r = 0; r < k; ++r) {
    const int zone = all[r].second;
    int votes = 0;
    for (int q = 0; q < k; ++q) votes += all[q].second == zone;
    // The first rank at which a zone appears is its best rank, so scanning in
    // rank order and requiring strictly more votes implements the tie rule.
    if (votes > best_votes) {
      best_votes = votes;
      best_zone = zone;
    }
  }
  return best_zone;
}

}  // namespace ips::oracle

#endif  // IPS_TESTS_TEST_ORACLES_H_
