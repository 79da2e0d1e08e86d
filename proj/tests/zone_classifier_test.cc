#include "ips/zone_classifier.h"

#include <algorithm>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "ips/error.h"
#include "test_oracles.h"

namespace ips {
namespace {

TEST(AssignZones, SingleZone) {
  const RoomSpec room;
  for (const auto& rp : AssignZones(BuildRpGrid(room), room, {1, 1})) EXPECT_EQ(rp.zone, 0);
}

TEST(AssignZones, DefaultLayoutGivesSixZonesOfThree) {
  const RoomSpec room;  // 3 RP rows x 6 RP cols
  const auto labeled = AssignZones(BuildRpGrid(room), room, ZoneGrid{});  // 3 x 2
  std::map<int, std::vector<int>> members;
  for (const auto& rp : labeled) members[*rp.zone].push_back(rp.id);
  ASSERT_EQ(members.size(), 6u);
  // Zone cells are 3.5 m wide and 4/3 m tall; each holds half an RP row.
  EXPECT_EQ(members[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(members[1], (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(members[2], (std::vector<int>{6, 7, 8}));
  EXPECT_EQ(members[3], (std::vector<int>{9, 10, 11}));
  EXPECT_EQ(members[4], (std::vector<int>{12, 13, 14}));
  EXPECT_EQ(members[5], (std::vector<int>{15, 16, 17}));
}

TEST(AssignZones, BoundaryGoesToLowerCell) {
  const RoomSpec room{4.0, 4.0, 1, 1, 0.0};
  std::vector<ReferencePoint> rps(3);
  rps[0].position = {2.0, 1.0};  // on the x boundary
  rps[1] = {1, {3.0, 2.0}, {}, {}};  // on the y boundary
  rps[2] = {2, {3.0, 3.0}, {}, {}};
  const auto labeled = AssignZones(rps, room, {2, 2});
  EXPECT_EQ(labeled[0].zone, 0);
  EXPECT_EQ(labeled[1].zone, 1);
  EXPECT_EQ(labeled[2].zone, 2);  // cells 0, 1 and 3 occupied; renumbered densely
}

TEST(AssignZones, RpOutsideRoomIsError) {
  std::vector<ReferencePoint> rps(1);
  rps[0].position = {8.0, 1.0};
  EXPECT_THROW(AssignZones(rps, RoomSpec{}, ZoneGrid{}), Error);
}

std::vector<LabeledFingerprint> RandomDb(std::mt19937_64& rng, int n, int zones) {
  std::uniform_real_distribution<double> dbm(-90.0, -40.0);
  std::uniform_int_distribution<int> zone(0, zones - 1);
  std::vector<LabeledFingerprint> db;
  for (int i = 0; i < n; ++i) {
    db.push_back({i, {{dbm(rng), dbm(rng), dbm(rng)}}, zone(rng)});
  }
  return db;
}

TEST(KnnClassify, ExactMatchWithKOne) {
  std::mt19937_64 rng(1);
  const auto db = RandomDb(rng, 10, 4);
  for (const auto& e : db) EXPECT_EQ(KnnClassify(e.fingerprint, db, {1}), e.zone);
}

TEST(KnnClassify, GlobalMajority) {
  std::vector<LabeledFingerprint> db{
      {0, {{-50}}, 2}, {1, {{-60}}, 2}, {2, {{-70}}, 1}, {3, {{-80}}, 2}, {4, {{-41}}, 0}};
  EXPECT_EQ(KnnClassify({{-40}}, db, {5}), 2);
}

TEST(KnnClassify, VoteTieGoesToNearestNeighbor) {
  std::vector<LabeledFingerprint> db{
      {0, {{-50}}, 7}, {1, {{-52}}, 3}, {2, {{-53}}, 3}, {3, {{-49}}, 7}};
  // k = 4: two votes each; nearest to -48 is id 3 (zone 7).
  EXPECT_EQ(KnnClassify({{-48}}, db, {4}), 7);
  // Nearest to -54 is id 2 (zone 3).
  EXPECT_EQ(KnnClassify({{-54}}, db, {4}), 3);
}

TEST(KnnClassify, DistanceTieBrokenByLowerId) {
  std::vector<LabeledFingerprint> db{{5, {{-50}}, 1}, {2, {{-60}}, 0}};
  EXPECT_EQ(KnnClassify({{-55}}, db, {1}), 0);
}

TEST(KnnClassify, MatchesSortOracle) {
  std::mt19937_64 rng(77);
  const auto db = RandomDb(rng, 10, 3);
  std::vector<std::vector<double>> fps;
  std::vector<int> ids, zones;
  for (const auto& e : db) {
    fps.push_back(e.fingerprint.rssi);
    ids.push_back(e.id);
    zones.push_back(e.zone);
  }
  std::uniform_real_distribution<double> dbm(-95.0, -35.0);
  for (int q = 0; q < 200; ++q) {
    const Fingerprint query{{dbm(rng), dbm(rng), dbm(rng)}};
    EXPECT_EQ(KnnClassify(query, db, {3}), oracle::KnnBySort(query.rssi, fps, ids, zones, 3));
  }
}

TEST(KnnClassify, PermutationInvariant) {
  std::mt19937_64 rng(8);
  auto db = RandomDb(rng, 30, 5);
  // Duplicate fingerprints force distance ties.
  db[7].fingerprint = db[3].fingerprint;
  db[7].zone = (db[3].zone + 1) % 5;
  std::uniform_real_distribution<double> dbm(-95.0, -35.0);
  std::vector<Fingerprint> queries{db[3].fingerprint};
  for (int q = 0; q < 50; ++q) queries.push_back({{dbm(rng), dbm(rng), dbm(rng)}});
  std::vector<int> expected;
  for (const auto& q : queries) expected.push_back(KnnClassify(q, db, {4}));
  for (int shuffle = 0; shuffle < 10; ++shuffle) {
    std::shuffle(db.begin(), db.end(), rng);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      EXPECT_EQ(KnnClassify(queries[q], db, {4}), expected[q]);
    }
  }
}

TEST(KnnClassify, NoiselessRadioMapRecoversZones) {
  const RoomSpec room;
  const auto rps = BuildRpGrid(room);
  const auto map = SynthesizeRadioMap({{{1.5, 1.5}, {4.0, 2.5}, {7.0, 1.5}}}, rps,
                                      PathLossParams{}, 0.0, 0);
  const auto db = ToLabeledDb(AssignZones(map, room, ZoneGrid{}));
  for (const auto& e : db) EXPECT_EQ(KnnClassify(e.fingerprint, db, {1}), e.zone);
}

TEST(KnnClassify, Errors) {
  std::vector<LabeledFingerprint> db{{0, {{-50}}, 0}};
  EXPECT_THROW(KnnClassify({{-50}}, {}, {1}), Error);
  EXPECT_THROW(KnnClassify({{-50}}, db, {2}), Error);
  EXPECT_THROW(KnnClassify({{-50}}, db, {0}), Error);
  EXPECT_THROW(KnnClassify({{-50, -40}}, db, {1}), Error);
}

TEST(ToLabeledDb, RequiresZones) {
  std::vector<ReferencePoint> rps(1);
  EXPECT_THROW(ToLabeledDb(rps), Error);
}

}  // namespace
}  // namespace ips
