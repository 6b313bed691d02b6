// Copyright 2026 The estore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <map>
#include <set>

#include <gtest/gtest.h>

#include "estore/config.h"
#include "estore/kernel/rng.h"
#include "estore/metadata/metadata_store.h"

namespace estore {
namespace {

NodeId otm(std::uint32_t i) { return NodeId{Role::kOtm, i}; }

MetadataStore make_store(std::uint32_t partitions = 2) {
  return MetadataStore(even_ranges(100, partitions), 10000);
}

TEST(LeaseTest, AcquireGrantsIncreasingEpochs) {
  MetadataStore s = make_store();
  auto a = s.acquire_lease(otm(0), 0);
  ASSERT_TRUE(a.ok);
  EXPECT_EQ(a.lease.epoch, 1u);
  EXPECT_EQ(a.lease.expires_at, 10000u);
  auto b = s.acquire_lease(otm(1), 0);
  ASSERT_TRUE(b.ok);
  EXPECT_EQ(b.lease.epoch, 2u);
  EXPECT_FALSE(s.acquire_lease(otm(0), 100).ok);
  // Once the first lease has lapsed the same OTM gets a strictly newer one.
  auto c = s.acquire_lease(otm(0), 10000);
  ASSERT_TRUE(c.ok);
  EXPECT_GT(c.lease.epoch, b.lease.epoch);
}

TEST(LeaseTest, RenewExtendsOnlyLiveMatchingLease) {
  MetadataStore s = make_store();
  const auto a = s.acquire_lease(otm(0), 0).lease;
  auto r = s.renew_lease(otm(0), a.epoch, 5000);
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.lease.expires_at, 15000u);
  EXPECT_FALSE(s.renew_lease(otm(0), a.epoch, 15000).ok);

  MetadataStore t = make_store();
  const auto b = t.acquire_lease(otm(0), 0).lease;
  EXPECT_FALSE(t.renew_lease(otm(0), b.epoch, 11000).ok);
  EXPECT_FALSE(t.renew_lease(otm(0), b.epoch + 7, 100).ok);
  EXPECT_FALSE(t.renew_lease(otm(1), b.epoch, 100).ok);
}

TEST(LeaseTest, ExpiredAtBoundaryIsIncluded) {
  MetadataStore s = make_store();
  s.acquire_lease(otm(0), 0);
  EXPECT_TRUE(s.expired_lessees(9999).empty());
  auto expired = s.expired_lessees(10000);
  ASSERT_EQ(expired.size(), 1u);
  EXPECT_EQ(expired[0].otm, otm(0));
  EXPECT_FALSE(s.live_lease(otm(0), 10000).has_value());
  EXPECT_TRUE(s.release_lease(otm(0), expired[0].epoch));
  EXPECT_TRUE(s.expired_lessees(10000).empty());
}

TEST(CasTest, VersionedAssignment) {
  MetadataStore s = make_store();
  s.acquire_lease(otm(0), 0);
  s.acquire_lease(otm(1), 0);
  auto a = s.cas_assign(0, 0, otm(0), 10);
  ASSERT_EQ(a.status, CasResult::Status::kOk);
  EXPECT_EQ(a.entry.version, 1u);
  EXPECT_EQ(a.entry.owner, otm(0));
  EXPECT_EQ(a.entry.ownership_epoch, 1u);
  // A second writer that read version 0 loses.
  auto b = s.cas_assign(0, 0, otm(1), 11);
  EXPECT_EQ(b.status, CasResult::Status::kConflict);
  EXPECT_EQ(b.entry.owner, otm(0));
  auto c = s.cas_assign(0, 1, otm(1), 12);
  ASSERT_EQ(c.status, CasResult::Status::kOk);
  EXPECT_GT(c.entry.ownership_epoch, a.entry.ownership_epoch);
}

TEST(CasTest, ExpiredOwnerIsRejected) {
  MetadataStore s = make_store();
  s.acquire_lease(otm(0), 0);
  auto r = s.cas_assign(0, 0, otm(0), 10000);
  EXPECT_EQ(r.status, CasResult::Status::kRejected);
  EXPECT_EQ(s.snapshot().entries[0].version, 0u);
  EXPECT_EQ(s.cas_assign(9, 0, otm(0), 1).status, CasResult::Status::kRejected);
}

TEST(PartitionMapTest, LocateAndOwnedBy) {
  MetadataStore s = make_store(4);
  s.acquire_lease(otm(0), 0);
  s.cas_assign(2, 0, otm(0), 1);
  const PartitionMap m = s.snapshot();
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto* e = m.locate(key_name(k));
    ASSERT_NE(e, nullptr);
    EXPECT_TRUE(e->range.contains(key_name(k)));
  }
  EXPECT_EQ(m.owned_by(otm(0)), std::vector<PartitionId>{2});
  const json j = m;
  EXPECT_EQ(j.get<PartitionMap>().entries, m.entries);
}

// Random interleavings of lease and map operations keep every epoch unique
// and monotone, and every successful CAS bumps the version by exactly one.
TEST(MetadataPropertyTest, EpochsAreMonotoneUnderRandomOps) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    MetadataStore s = make_store(3);
    SimTime now = 0;
    std::map<NodeId, Epoch> held;
    Epoch last_lease = 0;
    std::set<Epoch> ownership_epochs;
    std::map<PartitionId, Epoch> last_owner_epoch;
    for (int step = 0; step < 300; ++step) {
      now += rng.uniform(0, 3000);
      const NodeId o = otm(static_cast<std::uint32_t>(rng.uniform(0, 3)));
      switch (rng.uniform(0, 3)) {
        case 0: {
          auto r = s.acquire_lease(o, now);
          if (r.ok) {
            EXPECT_GT(r.lease.epoch, last_lease);
            last_lease = r.lease.epoch;
            held[o] = r.lease.epoch;
          }
          break;
        }
        case 1:
          if (held.count(o)) {
            auto r = s.renew_lease(o, held[o], now);
            if (r.ok) {
              EXPECT_EQ(r.lease.expires_at, now + 10000);
            }
          }
          break;
        case 2: {
          const auto p = static_cast<PartitionId>(rng.uniform(0, 2));
          const auto before = s.snapshot().entries[p];
          const std::uint64_t expected = rng.chance(0.8) ? before.version : before.version + 1;
          auto r = s.cas_assign(p, expected, o, now);
          if (r.status == CasResult::Status::kOk) {
            EXPECT_TRUE(s.live_lease(o, now).has_value());
            EXPECT_EQ(r.entry.version, before.version + 1);
            EXPECT_TRUE(ownership_epochs.insert(r.entry.ownership_epoch).second);
            EXPECT_GT(r.entry.ownership_epoch, last_owner_epoch[p]);
            last_owner_epoch[p] = r.entry.ownership_epoch;
          } else {
            EXPECT_EQ(s.snapshot().entries[p], before);
          }
          break;
        }
        default:
          for (const auto& l : s.expired_lessees(now)) {
            EXPECT_LE(l.expires_at, now);
            s.release_lease(l.otm, l.epoch);
          }
          break;
      }
      // At most one live lease per OTM.
      for (std::uint32_t i = 0; i < 4; ++i) {
        auto l = s.live_lease(otm(i), now);
        if (l) EXPECT_GT(l->expires_at, now);
      }
    }
  }
}

}  // namespace
}  // namespace estore
