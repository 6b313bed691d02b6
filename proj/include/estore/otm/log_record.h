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

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "estore/types.h"

namespace estore {

// (lease epoch of the executing OTM, per-OTM counter). Lease epochs are
// globally unique, so ids never collide across OTMs or incarnations.
struct TxnId {
  Epoch epoch = 0;
  std::uint64_t counter = 0;

  auto operator<=>(const TxnId&) const = default;
  std::string str() const;
  static TxnId parse(std::string_view text);
};

// The part of a minitransaction that touches one partition.
struct MtxFragment {
  // key -> expected committed value; nullopt expects the key to be absent.
  std::map<Key, std::optional<Value>> compares;
  std::set<Key> reads;
  std::map<Key, Value> writes;

  // Every key the fragment locks, ascending.
  std::vector<Key> lock_keys() const;
  bool operator==(const MtxFragment&) const = default;
};

void to_json(json& j, const MtxFragment& f);
void from_json(const json& j, MtxFragment& f);

// What a participant remembers about one minitransaction.
struct MtxRecord {
  bool yes = false;
  std::optional<Decision> decision;
  MtxFragment fragment;  // kept while the vote is YES and undecided
  std::vector<PartitionId> participants;

  bool in_doubt() const { return yes && !decision; }
  bool operator==(const MtxRecord&) const = default;
};

struct CheckpointImage {
  std::map<Key, Value> store;
  std::map<std::string, MtxRecord> mtx;
  bool operator==(const CheckpointImage&) const = default;
};

enum class LogKind : std::uint8_t {
  kBegin = 1,
  kUpdate = 2,
  kCommit = 3,
  kAbort = 4,
  kCheckpoint = 5,
  kMtxVote = 6,
  kMtxDecision = 7,
  kHandoff = 8,
};

std::string_view log_kind_name(LogKind kind);

struct LogRecord {
  LogKind kind = LogKind::kBegin;
  Epoch epoch = 0;  // ownership epoch of the writer

  TxnId txn;           // BEGIN, UPDATE, COMMIT, ABORT
  Key key;             // UPDATE
  Value value;         // UPDATE
  std::string mtx_id;  // MTX_VOTE, MTX_DECISION
  bool vote_yes = false;
  MtxFragment fragment;                  // MTX_VOTE (YES)
  std::vector<PartitionId> participants;  // MTX_VOTE
  Decision decision = Decision::kAbort;  // MTX_DECISION
  CheckpointImage image;                 // CHECKPOINT

  bool operator==(const LogRecord&) const = default;
};

// Wire format: u32 body length, then the body with fields in a fixed order
// per kind. All integers little-endian. A record whose length prefix does not
// match the bytes present is torn.
std::string encode_record(const LogRecord& record);
std::optional<LogRecord> decode_record(std::string_view bytes);

// Compact description for the trace.
json summarize(const LogRecord& record);

}  // namespace estore
