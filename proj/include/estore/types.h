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
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace estore {

using json = nlohmann::json;

// One tick is one simulated millisecond.
using SimTime = std::uint64_t;
using Epoch = std::uint64_t;
using Lsn = std::uint64_t;
using PartitionId = std::uint32_t;
using Key = std::string;
using Value = std::string;

enum class Role : std::uint8_t { kOtm, kHtm, kMetadata, kMaster, kClient };

std::string_view role_name(Role role);

struct NodeId {
  Role role = Role::kOtm;
  std::uint32_t index = 0;

  auto operator<=>(const NodeId&) const = default;

  // "otm3", "htm0", "meta0", "master0", "client12".
  std::string str() const;
  static std::optional<NodeId> parse(std::string_view text);
};

void to_json(json& j, const NodeId& id);
void from_json(const json& j, NodeId& id);

// Half-open interval [lo, hi) over byte-string keys. An empty 'hi' means
// unbounded above.
struct KeyRange {
  Key lo;
  Key hi;

  bool contains(const Key& key) const {
    return key >= lo && (hi.empty() || key < hi);
  }
  bool operator==(const KeyRange&) const = default;
};

void to_json(json& j, const KeyRange& r);
void from_json(const json& j, KeyRange& r);

// Fixed-width key names so that lexicographic order matches numeric order.
Key key_name(std::uint64_t index);

enum class Decision : std::uint8_t { kCommit, kAbort };
std::string_view decision_name(Decision d);
Decision parse_decision(std::string_view text);

}  // namespace estore
