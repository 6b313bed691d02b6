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

#include "estore/types.h"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace estore {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kOtm: return "otm";
    case Role::kHtm: return "htm";
    case Role::kMetadata: return "meta";
    case Role::kMaster: return "master";
    case Role::kClient: return "client";
  }
  return "?";
}

std::string NodeId::str() const {
  std::string out(role_name(role));
  out += std::to_string(index);
  return out;
}

std::optional<NodeId> NodeId::parse(std::string_view text) {
  static constexpr Role kRoles[] = {Role::kOtm, Role::kHtm, Role::kMetadata,
                                    Role::kMaster, Role::kClient};
  for (Role r : kRoles) {
    auto name = role_name(r);
    if (text.size() <= name.size() || text.substr(0, name.size()) != name) {
      continue;
    }
    auto digits = text.substr(name.size());
    std::uint32_t index = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      continue;
    }
    return NodeId{r, index};
  }
  return std::nullopt;
}

void to_json(json& j, const NodeId& id) { j = id.str(); }

void from_json(const json& j, NodeId& id) {
  auto parsed = NodeId::parse(j.get<std::string>());
  if (!parsed) {
    throw std::invalid_argument("bad node id: " + j.get<std::string>());
  }
  id = *parsed;
}

void to_json(json& j, const KeyRange& r) { j = json{{"lo", r.lo}, {"hi", r.hi}}; }

void from_json(const json& j, KeyRange& r) {
  r.lo = j.at("lo").get<std::string>();
  r.hi = j.at("hi").get<std::string>();
}

Key key_name(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "k%06llu", static_cast<unsigned long long>(index));
  return buf;
}

std::string_view decision_name(Decision d) {
  return d == Decision::kCommit ? "COMMIT" : "ABORT";
}

Decision parse_decision(std::string_view text) {
  if (text == "COMMIT") return Decision::kCommit;
  if (text == "ABORT") return Decision::kAbort;
  throw std::invalid_argument("bad decision: " + std::string(text));
}

}  // namespace estore
