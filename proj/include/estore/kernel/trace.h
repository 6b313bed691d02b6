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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "estore/types.h"

namespace estore {

enum class EventKind : std::uint8_t {
  kSend,
  kDeliver,
  kDrop,
  kCrash,
  kRestart,
  kVolumeAppend,
  kLocal,
};

std::string_view event_kind_name(EventKind kind);
EventKind parse_event_kind(std::string_view text);

struct TraceEvent {
  std::uint64_t seq = 0;
  SimTime time = 0;
  NodeId node;
  EventKind kind = EventKind::kLocal;
  json payload;

  // LOCAL events carry their record type in payload["ev"]; empty otherwise.
  std::string_view ev() const;

  // seq=<n> time=<t> node=<id> kind=<KIND> payload=<json>
  std::string line() const;
  static TraceEvent parse_line(std::string_view line);
};

class Trace {
 public:
  const std::vector<TraceEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  const TraceEvent& operator[](std::size_t i) const { return events_[i]; }

  const TraceEvent& append(TraceEvent event);

  void write(std::ostream& out) const;
  std::string serialize() const;
  static Trace read(std::istream& in);

  // FNV-1a over the serialized lines.
  std::uint64_t digest() const;

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace estore
