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

#include <string>
#include <utility>
#include <vector>

#include "estore/kernel/simulator.h"
#include "estore/otm/partition_engine.h"

namespace estore {

// LogSink over a simulated durable volume. Unforced records wait in a
// volatile buffer that dies with the node; a forced append writes the
// buffer and the record through to the volume in order.
class VolumeLog : public LogSink {
 public:
  VolumeLog(Simulator& sim, NodeId node, std::string volume)
      : sim_(sim), node_(node), volume_(std::move(volume)) {}

  Lsn append(const LogRecord& record, bool force) override;

  const std::string& volume() const { return volume_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  Simulator& sim_;
  NodeId node_;
  std::string volume_;
  std::vector<std::pair<std::string, json>> buffer_;
};

}  // namespace estore
