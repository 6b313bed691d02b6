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

#include "estore/otm/volume_log.h"

namespace estore {

Lsn VolumeLog::append(const LogRecord& record, bool force) {
  buffer_.emplace_back(encode_record(record), summarize(record));
  if (!force) return sim_.volume_records(volume_).size() + buffer_.size() - 1;
  auto pending = std::move(buffer_);
  buffer_.clear();
  Lsn lsn = 0;
  for (auto& [bytes, summary] : pending) {
    lsn = sim_.volume_append(volume_, node_, std::move(bytes), std::move(summary));
  }
  return lsn;
}

}  // namespace estore
