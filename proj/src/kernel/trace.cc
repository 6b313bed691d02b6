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

#include "estore/kernel/trace.h"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace estore {

namespace {

constexpr std::string_view kKindNames[] = {
    "SEND", "DELIVER", "DROP", "CRASH", "RESTART", "VOLUME_APPEND", "LOCAL",
};

// Splits off "<name>=<value> " and returns value; 'rest' advances past it.
std::string_view take_field(std::string_view& rest, std::string_view name) {
  if (rest.substr(0, name.size()) != name || rest.size() <= name.size() ||
      rest[name.size()] != '=') {
    throw std::invalid_argument("trace line: expected field " + std::string(name));
  }
  rest.remove_prefix(name.size() + 1);
  if (name == "payload") {
    auto value = rest;
    rest = {};
    return value;
  }
  auto space = rest.find(' ');
  if (space == std::string_view::npos) {
    throw std::invalid_argument("trace line: truncated at " + std::string(name));
  }
  auto value = rest.substr(0, space);
  rest.remove_prefix(space + 1);
  return value;
}

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("trace line: bad integer " + std::string(text));
  }
  return v;
}

}  // namespace

std::string_view event_kind_name(EventKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

EventKind parse_event_kind(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == text) return static_cast<EventKind>(i);
  }
  throw std::invalid_argument("unknown trace kind: " + std::string(text));
}

std::string_view TraceEvent::ev() const {
  if (!payload.is_object()) return {};
  auto it = payload.find("ev");
  if (it == payload.end() || !it->is_string()) return {};
  return it->get_ref<const std::string&>();
}

std::string TraceEvent::line() const {
  std::string out;
  out.reserve(96);
  out += "seq=";
  out += std::to_string(seq);
  out += " time=";
  out += std::to_string(time);
  out += " node=";
  out += node.str();
  out += " kind=";
  out += event_kind_name(kind);
  out += " payload=";
  out += payload.dump();
  return out;
}

TraceEvent TraceEvent::parse_line(std::string_view line) {
  TraceEvent e;
  auto rest = line;
  e.seq = parse_u64(take_field(rest, "seq"));
  e.time = parse_u64(take_field(rest, "time"));
  auto node = NodeId::parse(take_field(rest, "node"));
  if (!node) throw std::invalid_argument("trace line: bad node");
  e.node = *node;
  e.kind = parse_event_kind(take_field(rest, "kind"));
  e.payload = json::parse(take_field(rest, "payload"));
  return e;
}

const TraceEvent& Trace::append(TraceEvent event) {
  events_.push_back(std::move(event));
  return events_.back();
}

void Trace::write(std::ostream& out) const {
  for (const auto& e : events_) {
    out << e.line() << '\n';
  }
}

std::string Trace::serialize() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

Trace Trace::read(std::istream& in) {
  Trace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    trace.events_.push_back(TraceEvent::parse_line(line));
  }
  return trace;
}

std::uint64_t Trace::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& e : events_) {
    for (unsigned char c : e.line()) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace estore
