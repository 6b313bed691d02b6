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

#include "estore/otm/log_record.h"

#include <charconv>
#include <stdexcept>

namespace estore {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void opt_str(const std::optional<std::string>& s) {
    u8(s ? 1 : 0);
    if (s) str(*s);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

struct Truncated {};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::optional<std::string> opt_str() {
    if (u8() == 0) return std::nullopt;
    return str();
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Truncated{};
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void put_fragment(Writer& w, const MtxFragment& f) {
  w.u32(static_cast<std::uint32_t>(f.compares.size()));
  for (const auto& [k, v] : f.compares) {
    w.str(k);
    w.opt_str(v);
  }
  w.u32(static_cast<std::uint32_t>(f.reads.size()));
  for (const auto& k : f.reads) w.str(k);
  w.u32(static_cast<std::uint32_t>(f.writes.size()));
  for (const auto& [k, v] : f.writes) {
    w.str(k);
    w.str(v);
  }
}

MtxFragment get_fragment(Reader& r) {
  MtxFragment f;
  for (std::uint32_t n = r.u32(); n > 0; --n) {
    auto k = r.str();
    f.compares[k] = r.opt_str();
  }
  for (std::uint32_t n = r.u32(); n > 0; --n) f.reads.insert(r.str());
  for (std::uint32_t n = r.u32(); n > 0; --n) {
    auto k = r.str();
    f.writes[k] = r.str();
  }
  return f;
}

void put_participants(Writer& w, const std::vector<PartitionId>& ps) {
  w.u32(static_cast<std::uint32_t>(ps.size()));
  for (auto p : ps) w.u32(p);
}

std::vector<PartitionId> get_participants(Reader& r) {
  std::vector<PartitionId> ps;
  for (std::uint32_t n = r.u32(); n > 0; --n) ps.push_back(r.u32());
  return ps;
}

}  // namespace

std::string TxnId::str() const {
  return "t" + std::to_string(epoch) + "." + std::to_string(counter);
}

TxnId TxnId::parse(std::string_view text) {
  TxnId id;
  auto dot = text.find('.');
  if (text.empty() || text[0] != 't' || dot == std::string_view::npos) {
    throw std::invalid_argument("bad txn id: " + std::string(text));
  }
  std::from_chars(text.data() + 1, text.data() + dot, id.epoch);
  std::from_chars(text.data() + dot + 1, text.data() + text.size(), id.counter);
  return id;
}

std::vector<Key> MtxFragment::lock_keys() const {
  std::set<Key> keys(reads.begin(), reads.end());
  for (const auto& [k, v] : compares) keys.insert(k);
  for (const auto& [k, v] : writes) keys.insert(k);
  return {keys.begin(), keys.end()};
}

void to_json(json& j, const MtxFragment& f) {
  json compares = json::object();
  for (const auto& [k, v] : f.compares) compares[k] = v ? json(*v) : json(nullptr);
  j = json{{"compares", std::move(compares)}, {"reads", f.reads}, {"writes", f.writes}};
}

void from_json(const json& j, MtxFragment& f) {
  f = MtxFragment{};
  for (const auto& [k, v] : j.at("compares").items()) {
    f.compares[k] = v.is_null() ? std::nullopt : std::optional<Value>(v.get<Value>());
  }
  f.reads = j.at("reads").get<std::set<Key>>();
  f.writes = j.at("writes").get<std::map<Key, Value>>();
}

std::string_view log_kind_name(LogKind kind) {
  switch (kind) {
    case LogKind::kBegin: return "BEGIN";
    case LogKind::kUpdate: return "UPDATE";
    case LogKind::kCommit: return "COMMIT";
    case LogKind::kAbort: return "ABORT";
    case LogKind::kCheckpoint: return "CHECKPOINT";
    case LogKind::kMtxVote: return "MTX_VOTE";
    case LogKind::kMtxDecision: return "MTX_DECISION";
    case LogKind::kHandoff: return "HANDOFF";
  }
  return "?";
}

std::string encode_record(const LogRecord& rec) {
  Writer body;
  body.u8(static_cast<std::uint8_t>(rec.kind));
  body.u64(rec.epoch);
  switch (rec.kind) {
    case LogKind::kBegin:
    case LogKind::kCommit:
    case LogKind::kAbort:
      body.u64(rec.txn.epoch);
      body.u64(rec.txn.counter);
      break;
    case LogKind::kUpdate:
      body.u64(rec.txn.epoch);
      body.u64(rec.txn.counter);
      body.str(rec.key);
      body.str(rec.value);
      break;
    case LogKind::kCheckpoint:
      body.u32(static_cast<std::uint32_t>(rec.image.store.size()));
      for (const auto& [k, v] : rec.image.store) {
        body.str(k);
        body.str(v);
      }
      body.u32(static_cast<std::uint32_t>(rec.image.mtx.size()));
      for (const auto& [id, m] : rec.image.mtx) {
        body.str(id);
        body.u8(m.yes ? 1 : 0);
        body.u8(m.decision ? (*m.decision == Decision::kCommit ? 2 : 1) : 0);
        put_fragment(body, m.fragment);
        put_participants(body, m.participants);
      }
      break;
    case LogKind::kMtxVote:
      body.str(rec.mtx_id);
      body.u8(rec.vote_yes ? 1 : 0);
      put_fragment(body, rec.fragment);
      put_participants(body, rec.participants);
      break;
    case LogKind::kMtxDecision:
      body.str(rec.mtx_id);
      body.u8(rec.decision == Decision::kCommit ? 1 : 0);
      break;
    case LogKind::kHandoff:
      break;
  }
  std::string payload = body.take();
  Writer framed;
  framed.u32(static_cast<std::uint32_t>(payload.size()));
  std::string out = framed.take();
  out += payload;
  return out;
}

std::optional<LogRecord> decode_record(std::string_view bytes) {
  try {
    Reader frame(bytes);
    const std::uint32_t len = frame.u32();
    if (bytes.size() != 4 + static_cast<std::size_t>(len)) return std::nullopt;
    Reader r(bytes.substr(4));
    LogRecord rec;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 8) return std::nullopt;
    rec.kind = static_cast<LogKind>(kind);
    rec.epoch = r.u64();
    switch (rec.kind) {
      case LogKind::kBegin:
      case LogKind::kCommit:
      case LogKind::kAbort:
        rec.txn.epoch = r.u64();
        rec.txn.counter = r.u64();
        break;
      case LogKind::kUpdate:
        rec.txn.epoch = r.u64();
        rec.txn.counter = r.u64();
        rec.key = r.str();
        rec.value = r.str();
        break;
      case LogKind::kCheckpoint:
        for (std::uint32_t n = r.u32(); n > 0; --n) {
          auto k = r.str();
          rec.image.store[k] = r.str();
        }
        for (std::uint32_t n = r.u32(); n > 0; --n) {
          auto id = r.str();
          MtxRecord m;
          m.yes = r.u8() != 0;
          const std::uint8_t d = r.u8();
          if (d == 1) m.decision = Decision::kAbort;
          if (d == 2) m.decision = Decision::kCommit;
          m.fragment = get_fragment(r);
          m.participants = get_participants(r);
          rec.image.mtx[id] = std::move(m);
        }
        break;
      case LogKind::kMtxVote:
        rec.mtx_id = r.str();
        rec.vote_yes = r.u8() != 0;
        rec.fragment = get_fragment(r);
        rec.participants = get_participants(r);
        break;
      case LogKind::kMtxDecision:
        rec.mtx_id = r.str();
        rec.decision = r.u8() != 0 ? Decision::kCommit : Decision::kAbort;
        break;
      case LogKind::kHandoff:
        break;
    }
    if (!r.done()) return std::nullopt;
    return rec;
  } catch (const Truncated&) {
    return std::nullopt;
  }
}

json summarize(const LogRecord& rec) {
  json j{{"kind", log_kind_name(rec.kind)}};
  switch (rec.kind) {
    case LogKind::kBegin:
    case LogKind::kCommit:
    case LogKind::kAbort:
      j["txn"] = rec.txn.str();
      break;
    case LogKind::kUpdate:
      j["txn"] = rec.txn.str();
      j["key"] = rec.key;
      break;
    case LogKind::kCheckpoint:
      j["keys"] = rec.image.store.size();
      break;
    case LogKind::kMtxVote:
      j["mtx"] = rec.mtx_id;
      j["yes"] = rec.vote_yes;
      break;
    case LogKind::kMtxDecision:
      j["mtx"] = rec.mtx_id;
      j["decision"] = decision_name(rec.decision);
      break;
    case LogKind::kHandoff:
      break;
  }
  return j;
}

}  // namespace estore
