// Copyright (c) 2026 The accentflow Authors
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

#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "accentflow/common.hpp"

namespace af {

struct AccentId {
  std::string name;
  int index = -1;
};

struct PhonemeInventory {
  AccentId accent;
  std::vector<std::string> symbols;  // pad/blank symbol at index 0
  int base_id = 0;                   // global id of symbols[0]

  int size() const { return static_cast<int>(symbols.size()); }
  int pad_id() const { return base_id; }
  bool contains_global(int id) const {
    return id >= base_id && id < base_id + size();
  }
};

struct PhonemeSequence {
  AccentId accent;
  std::vector<int> ids;        // global phoneme ids
  std::vector<int> durations;  // frames per phoneme; empty if unknown

  bool has_durations() const { return !durations.empty(); }
  int total_frames() const {
    return std::accumulate(durations.begin(), durations.end(), 0);
  }
};

struct G2pResult {
  PhonemeSequence seq;
  int unknown_count = 0;
};

inline std::vector<std::string> utf8_codepoints(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((c & 0x80) == 0x00)
      len = 1;
    else if ((c & 0xE0) == 0xC0)
      len = 2;
    else if ((c & 0xF0) == 0xE0)
      len = 3;
    else if ((c & 0xF8) == 0xF0)
      len = 4;
    if (i + len > s.size()) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

// Per-accent phoneme inventories with disjoint contiguous global id blocks,
// plus the character -> phoneme rule tables used by the toy G2P. Built once
// at startup; freeze() makes it immutable and safe for concurrent readers.
class AccentRegistry {
 public:
  const PhonemeInventory& register_inventory(
      const std::string& accent_name, const std::vector<std::string>& symbols) {
    AF_CHECK(!frozen_, "registry is frozen; cannot register inventories");
    AF_CHECK(!trim(accent_name).empty(), "accent name must be nonempty");
    AF_CHECK(symbols.size() >= 2, "inventory needs pad plus one symbol");
    for (const auto& inv : inventories_)
      AF_CHECK(inv.accent.name != accent_name,
               "duplicate accent name: " + accent_name);
    for (size_t i = 0; i < symbols.size(); ++i) {
      AF_CHECK(!symbols[i].empty(), "empty phoneme symbol");
      for (size_t j = i + 1; j < symbols.size(); ++j)
        AF_CHECK(symbols[i] != symbols[j],
                 "duplicate symbol in inventory: " + symbols[i]);
    }
    PhonemeInventory inv;
    inv.accent = AccentId{accent_name, static_cast<int>(inventories_.size())};
    inv.symbols = symbols;
    inv.base_id = next_id_;
    next_id_ += inv.size();
    inventories_.push_back(std::move(inv));
    rules_.emplace_back();
    return inventories_.back();
  }

  void add_g2p_rule(const std::string& accent_name, const std::string& ch,
                    const std::string& symbol) {
    AF_CHECK(!frozen_, "registry is frozen; cannot add rules");
    const PhonemeInventory& inv = inventory(accent_name);
    const int local = local_symbol_index(inv, symbol);
    AF_CHECK(local >= 0, "g2p rule targets unknown phoneme '" + symbol +
                             "' for accent " + accent_name);
    rules_[static_cast<size_t>(inv.accent.index)][ch] = inv.base_id + local;
  }

  // Rule table file: one "CHAR<TAB>SYMBOL" per line, '#' comments allowed.
  void load_g2p_rules(const std::string& accent_name, const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto tab = t.find('\t');
      AF_CHECK(tab != std::string::npos,
               path + ":" + std::to_string(lineno) + ": expected CHAR<TAB>SYMBOL");
      add_g2p_rule(accent_name, trim(t.substr(0, tab)), trim(t.substr(tab + 1)));
    }
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  int accent_count() const { return static_cast<int>(inventories_.size()); }
  int vocab_size() const { return next_id_; }

  bool has_accent(const std::string& name) const {
    for (const auto& inv : inventories_)
      if (inv.accent.name == name) return true;
    return false;
  }

  const PhonemeInventory& inventory(const std::string& accent_name) const {
    for (const auto& inv : inventories_)
      if (inv.accent.name == accent_name) return inv;
    throw Error("unregistered accent: " + accent_name);
  }

  const PhonemeInventory& inventory_by_index(int index) const {
    AF_CHECK(index >= 0 && index < accent_count(), "accent index out of range");
    return inventories_[static_cast<size_t>(index)];
  }

  // global id -> (accent, local symbol)
  std::pair<AccentId, std::string> decode(int global_id) const {
    for (const auto& inv : inventories_)
      if (inv.contains_global(global_id))
        return {inv.accent,
                inv.symbols[static_cast<size_t>(global_id - inv.base_id)]};
    throw Error("phoneme id out of range: " + std::to_string(global_id));
  }

  int encode(const std::string& accent_name, const std::string& symbol) const {
    const PhonemeInventory& inv = inventory(accent_name);
    const int local = local_symbol_index(inv, symbol);
    AF_CHECK(local >= 0,
             "unknown phoneme '" + symbol + "' for accent " + accent_name);
    return inv.base_id + local;
  }

  // Rule-table lookup per codepoint. Unmapped characters fall back to the
  // accent's pad symbol and are counted; whitespace without a rule is skipped.
  G2pResult g2p(const std::string& text, const std::string& accent_name) const {
    const PhonemeInventory& inv = inventory(accent_name);
    const std::string t = trim(text);
    AF_CHECK(!t.empty(), "g2p: text empty after trimming");
    const auto& table = rules_[static_cast<size_t>(inv.accent.index)];
    G2pResult res;
    res.seq.accent = inv.accent;
    for (const std::string& ch : utf8_codepoints(t)) {
      const auto it = table.find(ch);
      if (it != table.end()) {
        res.seq.ids.push_back(it->second);
        continue;
      }
      if (ch.size() == 1 && (ch[0] == ' ' || ch[0] == '\t')) continue;
      res.seq.ids.push_back(inv.pad_id());
      ++res.unknown_count;
    }
    AF_CHECK(!res.seq.ids.empty(), "g2p: no phonemes produced");
    return res;
  }

  const std::vector<PhonemeInventory>& inventories() const {
    return inventories_;
  }

  // char -> global phoneme id rule table for one accent
  const std::map<std::string, int>& rules(int accent_index) const {
    AF_CHECK(accent_index >= 0 && accent_index < accent_count(),
             "accent index out of range");
    return rules_[static_cast<size_t>(accent_index)];
  }

 private:
  static int local_symbol_index(const PhonemeInventory& inv,
                                const std::string& symbol) {
    for (size_t i = 0; i < inv.symbols.size(); ++i)
      if (inv.symbols[i] == symbol) return static_cast<int>(i);
    return -1;
  }

  std::vector<PhonemeInventory> inventories_;
  std::vector<std::map<std::string, int>> rules_;  // per accent
  int next_id_ = 0;
  bool frozen_ = false;
};

// Alignment file: one "SYMBOL<TAB>FRAMES" per line, '#' comments allowed.
inline PhonemeSequence parse_alignment_text(const std::string& text,
                                            const AccentRegistry& registry,
                                            const std::string& accent_name,
                                            const std::string& origin) {
  PhonemeSequence seq;
  seq.accent = registry.inventory(accent_name).accent;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string symbol;
    long frames = 0;
    if (!(ls >> symbol >> frames)) {
      throw Error(origin + ":" + std::to_string(lineno) +
                  ": expected SYMBOL<TAB>FRAMES");
    }
    std::string rest;
    AF_CHECK(!(ls >> rest),
             origin + ":" + std::to_string(lineno) + ": trailing tokens");
    AF_CHECK(frames > 0, origin + ":" + std::to_string(lineno) +
                             ": nonpositive duration for " + symbol);
    seq.ids.push_back(registry.encode(accent_name, symbol));
    seq.durations.push_back(static_cast<int>(frames));
  }
  AF_CHECK(!seq.ids.empty(), origin + ": no entries");
  return seq;
}

inline PhonemeSequence load_alignment(const std::string& path,
                                      const AccentRegistry& registry,
                                      const std::string& accent_name) {
  return parse_alignment_text(read_text_file(path), registry, accent_name, path);
}

inline std::string serialize_alignment(const PhonemeSequence& seq,
                                       const AccentRegistry& registry) {
  AF_CHECK(seq.has_durations(), "serialize_alignment: durations missing");
  std::ostringstream out;
  for (size_t i = 0; i < seq.ids.size(); ++i) {
    out << registry.decode(seq.ids[i]).second << '\t' << seq.durations[i]
        << '\n';
  }
  return out.str();
}

}  // namespace af
