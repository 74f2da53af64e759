// Copyright 2026 The instrec Authors
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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instrec/errors.hpp"

namespace instrec {

// One node of the instrument tree. Codes are decimal-digit paths: a child
// extends its parent's code by exactly one digit, and depth equals the code
// length. The (empty-code) root is implicit and never listed.
struct TaxonomyNode {
  std::string code;
  std::string name;

  std::string parent_code() const {
    return code.size() > 1 ? code.substr(0, code.size() - 1) : std::string();
  }
  int depth() const { return static_cast<int>(code.size()); }
};

// A validated instrument tree plus the instrument -> node assignments.
// Immutable after construction; safe for concurrent reads.
class Taxonomy {
 public:
  Taxonomy(std::vector<TaxonomyNode> nodes,
           std::map<std::string, std::string> assignments);

  const std::vector<TaxonomyNode>& nodes() const { return nodes_; }
  const std::map<std::string, std::string>& assignments() const {
    return assignments_;
  }

  const TaxonomyNode* find(std::string_view code) const;
  int max_depth() const { return max_depth_; }

 private:
  std::vector<TaxonomyNode> nodes_;                  // sorted by code
  std::map<std::string, std::string> assignments_;   // instrument -> code
  int max_depth_ = 0;
};

// Text format: one record per line, `NODE <code> <name>` or
// `ASSIGN <instrument> <code>`; `#` starts a comment. Instrument and node
// names may contain spaces.
Taxonomy load_taxonomy(std::istream& in);
Taxonomy load_taxonomy_file(const std::filesystem::path& path);

// Drops nodes deeper than `depth` and re-points each assignment to its
// ancestor at exactly `depth` (kept as-is when already shallower).
// Identity when `depth` >= the tree height. Idempotent.
Taxonomy truncate(const Taxonomy& taxonomy, int depth);

struct GroupLabel {
  std::string code;
  std::string name;
};

// Ordered joint index over instrument labels and group labels. Instruments
// come first (sorted lexicographically), then groups (sorted by code).
// Immutable after construction.
class LabelSpace {
 public:
  LabelSpace() = default;

  const std::vector<std::string>& instruments() const { return instruments_; }
  const std::vector<GroupLabel>& groups() const { return groups_; }

  std::size_t size() const { return instruments_.size() + groups_.size(); }
  std::size_t instrument_count() const { return instruments_.size(); }
  std::size_t group_count() const { return groups_.size(); }

  // Position of an instrument label; throws lookup error when unknown.
  std::size_t instrument_index(std::string_view instrument) const;
  std::optional<std::size_t> find_instrument(std::string_view instrument) const;
  // Position of a group label given its code; throws lookup error.
  std::size_t group_index(std::string_view code) const;

  // Canonical name of label at `index`: the instrument name, or
  // "<code>:<name>" for groups.
  std::string label_at(std::size_t index) const;
  std::vector<std::string> label_names() const;

  // The group containing `instrument`.
  const GroupLabel& group_of(std::string_view instrument) const;

  // Order-independent digest of the label ordering; stored in checkpoints
  // and verified on load.
  std::uint64_t fingerprint() const;

 private:
  friend LabelSpace build_label_space(const Taxonomy&, int);

  std::vector<std::string> instruments_;
  std::vector<GroupLabel> groups_;
  std::map<std::string, std::size_t, std::less<>> instrument_pos_;
  std::map<std::string, std::size_t, std::less<>> group_pos_;
  std::vector<std::size_t> instrument_group_;  // instrument pos -> group pos
};

// Builds the joint label space at `depth`. Groups are the depth-`depth`
// ancestors that own at least one instrument. An instrument assigned above
// `depth` is a structural error.
LabelSpace build_label_space(const Taxonomy& taxonomy, int depth);

// Multi-hot vector over instruments + groups: 1 at each active instrument
// and at each group containing at least one active instrument.
std::vector<std::uint8_t> expand_labels(
    const LabelSpace& space, std::span<const std::string> active_instruments);

}  // namespace instrec
