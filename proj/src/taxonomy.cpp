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

#include "instrec/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "instrec/common.hpp"
#include "instrec/errors.hpp"

namespace instrec {

namespace {

bool is_digit_code(std::string_view code) {
  return !code.empty() &&
         std::all_of(code.begin(), code.end(),
                     [](unsigned char c) { return c >= '0' && c <= '9'; });
}

std::string trimmed(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Taxonomy::Taxonomy(std::vector<TaxonomyNode> nodes,
                   std::map<std::string, std::string> assignments)
    : nodes_(std::move(nodes)), assignments_(std::move(assignments)) {
  if (nodes_.empty()) {
    fail(ErrorCategory::structural, "taxonomy has no nodes");
  }
  std::sort(nodes_.begin(), nodes_.end(),
            [](const TaxonomyNode& a, const TaxonomyNode& b) {
              return a.code < b.code;
            });
  std::set<std::string> codes;
  for (const auto& node : nodes_) {
    if (!is_digit_code(node.code)) {
      fail(ErrorCategory::structural,
           "taxonomy node code '" + node.code + "' is not a decimal path");
    }
    if (!codes.insert(node.code).second) {
      fail(ErrorCategory::structural, "duplicate taxonomy code '" + node.code + "'");
    }
    max_depth_ = std::max(max_depth_, node.depth());
  }
  // Every code prefix must itself be listed; depth-1 nodes hang off the
  // implicit root, which keeps the graph a single tree.
  for (const auto& node : nodes_) {
    if (node.code.size() > 1 && !codes.contains(node.parent_code())) {
      fail(ErrorCategory::structural, "node '" + node.code +
                                          "' has no parent node '" +
                                          node.parent_code() + "'");
    }
  }
  for (const auto& [instrument, code] : assignments_) {
    if (!codes.contains(code)) {
      fail(ErrorCategory::structural, "instrument '" + instrument +
                                          "' assigned to unknown code '" +
                                          code + "'");
    }
  }
}

const TaxonomyNode* Taxonomy::find(std::string_view code) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), code,
                             [](const TaxonomyNode& n, std::string_view c) {
                               return n.code < c;
                             });
  if (it == nodes_.end() || it->code != code) return nullptr;
  return &*it;
}

Taxonomy load_taxonomy(std::istream& in) {
  std::vector<TaxonomyNode> nodes;
  std::map<std::string, std::string> assignments;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = trimmed(line);
    if (body.empty() || body[0] == '#') continue;
    std::istringstream row(body);
    std::string keyword;
    row >> keyword;
    std::string rest = trimmed(body.substr(keyword.size()));
    if (keyword == "NODE") {
      // NODE <code> <name...>
      auto space = rest.find_first_of(" \t");
      if (space == std::string::npos) {
        fail(ErrorCategory::parse,
             "line " + std::to_string(line_no) + ": NODE needs a code and a name");
      }
      nodes.push_back({rest.substr(0, space), trimmed(rest.substr(space))});
    } else if (keyword == "ASSIGN") {
      // ASSIGN <instrument...> <code>; the code is the final token.
      auto space = rest.find_last_of(" \t");
      if (space == std::string::npos) {
        fail(ErrorCategory::parse, "line " + std::to_string(line_no) +
                                       ": ASSIGN needs an instrument and a code");
      }
      std::string instrument = trimmed(rest.substr(0, space));
      std::string code = trimmed(rest.substr(space));
      if (auto [it, inserted] = assignments.emplace(instrument, code); !inserted) {
        fail(ErrorCategory::parse, "line " + std::to_string(line_no) +
                                       ": instrument '" + instrument +
                                       "' assigned twice");
      }
    } else {
      fail(ErrorCategory::parse, "line " + std::to_string(line_no) +
                                     ": unknown record '" + keyword + "'");
    }
  }
  return Taxonomy(std::move(nodes), std::move(assignments));
}

Taxonomy load_taxonomy_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCategory::io, "cannot open taxonomy file " + path.string());
  }
  return load_taxonomy(in);
}

Taxonomy truncate(const Taxonomy& taxonomy, int depth) {
  if (depth < 1) {
    fail(ErrorCategory::config, "truncation depth must be >= 1");
  }
  std::vector<TaxonomyNode> nodes;
  for (const auto& node : taxonomy.nodes()) {
    if (node.depth() <= depth) nodes.push_back(node);
  }
  std::map<std::string, std::string> assignments;
  for (const auto& [instrument, code] : taxonomy.assignments()) {
    assignments[instrument] =
        code.size() > static_cast<std::size_t>(depth) ? code.substr(0, depth) : code;
  }
  return Taxonomy(std::move(nodes), std::move(assignments));
}

std::size_t LabelSpace::instrument_index(std::string_view instrument) const {
  auto it = instrument_pos_.find(instrument);
  if (it == instrument_pos_.end()) {
    fail(ErrorCategory::lookup,
         "unknown instrument label '" + std::string(instrument) + "'");
  }
  return it->second;
}

std::optional<std::size_t> LabelSpace::find_instrument(
    std::string_view instrument) const {
  auto it = instrument_pos_.find(instrument);
  if (it == instrument_pos_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSpace::group_index(std::string_view code) const {
  auto it = group_pos_.find(code);
  if (it == group_pos_.end()) {
    fail(ErrorCategory::lookup, "unknown group code '" + std::string(code) + "'");
  }
  return it->second;
}

std::string LabelSpace::label_at(std::size_t index) const {
  if (index < instruments_.size()) return instruments_[index];
  index -= instruments_.size();
  if (index < groups_.size()) {
    return groups_[index].code + ":" + groups_[index].name;
  }
  fail(ErrorCategory::lookup, "label index out of range");
}

std::vector<std::string> LabelSpace::label_names() const {
  std::vector<std::string> names;
  names.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) names.push_back(label_at(i));
  return names;
}

const GroupLabel& LabelSpace::group_of(std::string_view instrument) const {
  std::size_t pos = instrument_index(instrument);
  return groups_[instrument_group_[pos] - instruments_.size()];
}

std::uint64_t LabelSpace::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < size(); ++i) {
    std::string label = label_at(i);
    label += '\n';
    h = fnv1a64(label, h);
  }
  return h;
}

LabelSpace build_label_space(const Taxonomy& taxonomy, int depth) {
  if (depth < 1) {
    fail(ErrorCategory::config, "label-space depth must be >= 1");
  }
  LabelSpace space;
  std::map<std::string, std::string> instrument_to_group;  // name -> group code
  std::set<std::string> group_codes;
  for (const auto& [instrument, code] : taxonomy.assignments()) {
    if (code.size() < static_cast<std::size_t>(depth)) {
      fail(ErrorCategory::structural,
           "instrument '" + instrument + "' is assigned at depth " +
               std::to_string(code.size()) + ", above the requested depth " +
               std::to_string(depth));
    }
    std::string group = code.substr(0, depth);
    instrument_to_group[instrument] = group;
    group_codes.insert(group);
  }
  for (const auto& [instrument, group] : instrument_to_group) {
    space.instrument_pos_[instrument] = space.instruments_.size();
    space.instruments_.push_back(instrument);  // map order = lexicographic
  }
  for (const auto& code : group_codes) {
    const TaxonomyNode* node = taxonomy.find(code);
    space.group_pos_[code] = space.instruments_.size() + space.groups_.size();
    space.groups_.push_back({code, node ? node->name : code});
  }
  space.instrument_group_.resize(space.instruments_.size());
  for (const auto& [instrument, group] : instrument_to_group) {
    space.instrument_group_[space.instrument_pos_[instrument]] =
        space.group_pos_[group];
  }
  return space;
}

std::vector<std::uint8_t> expand_labels(
    const LabelSpace& space, std::span<const std::string> active_instruments) {
  std::vector<std::uint8_t> out(space.size(), 0);
  for (const auto& instrument : active_instruments) {
    std::size_t pos = space.instrument_index(instrument);
    out[pos] = 1;
    out[space.group_index(space.group_of(instrument).code)] = 1;
  }
  return out;
}

}  // namespace instrec
