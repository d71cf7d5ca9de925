// Copyright 2026 The CLSC Authors.
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

// Dataset files: JSON lines.
//
// Line 1 is a header object:
//   {"format":"clsc-dataset","version":1,"d_w":8,"d_h":8,"types":[...]}
// "types" lists the hierarchy inline; alternatively "hierarchy" names a
// hierarchy file (one path per line), resolved relative to the dataset.
//
// Every following line is one mention:
//   {"id":"s0","split":"train","mention":[[...],...],"context":[[...],...],
//    "candidates":["/a","/a/b"],"gold":"/a/b"}
// "split" defaults to train and "gold" is optional. Candidate sets must be
// ancestor-closed; the gold must be one of their leaves.

#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "clsc/error.hpp"
#include "clsc/types.hpp"

namespace clsc {

struct Dataset {
  TypeHierarchy hierarchy;
  Eigen::Index d_w = 0;
  Eigen::Index d_h = 0;
  std::vector<MentionSample> samples;

  std::vector<const MentionSample*> split(Split s) const {
    std::vector<const MentionSample*> out;
    for (const auto& m : samples) {
      if (m.split == s) out.push_back(&m);
    }
    return out;
  }
};

inline constexpr int kDatasetVersion = 1;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson matrix_to_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd json_to_matrix(const ojson& j, Eigen::Index width,
                                      const char* field, std::size_t line) {
  if (!j.is_array() || j.empty()) {
    fail_validation("line ", line, ": '", field,
                    "' must be a non-empty list of vectors");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), width);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const ojson& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != width) {
      fail_validation("line ", line, ": '", field, "' vector ", i,
                      " has width ", row.is_array() ? row.size() : 0,
                      ", header says ", width);
    }
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!row[k].is_number()) {
        fail_validation("line ", line, ": '", field, "' holds a non-number");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          row[k].get<double>();
    }
  }
  if (!m.allFinite()) {
    fail_validation("line ", line, ": '", field, "' holds non-finite values");
  }
  return m;
}

}  // namespace detail

inline void write_dataset(std::ostream& out, const Dataset& ds) {
  using detail::ojson;
  ojson header;
  header["format"] = "clsc-dataset";
  header["version"] = kDatasetVersion;
  header["d_w"] = ds.d_w;
  header["d_h"] = ds.d_h;
  header["types"] = ds.hierarchy.names();
  out << header.dump() << '\n';
  for (const auto& s : ds.samples) {
    ojson rec;
    rec["id"] = s.id;
    rec["split"] = std::string(split_name(s.split));
    rec["mention"] = detail::matrix_to_json(s.mention);
    rec["context"] = detail::matrix_to_json(s.context);
    ojson cands = ojson::array();
    for (TypeId t : s.candidates) cands.push_back(ds.hierarchy.name(t));
    rec["candidates"] = std::move(cands);
    if (s.gold) rec["gold"] = ds.hierarchy.name(*s.gold);
    out << rec.dump() << '\n';
  }
}

inline Dataset read_dataset(std::istream& in,
                            const std::filesystem::path& base_dir = {}) {
  using detail::ojson;
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  auto parse_line = [&](const std::string& text) {
    try {
      return ojson::parse(text);
    } catch (const ojson::parse_error& e) {
      fail_validation("line ", lineno, ": malformed JSON (", e.what(), ")");
    }
  };

  if (!std::getline(in, line)) fail_validation("dataset file is empty");
  ++lineno;
  const ojson header = parse_line(line);
  if (!header.is_object() || header.value("format", "") != "clsc-dataset") {
    fail_validation("line 1: missing clsc-dataset header");
  }
  if (header.value("version", 0) != kDatasetVersion) {
    fail_validation("line 1: unsupported dataset version");
  }
  if (!header.contains("d_w") || !header["d_w"].is_number_integer() ||
      !header.contains("d_h") || !header["d_h"].is_number_integer()) {
    fail_validation("line 1: header needs integer d_w and d_h");
  }
  ds.d_w = header["d_w"].get<Eigen::Index>();
  ds.d_h = header["d_h"].get<Eigen::Index>();
  if (ds.d_w < 1 || ds.d_h < 1) fail_validation("line 1: d_w, d_h must be >= 1");
  if (header.contains("types")) {
    const auto paths = header["types"].get<std::vector<std::string>>();
    ds.hierarchy = TypeHierarchy::from_paths(paths);
  } else if (header.contains("hierarchy")) {
    std::filesystem::path p = header["hierarchy"].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    ds.hierarchy = TypeHierarchy::load(p.string());
  } else {
    fail_validation("line 1: header needs 'types' or 'hierarchy'");
  }

  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const ojson rec = parse_line(line);
    if (!rec.is_object()) fail_validation("line ", lineno, ": not an object");
    MentionSample s;
    try {
      s.id = rec.at("id").get<std::string>();
      s.split = parse_split(rec.value("split", "train"));
      s.mention = detail::json_to_matrix(rec.at("mention"), ds.d_w, "mention",
                                         lineno);
      s.context = detail::json_to_matrix(rec.at("context"), ds.d_h, "context",
                                         lineno);
      for (const auto& c : rec.at("candidates")) {
        s.candidates.insert(ds.hierarchy.index_of(c.get<std::string>()));
      }
      if (rec.contains("gold") && !rec["gold"].is_null()) {
        s.gold = ds.hierarchy.index_of(rec["gold"].get<std::string>());
      }
      validate_sample(ds.hierarchy, s);
    } catch (const ojson::exception& e) {
      fail_validation("line ", lineno, ": ", e.what());
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      if (what.rfind("line ", 0) == 0) throw;
      fail_validation("line ", lineno, ": ", what);
    }
    if (!ids.insert(s.id).second) {
      fail_validation("line ", lineno, ": duplicate id '", s.id, "'");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open dataset '", path, "'");
  return read_dataset(in, std::filesystem::path(path).parent_path());
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_validation("cannot write dataset '", path, "'");
  write_dataset(out, ds);
}

inline double clean_fraction(const Dataset& ds, Split split = Split::kTrain) {
  std::size_t n = 0, clean = 0;
  for (const auto& s : ds.samples) {
    if (s.split != split) continue;
    ++n;
    clean += is_clean(ds.hierarchy, s) ? 1 : 0;
  }
  return n ? static_cast<double>(clean) / static_cast<double>(n) : 0.0;
}

}  // namespace clsc
