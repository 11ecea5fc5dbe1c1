// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "graphogan/error.hpp"
#include "graphogan/utf8.hpp"

namespace graphogan {

/// One Unimorph record: lemma, inflected form and its tag bundle.
struct Triple {
  std::u32string lemma;
  std::u32string form;
  std::vector<std::string> tags;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Dataset {
  std::string language;
  std::vector<Triple> triples;
};

/// Train-low sets normally hold this many rows.
inline constexpr std::size_t kTrainLowSize = 100;

inline constexpr char32_t kDefaultPadGlyph = U'0';
inline constexpr char32_t kFallbackPadGlyph = U'␀';  // ␀

/// Character inventory with the pad symbol fixed at index 0.
///
/// Real symbols occupy indices 1..size()-1 in code point order. The pad
/// glyph only affects rendering; it never belongs to the real inventory.
class Alphabet {
 public:
  Alphabet() = default;

  /// Throws pad_collision if `pad` is itself one of the symbols.
  static Alphabet from_symbols(std::vector<char32_t> symbols, char32_t pad = kDefaultPadGlyph) {
    std::sort(symbols.begin(), symbols.end());
    symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
    if (std::binary_search(symbols.begin(), symbols.end(), pad)) {
      throw Error(Errc::pad_collision, "pad glyph occurs in the data");
    }
    Alphabet a;
    a.real_ = std::move(symbols);
    a.pad_ = pad;
    return a;
  }

  std::size_t size() const noexcept { return real_.size() + 1; }
  char32_t pad_glyph() const noexcept { return pad_; }
  const std::vector<char32_t>& real_symbols() const noexcept { return real_; }

  char32_t symbol(std::size_t index) const {
    if (index == 0) return pad_;
    if (index > real_.size()) {
      throw Error(Errc::unknown_symbol, "index " + std::to_string(index) + " out of range");
    }
    return real_[index - 1];
  }

  /// Index of a real symbol, or nullopt. The pad glyph is not indexable.
  std::optional<std::size_t> find(char32_t c) const {
    auto it = std::lower_bound(real_.begin(), real_.end(), c);
    if (it == real_.end() || *it != c) return std::nullopt;
    return static_cast<std::size_t>(it - real_.begin()) + 1;
  }

  std::size_t index_of(char32_t c) const {
    if (auto i = find(c)) return *i;
    std::string s;
    utf8::append(s, c);
    throw Error(Errc::unknown_symbol, "symbol '" + s + "' not in alphabet");
  }

  bool contains(std::u32string_view s) const {
    return std::all_of(s.begin(), s.end(), [&](char32_t c) { return find(c).has_value(); });
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<char32_t> real_;
  char32_t pad_ = kDefaultPadGlyph;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view strip_newline(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  return line;
}

}  // namespace detail

/// Parses one tab-separated record. `line_no` is only used in messages.
inline Triple parse_row(std::string_view line, std::size_t line_no = 1) {
  line = detail::strip_newline(line);
  const auto where = " (line " + std::to_string(line_no) + ")";
  auto cols = detail::split(line, '\t');
  if (cols.size() != 3) {
    throw Error(Errc::malformed_row,
                "expected 3 columns, got " + std::to_string(cols.size()) + where);
  }
  for (auto c : cols) {
    if (c.empty()) throw Error(Errc::malformed_row, "empty field" + where);
  }
  Triple t;
  try {
    t.lemma = utf8::decode(cols[0]);
    t.form = utf8::decode(cols[1]);
    utf8::decode(cols[2]);
  } catch (const Error& e) {
    throw Error(Errc::malformed_row, e.what() + where);
  }
  for (auto tag : detail::split(cols[2], ';')) t.tags.emplace_back(tag);
  return t;
}

/// Inverse of parse_row, without the trailing newline.
inline std::string serialize_row(const Triple& t) {
  if (t.lemma.empty() || t.form.empty() || t.tags.empty()) {
    throw Error(Errc::malformed_row, "triple has an empty field");
  }
  std::string out = utf8::encode(t.lemma);
  out += '\t';
  out += utf8::encode(t.form);
  out += '\t';
  for (std::size_t i = 0; i < t.tags.size(); ++i) {
    if (i) out += ';';
    out += t.tags[i];
  }
  if (std::count(out.begin(), out.end(), '\t') != 2) {
    throw Error(Errc::malformed_row, "field contains a tab");
  }
  return out;
}

inline Dataset parse_dataset(std::istream& in, std::string language, Warnings* warnings = nullptr) {
  Dataset ds{std::move(language), {}};
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  while (!lines.empty() && detail::strip_newline(lines.back()).empty()) lines.pop_back();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ds.triples.push_back(parse_row(lines[i], i + 1));
  }
  if (ds.triples.size() != kTrainLowSize) {
    warn(warnings, "dataset '" + ds.language + "' has " + std::to_string(ds.triples.size()) +
                       " rows, expected " + std::to_string(kTrainLowSize));
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, std::string language,
                            Warnings* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read '" + path + "'");
  return parse_dataset(in, std::move(language), warnings);
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
  for (const auto& t : ds.triples) out << serialize_row(t) << '\n';
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  write_dataset(out, ds);
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

/// Union of all lemma and form characters. The pad renders as '0' unless the
/// data itself uses '0', in which case it renders as U+2400.
inline Alphabet build_alphabet(const Dataset& ds) {
  if (ds.triples.empty()) throw Error(Errc::invalid_argument, "cannot build alphabet of empty dataset");
  std::set<char32_t> seen;
  for (const auto& t : ds.triples) {
    seen.insert(t.lemma.begin(), t.lemma.end());
    seen.insert(t.form.begin(), t.form.end());
  }
  std::vector<char32_t> symbols(seen.begin(), seen.end());
  const char32_t pad = seen.count(kDefaultPadGlyph) ? kFallbackPadGlyph : kDefaultPadGlyph;
  return Alphabet::from_symbols(std::move(symbols), pad);
}

}  // namespace graphogan
