// SPDX-License-Identifier: Apache-2.0
//
// Binary parameter checkpoints. All integers and floats are little-endian.
//
//   magic        8 bytes  "GGANCKPT"
//   version      u32      (currently 1)
//   pad glyph    u32      code point
//   n_symbols    u32      followed by n_symbols u32 code points (real symbols)
//   n_dims       u32      followed by n_dims u32 values
//   seed         u64
//   n_arrays     u32      followed by n_arrays records:
//     name_len u32, name bytes (UTF-8), rows u32, cols u32,
//     rows*cols f64 in column-major order
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "graphogan/corpus.hpp"
#include "graphogan/neural.hpp"

namespace graphogan {

inline constexpr std::array<char, 8> kCheckpointMagic = {'G', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Alphabet alphabet;
  std::vector<std::uint32_t> dims;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, Matrix>> arrays;
};

namespace detail {

template <class U>
void put_le(std::ostream& out, U v) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw Error(Errc::bad_checkpoint, "unexpected end of checkpoint");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline std::uint32_t checked_u32(std::size_t n) {
  if (n > UINT32_MAX) throw Error(Errc::invalid_argument, "value too large for checkpoint field");
  return static_cast<std::uint32_t>(n);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, ck.alphabet.pad_glyph());
  const auto& symbols = ck.alphabet.real_symbols();
  detail::put_le<std::uint32_t>(out, detail::checked_u32(symbols.size()));
  for (char32_t c : symbols) detail::put_le<std::uint32_t>(out, c);
  detail::put_le<std::uint32_t>(out, detail::checked_u32(ck.dims.size()));
  for (auto d : ck.dims) detail::put_le<std::uint32_t>(out, d);
  detail::put_le<std::uint64_t>(out, ck.seed);
  detail::put_le<std::uint32_t>(out, detail::checked_u32(ck.arrays.size()));
  for (const auto& [name, m] : ck.arrays) {
    detail::put_le<std::uint32_t>(out, detail::checked_u32(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_le<std::uint32_t>(out, detail::checked_u32(static_cast<std::size_t>(m.rows())));
    detail::put_le<std::uint32_t>(out, detail::checked_u32(static_cast<std::size_t>(m.cols())));
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
}

inline Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw Error(Errc::bad_checkpoint, "bad magic");
  }
  if (auto v = detail::get_le<std::uint32_t>(in); v != kCheckpointVersion) {
    throw Error(Errc::bad_checkpoint, "unsupported version " + std::to_string(v));
  }
  Checkpoint ck;
  const auto pad = static_cast<char32_t>(detail::get_le<std::uint32_t>(in));
  std::vector<char32_t> symbols(detail::get_le<std::uint32_t>(in));
  for (auto& c : symbols) c = static_cast<char32_t>(detail::get_le<std::uint32_t>(in));
  if (!std::is_sorted(symbols.begin(), symbols.end()) ||
      std::adjacent_find(symbols.begin(), symbols.end()) != symbols.end()) {
    throw Error(Errc::bad_checkpoint, "alphabet not strictly sorted");
  }
  ck.alphabet = Alphabet::from_symbols(std::move(symbols), pad);
  ck.dims.resize(detail::get_le<std::uint32_t>(in));
  for (auto& d : ck.dims) d = detail::get_le<std::uint32_t>(in);
  ck.seed = detail::get_le<std::uint64_t>(in);
  const auto n = detail::get_le<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < n; ++k) {
    std::string name(detail::get_le<std::uint32_t>(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw Error(Errc::bad_checkpoint, "truncated array name");
    }
    const auto rows = detail::get_le<std::uint32_t>(in);
    const auto cols = detail::get_le<std::uint32_t>(in);
    Matrix m(rows, cols);
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = std::bit_cast<double>(detail::get_le<std::uint64_t>(in));
    ck.arrays.emplace_back(std::move(name), std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::bad_checkpoint, "trailing bytes after last array");
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  write_checkpoint(out, ck);
  if (!out) throw Error(Errc::io, "write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read '" + path + "'");
  return read_checkpoint(in);
}

/// Copies every named parameter of `params` into the array list.
template <class P>
void append_arrays(Checkpoint& ck, P& params, const std::string& prefix) {
  params.visit(prefix, [&](const std::string& name, Matrix& m) { ck.arrays.emplace_back(name, m); });
}

/// Fills `params` from the arrays with matching names and shapes.
template <class P>
void restore_arrays(const Checkpoint& ck, P& params, const std::string& prefix) {
  params.visit(prefix, [&](const std::string& name, Matrix& m) {
    for (const auto& [n, a] : ck.arrays) {
      if (n != name) continue;
      if (a.rows() != m.rows() || a.cols() != m.cols()) {
        throw Error(Errc::bad_checkpoint, "array '" + name + "' has wrong shape");
      }
      m = a;
      return;
    }
    throw Error(Errc::bad_checkpoint, "array '" + name + "' missing");
  });
  params.bump();
}

}  // namespace graphogan
