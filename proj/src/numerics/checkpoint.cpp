// Copyright 2026 The cdnrec Authors.
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

#include <cdnrec/numerics/checkpoint.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace cdnrec {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'D', 'N', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::vector<char>& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorCategory::Data, "checkpoint truncated");
  }
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<char> buf(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(buf, kVersion);
  put<std::uint32_t>(buf, 0);
  put<std::uint64_t>(buf, ckpt.metadata.size());
  buf.insert(buf.end(), ckpt.metadata.begin(), ckpt.metadata.end());
  put<std::uint64_t>(buf, ckpt.tensors.size());
  for (const auto& [name, m] : ckpt.tensors) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf.insert(buf.end(), name.begin(), name.end());
    put<std::uint64_t>(buf, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(buf, static_cast<std::uint64_t>(m.cols()));
  }
  for (const auto& [_, m] : ckpt.tensors) {
    for (Index k = 0; k < m.size(); ++k) put<double>(buf, m.data()[k]);
  }

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::Io, "cannot open '" + tmp.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) fail(ErrorCategory::Io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCategory::Io, "cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open checkpoint '" + path.string() + "'");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader rd(std::move(data));

  if (rd.bytes(kMagic.size()) != std::string(kMagic.begin(), kMagic.end())) {
    fail(ErrorCategory::Data, "'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  const auto version = rd.get<std::uint32_t>();
  if (version != kVersion) fail(ErrorCategory::Data, "unsupported checkpoint version " + std::to_string(version));
  rd.get<std::uint32_t>();

  Checkpoint ckpt;
  ckpt.metadata = rd.bytes(rd.get<std::uint64_t>());
  const auto n = rd.get<std::uint64_t>();
  std::vector<std::pair<std::string, std::pair<std::uint64_t, std::uint64_t>>> headers;
  for (std::uint64_t k = 0; k < n; ++k) {
    auto name = rd.bytes(rd.get<std::uint32_t>());
    const auto rows = rd.get<std::uint64_t>();
    const auto cols = rd.get<std::uint64_t>();
    headers.push_back({std::move(name), {rows, cols}});
  }
  for (auto& [name, shape] : headers) {
    Matrix m(static_cast<Index>(shape.first), static_cast<Index>(shape.second));
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = rd.get<double>();
    if (!ckpt.tensors.emplace(name, std::move(m)).second) {
      fail(ErrorCategory::Data, "checkpoint repeats tensor '" + name + "'");
    }
  }
  if (!rd.done()) fail(ErrorCategory::Data, "trailing bytes after checkpoint data");
  return ckpt;
}

void export_params(const ParamStore& params, Checkpoint& ckpt, const std::string& prefix) {
  for (const auto& [name, slot] : params) ckpt.tensors[prefix + name] = slot.value;
}

ParamStore import_params(const Checkpoint& ckpt, const std::string& prefix,
                         bool (*is_sparse)(const std::string&)) {
  ParamStore store;
  for (const auto& [key, value] : ckpt.tensors) {
    if (!key.starts_with(prefix)) continue;
    const std::string name = key.substr(prefix.size());
    store.add(name, value, is_sparse != nullptr && is_sparse(name));
  }
  return store;
}

}  // namespace cdnrec
