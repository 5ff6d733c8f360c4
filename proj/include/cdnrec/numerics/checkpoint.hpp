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

#pragma once

#include <cdnrec/numerics/param_store.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace cdnrec {

/// On-disk parameter checkpoint (all integers and reals little-endian):
///
///   magic      8 bytes  "CDNRCKPT"
///   version    u32      1
///   reserved   u32      0
///   meta_len   u64      length of the metadata blob
///   metadata   bytes    UTF-8 JSON (training state, model description)
///   n_tensors  u64
///   per tensor, in lexicographic name order:
///     name_len u32, name bytes, rows u64, cols u64
///   then, in the same order, rows*cols f64 values per tensor (row-major).
struct Checkpoint {
  std::string metadata;
  std::map<std::string, Matrix> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies every slot value into `ckpt.tensors` under `prefix + name`.
void export_params(const ParamStore& params, Checkpoint& ckpt, const std::string& prefix = "param/");
/// Builds a ParamStore from tensors under `prefix`; sparse-ness is restored for
/// names matched by `is_sparse`.
ParamStore import_params(const Checkpoint& ckpt, const std::string& prefix = "param/",
                         bool (*is_sparse)(const std::string&) = nullptr);

}  // namespace cdnrec
