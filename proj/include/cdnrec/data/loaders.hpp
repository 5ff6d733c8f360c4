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

#include <cdnrec/data/interaction.hpp>

#include <filesystem>

namespace cdnrec::data {

/// MovieLens `::`-delimited dump (ratings.dat + movies.dat).
///
/// Every rating becomes a positive event regardless of its value. Only movies
/// that appear in the ratings enter the item vocabulary; users and items are
/// indexed in ascending numeric id order. Generalization features: `genre`
/// (multi-valued) and `decade` (from the year in the title).
InteractionLog load_movielens(const std::filesystem::path& ratings_path,
                              const std::filesystem::path& movies_path);

struct BookCrossingLoad {
  InteractionLog log;
  std::size_t kept = 0;
  std::size_t dropped = 0;  // rows whose ISBN is absent from the books file
};

/// BookCrossing `;`-delimited, double-quoted CSV dump, decoded from
/// ISO-8859-1. The dump has no timestamps, so the row position is used as the
/// event time. Generalization features: `author`, `publisher`, `decade`.
BookCrossingLoad load_bookcrossing(const std::filesystem::path& ratings_path,
                                   const std::filesystem::path& books_path);

std::string latin1_to_utf8(std::string_view in);

}  // namespace cdnrec::data
