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

#include <cdnrec/data/loaders.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace cdnrec::data {

namespace {

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open '" + path.string() + "'");
  return in;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  fail(ErrorCategory::Parse, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view s, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(delim, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + delim.size();
  }
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string decade_of(long year) {
  if (year < 1000 || year > 2100) return "unknown";
  return std::to_string(year / 10 * 10) + "s";
}

}  // namespace

std::string latin1_to_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (unsigned char c : in) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

InteractionLog load_movielens(const std::filesystem::path& ratings_path,
                              const std::filesystem::path& movies_path) {
  struct Movie {
    std::vector<std::string> genres;
    std::string decade;
  };
  std::map<long, Movie> movies;
  {
    auto in = open_text(movies_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      chomp(line);
      if (line.empty()) continue;
      const auto f = split(line, "::");
      long id = 0;
      if (f.size() != 3 || !parse_int(f[0], id)) {
        parse_error(movies_path, lineno, "expected MovieID::Title::Genres");
      }
      Movie m;
      for (auto g : split(f[2], "|")) {
        if (!g.empty()) m.genres.emplace_back(g);
      }
      long year = 0;
      const auto title = f[1];
      const auto open = title.rfind('(');
      if (open != std::string_view::npos && title.size() >= open + 6 && title[open + 5] == ')') {
        parse_int(title.substr(open + 1, 4), year);
      }
      m.decade = decade_of(year);
      if (!movies.emplace(id, std::move(m)).second) parse_error(movies_path, lineno, "duplicate movie id");
    }
  }

  struct Row {
    long user, movie;
    std::int64_t ts;
  };
  std::vector<Row> rows;
  std::set<long> users, rated;
  {
    auto in = open_text(ratings_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      chomp(line);
      if (line.empty()) continue;
      const auto f = split(line, "::");
      Row r{};
      long rating = 0;
      if (f.size() != 4 || !parse_int(f[0], r.user) || !parse_int(f[1], r.movie) ||
          !parse_int(f[2], rating) || !parse_int(f[3], r.ts)) {
        parse_error(ratings_path, lineno, "expected UserID::MovieID::Rating::Timestamp");
      }
      if (!movies.contains(r.movie)) {
        parse_error(ratings_path, lineno, "movie id " + std::to_string(r.movie) + " not in movies file");
      }
      users.insert(r.user);
      rated.insert(r.movie);
      rows.push_back(r);
    }
  }

  auto catalog = std::make_shared<Catalog>();
  for (long u : users) catalog->users.add(std::to_string(u));
  FeatureField genre{"genre", {}, {0}, {}};
  FeatureField decade{"decade", {}, {0}, {}};
  for (long m : rated) {
    catalog->items.add(std::to_string(m));
    const Movie& mv = movies.at(m);
    std::vector<std::uint32_t> g;
    for (const auto& name : mv.genres) g.push_back(genre.values.add(name));
    genre.push_item(g);
    const std::uint32_t d = decade.values.add(mv.decade);
    decade.push_item(std::span(&d, 1));
  }
  catalog->item_features.push_back(std::move(genre));
  catalog->item_features.push_back(std::move(decade));

  InteractionLog log;
  log.interactions.reserve(rows.size());
  for (const Row& r : rows) {
    log.interactions.push_back({*catalog->users.find(std::to_string(r.user)),
                                *catalog->items.find(std::to_string(r.movie)), r.ts, 1});
  }
  log.catalog = std::move(catalog);
  return log;
}

namespace {

/// Splits one `"a";"b";"c"` record. Returns false if the line is not quoted.
bool split_quoted(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  if (line.size() < 2 || line.front() != '"' || line.back() != '"') return false;
  const std::string_view inner(line.data() + 1, line.size() - 2);
  for (auto f : split(inner, "\";\"")) out.push_back(latin1_to_utf8(f));
  return true;
}

}  // namespace

BookCrossingLoad load_bookcrossing(const std::filesystem::path& ratings_path,
                                   const std::filesystem::path& books_path) {
  struct Book {
    std::string author, publisher, decade;
  };
  std::map<std::string, Book> books;
  std::vector<std::string> fields;
  {
    auto in = open_text(books_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      chomp(line);
      if (line.empty()) continue;
      if (!split_quoted(line, fields) || fields.size() < 8) {
        parse_error(books_path, lineno, "expected 8 quoted ';'-separated fields");
      }
      if (lineno == 1 && fields[0] == "ISBN") continue;
      // Titles occasionally contain the delimiter; count the trailing fields from the end.
      const std::size_t n = fields.size();
      long year = 0;
      parse_int(fields[n - 5], year);
      books.emplace(fields[0], Book{fields[n - 6], fields[n - 4], decade_of(year)});
    }
  }

  struct Row {
    long user;
    std::string isbn;
    std::int64_t ts;
  };
  std::vector<Row> rows;
  std::set<long> users;
  std::set<std::string> isbns;
  BookCrossingLoad result;
  {
    auto in = open_text(ratings_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      chomp(line);
      if (line.empty()) continue;
      if (!split_quoted(line, fields) || fields.size() != 3) {
        parse_error(ratings_path, lineno, "expected \"User-ID\";\"ISBN\";\"Book-Rating\"");
      }
      if (lineno == 1 && fields[0] == "User-ID") continue;
      long user = 0, rating = 0;
      if (!parse_int(fields[0], user) || !parse_int(fields[2], rating)) {
        parse_error(ratings_path, lineno, "non-numeric user id or rating");
      }
      if (!books.contains(fields[1])) {
        ++result.dropped;
        continue;
      }
      users.insert(user);
      isbns.insert(fields[1]);
      rows.push_back({user, fields[1], static_cast<std::int64_t>(lineno)});
    }
  }
  if (rows.empty()) fail(ErrorCategory::Data, "no BookCrossing ratings survive the join with the books file");

  auto catalog = std::make_shared<Catalog>();
  for (long u : users) catalog->users.add(std::to_string(u));
  FeatureField author{"author", {}, {0}, {}};
  FeatureField publisher{"publisher", {}, {0}, {}};
  FeatureField decade{"decade", {}, {0}, {}};
  for (const auto& isbn : isbns) {
    catalog->items.add(isbn);
    const Book& b = books.at(isbn);
    const std::uint32_t a = author.values.add(b.author);
    const std::uint32_t p = publisher.values.add(b.publisher);
    const std::uint32_t d = decade.values.add(b.decade);
    author.push_item(std::span(&a, 1));
    publisher.push_item(std::span(&p, 1));
    decade.push_item(std::span(&d, 1));
  }
  catalog->item_features.push_back(std::move(author));
  catalog->item_features.push_back(std::move(publisher));
  catalog->item_features.push_back(std::move(decade));

  result.log.interactions.reserve(rows.size());
  for (const Row& r : rows) {
    result.log.interactions.push_back(
        {*catalog->users.find(std::to_string(r.user)), *catalog->items.find(r.isbn), r.ts, 1});
  }
  result.kept = rows.size();
  result.log.catalog = std::move(catalog);
  return result;
}

}  // namespace cdnrec::data
