// Copyright 2026 The causex Authors.
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

#include "causex/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "causex/csv.hpp"
#include "causex/error.hpp"
#include "causex/rng.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "corpus";

// Decodes one code point starting at s[i]; advances i. Invalid sequences
// decode as a single byte with code point 0xFFFD.
char32_t decode_utf8(std::string_view s, size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  // Overlong encodings, surrogates and out-of-range values are invalid.
  static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return 0xFFFD;
  }
  i += len;
  return cp;
}

bool is_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) return std::ispunct(static_cast<int>(c)) != 0;
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB:
    case 0xBF:
      return true;
    default:
      return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
             (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
             (c >= 0xFF01 && c <= 0xFF0F);
  }
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

void flush_token(std::vector<char32_t>& cps, std::vector<std::string>& out) {
  size_t b = 0, e = cps.size();
  while (b < e && is_punct(cps[b])) ++b;
  while (e > b && is_punct(cps[e - 1])) --e;
  if (b < e) {
    std::string tok;
    for (size_t k = b; k < e; ++k) append_utf8(tok, cps[k]);
    out.push_back(std::move(tok));
  }
  cps.clear();
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

CauseCategory parse_label(std::string_view raw, size_t record) {
  const std::string t = trim(raw);
  int value = -1;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorKind::kSchema, kModule,
         "record " + std::to_string(record) + ": label '" + t +
             "' is not an integer");
  }
  auto c = cause_from_value(value);
  if (!c) {
    fail(ErrorKind::kSchema, kModule,
         "record " + std::to_string(record) + ": label " + t +
             " outside 0-5");
  }
  return *c;
}

void check_utf8(std::string_view s, size_t record, std::string_view field) {
  if (!is_valid_utf8(s)) {
    fail(ErrorKind::kSchema, kModule,
         "record " + std::to_string(record) + ": field '" +
             std::string(field) + "' is not valid UTF-8");
  }
}

void check_unique_ids(const std::vector<Document>& docs) {
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < docs.size(); ++i) {
    if (!seen.insert(docs[i].id).second) {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(i + 1) + ": duplicate id '" +
               docs[i].id + "'");
    }
  }
}

}  // namespace

std::string_view cause_name(CauseCategory c) {
  return kCauseNames[static_cast<size_t>(c)];
}

std::optional<CauseCategory> cause_from_name(std::string_view name) {
  for (size_t i = 0; i < kCauseNames.size(); ++i) {
    if (kCauseNames[i] == name) return static_cast<CauseCategory>(i);
  }
  return std::nullopt;
}

std::optional<CauseCategory> cause_from_value(int value) {
  if (value < 0 || value >= kNumClasses) return std::nullopt;
  return static_cast<CauseCategory>(value);
}

Document make_document(std::string id, std::string text, CauseCategory label,
                       std::optional<std::string> inference) {
  Document doc;
  doc.id = std::move(id);
  doc.tokens = tokenize(text);
  doc.text = std::move(text);
  doc.label = label;
  if (inference && !trim(*inference).empty()) doc.inference = std::move(inference);
  return doc;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::vector<char32_t> current;
  size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    if (is_space(cp)) {
      flush_token(current, out);
    } else {
      current.push_back(to_lower(cp));
    }
  }
  flush_token(current, out);
  return out;
}

bool is_valid_utf8(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    const size_t before = i;
    const char32_t cp = decode_utf8(s, i);
    // A genuine U+FFFD is three bytes long; the error marker is one.
    if (cp == 0xFFFD && i - before == 1) return false;
  }
  return true;
}

DataFormat parse_data_format(std::string_view name) {
  if (name == "csv") return DataFormat::kCsv;
  if (name == "jsonl") return DataFormat::kJsonl;
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown data format '" + std::string(name) + "' (expected csv|jsonl)");
}

std::vector<Document> parse_csv_dataset(std::string_view content) {
  const auto rows = csv::parse(content);
  if (rows.empty()) {
    fail(ErrorKind::kSchema, kModule, "CSV has no header row");
  }
  int col_id = -1, col_text = -1, col_cause = -1, col_inference = -1;
  for (size_t c = 0; c < rows[0].size(); ++c) {
    std::string name = lower_ascii(trim(rows[0][c]));
    // Tolerate a UTF-8 byte order mark on the first header cell.
    if (c == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name = name.substr(3);
    if (name == "id") col_id = static_cast<int>(c);
    if (name == "text") col_text = static_cast<int>(c);
    if (name == "cause" || (name == "label" && col_cause < 0)) {
      col_cause = static_cast<int>(c);
    }
    if (name == "inference") col_inference = static_cast<int>(c);
  }
  if (col_text < 0) fail(ErrorKind::kSchema, kModule, "missing required column 'text'");
  if (col_cause < 0) fail(ErrorKind::kSchema, kModule, "missing required column 'cause'");

  std::vector<Document> docs;
  docs.reserve(rows.size() - 1);
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const size_t record = r;
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    auto cell = [&](int col) -> std::string {
      return col >= 0 && static_cast<size_t>(col) < row.size() ? row[col] : "";
    };
    if (static_cast<size_t>(std::max(col_text, col_cause)) >= row.size()) {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(record) + ": expected " +
               std::to_string(rows[0].size()) + " fields, got " +
               std::to_string(row.size()));
    }
    const std::string text = cell(col_text);
    const std::string inference = cell(col_inference);
    std::string id = col_id >= 0 ? trim(cell(col_id)) : std::to_string(record);
    check_utf8(text, record, "text");
    check_utf8(inference, record, "inference");
    check_utf8(id, record, "id");
    if (id.empty()) id = std::to_string(record);
    const CauseCategory label = parse_label(cell(col_cause), record);
    docs.push_back(make_document(std::move(id), text, label,
                                 col_inference >= 0
                                     ? std::optional<std::string>(inference)
                                     : std::nullopt));
  }
  check_unique_ids(docs);
  return docs;
}

std::vector<Document> parse_jsonl_dataset(std::string_view content) {
  std::vector<Document> docs;
  size_t record = 0;
  size_t start = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    if (trim(line).empty()) continue;
    ++record;
    if (!is_valid_utf8(line)) {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(record) + ": line is not valid UTF-8");
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(record) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(record) + ": missing required key 'text'");
    }
    const char* label_key = j.contains("cause") ? "cause" : "label";
    if (!j.contains(label_key)) {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(record) + ": missing required key 'cause'");
    }
    const auto& lj = j[label_key];
    CauseCategory label;
    if (lj.is_number_integer()) {
      auto c = cause_from_value(lj.get<int>());
      if (!c) {
        fail(ErrorKind::kSchema, kModule,
             "record " + std::to_string(record) + ": label " + lj.dump() +
                 " outside 0-5");
      }
      label = *c;
    } else if (lj.is_string()) {
      label = parse_label(lj.get<std::string>(), record);
    } else {
      fail(ErrorKind::kSchema, kModule,
           "record " + std::to_string(record) + ": label is not an integer");
    }
    std::string id = std::to_string(record);
    if (j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    if (j.contains("id") && j["id"].is_number_integer()) id = std::to_string(j["id"].get<long long>());
    std::optional<std::string> inference;
    if (j.contains("inference") && j["inference"].is_string()) {
      inference = j["inference"].get<std::string>();
    }
    docs.push_back(make_document(std::move(id), j["text"].get<std::string>(),
                                 label, std::move(inference)));
  }
  check_unique_ids(docs);
  return docs;
}

std::string format_csv_dataset(std::span<const Document> docs) {
  std::string out = csv::format_row({"id", "text", "cause", "inference"});
  for (const auto& d : docs) {
    out += csv::format_row({d.id, d.text, std::to_string(d.label_index()), d.inference.value_or("")});
  }
  return out;
}

std::vector<Document> load_dataset(const std::filesystem::path& path,
                                   DataFormat format) {
  const std::string content = read_file(path, kModule);
  return format == DataFormat::kCsv ? parse_csv_dataset(content)
                                    : parse_jsonl_dataset(content);
}

CorpusSplit split(std::span<const Document> docs, const SplitCounts& counts,
                  uint64_t seed) {
  const size_t needed = counts.train + counts.validation + counts.test;
  if (needed > docs.size()) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "split counts " + std::to_string(counts.train) + "+" +
             std::to_string(counts.validation) + "+" +
             std::to_string(counts.test) + " exceed corpus size " +
             std::to_string(docs.size()));
  }
  std::vector<size_t> order(docs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  CorpusSplit out;
  out.seed = seed;
  size_t k = 0;
  for (size_t i = 0; i < counts.train; ++i) out.train.push_back(docs[order[k++]]);
  for (size_t i = 0; i < counts.validation; ++i) out.validation.push_back(docs[order[k++]]);
  for (size_t i = 0; i < counts.test; ++i) out.test.push_back(docs[order[k++]]);
  return out;
}

nlohmann::json document_to_json(const Document& doc) {
  nlohmann::json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["cause"] = doc.label_index();
  j["inference"] = doc.inference ? nlohmann::json(*doc.inference) : nlohmann::json();
  return j;
}

Document document_from_json(const nlohmann::json& j) {
  try {
    auto label = cause_from_value(j.at("cause").get<int>());
    if (!label) fail(ErrorKind::kSchema, kModule, "label outside 0-5");
    std::optional<std::string> inference;
    if (j.contains("inference") && j["inference"].is_string()) {
      inference = j["inference"].get<std::string>();
    }
    return make_document(j.at("id").get<std::string>(),
                         j.at("text").get<std::string>(), *label,
                         std::move(inference));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchema, kModule, std::string("bad document: ") + e.what());
  }
}

void write_jsonl(const std::filesystem::path& path,
                 std::span<const Document> docs) {
  std::string out;
  for (const auto& d : docs) {
    out += document_to_json(d).dump();
    out.push_back('\n');
  }
  write_file(path, out, kModule);
}

std::vector<Document> read_jsonl(const std::filesystem::path& path) {
  const std::string content = read_file(path, kModule);
  return parse_jsonl_dataset(content);
}

void write_split(const CorpusSplit& s, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    fail(ErrorKind::kIo, kModule,
         "cannot create directory " + dir.string() + ": " + ec.message());
  }
  write_jsonl(dir / "train.jsonl", s.train);
  write_jsonl(dir / "val.jsonl", s.validation);
  write_jsonl(dir / "test.jsonl", s.test);
  nlohmann::json meta;
  meta["seed"] = s.seed;
  meta["train"] = s.train.size();
  meta["validation"] = s.validation.size();
  meta["test"] = s.test.size();
  write_file(dir / "split.json", meta.dump(2) + "\n", kModule);
}

CorpusSplit read_split(const std::filesystem::path& dir) {
  CorpusSplit s;
  s.train = read_jsonl(dir / "train.jsonl");
  s.validation = read_jsonl(dir / "val.jsonl");
  s.test = read_jsonl(dir / "test.jsonl");
  if (std::filesystem::exists(dir / "split.json")) {
    const auto meta = nlohmann::json::parse(read_file(dir / "split.json", kModule),
                                            nullptr, false);
    if (meta.is_object() && meta.contains("seed")) s.seed = meta["seed"].get<uint64_t>();
  }
  return s;
}

std::string read_file(const std::filesystem::path& path,
                      std::string_view module) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorKind::kNotFound, module, "file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, module, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content,
                std::string_view module) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, module, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::kIo, module, "write failed for " + path.string());
}

}  // namespace causex
