#include "ssv/embedding_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "ssv/error.hpp"
#include "ssv/text.hpp"

namespace ssv {

namespace {

constexpr std::string_view kModule = "embedding-store";
constexpr std::array<char, 4> kMagic = {'S', 'S', 'V', 'E'};
constexpr std::uint32_t kVersion = 1;

[[noreturn]] void format_error(const std::string& message) {
  throw FormatError(std::string(kModule), message);
}

[[noreturn]] void data_error(const std::string& message) {
  throw DataError(std::string(kModule), message);
}

std::string line_prefix(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    format_error(std::string("truncated file while reading ") + what);
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

EmbeddingStore read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    format_error("bad magic (expected \"SSVE\")");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kVersion) format_error("unsupported version " + std::to_string(version));
  const auto dim = get_le<std::uint32_t>(in, "dim");
  if (dim == 0) format_error("header dim must be positive");
  const auto count = get_le<std::uint64_t>(in, "count");

  EmbeddingStore store(dim);
  std::string id;
  std::vector<float> vec(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto id_len = get_le<std::uint16_t>(in, "record id length");
    id.resize(id_len);
    if (id_len > 0 && !in.read(id.data(), id_len)) {
      format_error("truncated file in id of record " + std::to_string(r));
    }
    for (auto& v : vec) {
      v = std::bit_cast<float>(get_le<std::uint32_t>(in, "vector"));
    }
    try {
      store.add(id, vec);
    } catch (const DataError& e) {
      data_error("record " + std::to_string(r) + ": " + e.what());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    format_error("trailing bytes after " + std::to_string(count) + " records");
  }
  return store;
}

EmbeddingStore read_text(std::istream& in) {
  EmbeddingStore store;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::chomp(raw);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) format_error(line_prefix(line_no) + "expected utt_id TAB values");
    const auto tokens = text::split_spaces(line.substr(tab + 1));
    if (tokens.empty()) format_error(line_prefix(line_no) + "no values");
    std::vector<float> vec(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!text::parse_float(tokens[i], vec[i])) {
        format_error(line_prefix(line_no) + "bad or non-finite value '" + std::string(tokens[i]) + "'");
      }
    }
    try {
      store.add(std::string(line.substr(0, tab)), std::move(vec));
    } catch (const DataError& e) {
      data_error(line_prefix(line_no) + e.what());
    }
  }
  if (store.empty()) format_error("no records in text embedding file");
  return store;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) data_error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) data_error("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view token) {
  if (token == "train") return Split::train;
  if (token == "dev") return Split::dev;
  if (token == "test") return Split::test;
  return std::nullopt;
}

EmbeddingFormat guess_format(std::string_view path) {
  return path.ends_with(".ssve") ? EmbeddingFormat::binary : EmbeddingFormat::text;
}

Manifest::Manifest(std::vector<ManifestEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void Manifest::add(ManifestEntry entry) {
  if (entry.utt_id.empty() || entry.source_speaker.empty() || entry.target_speaker.empty() ||
      entry.method.empty()) {
    data_error("manifest entry '" + entry.utt_id + "' has an empty field");
  }
  const auto [it, inserted] = index_.emplace(entry.utt_id, entries_.size());
  if (!inserted) data_error("duplicate utt_id '" + entry.utt_id + "' in manifest");
  entries_.push_back(std::move(entry));
}

const ManifestEntry* Manifest::find(std::string_view utt_id) const {
  const auto it = index_.find(std::string(utt_id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

void EmbeddingStore::add(std::string utt_id, std::vector<float> vector) {
  if (utt_id.empty()) data_error("empty utt_id");
  if (utt_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    data_error("utt_id longer than 65535 bytes");
  }
  if (vector.empty()) data_error("empty vector for '" + utt_id + "'");
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    data_error("dim mismatch for '" + utt_id + "': got " + std::to_string(vector.size()) +
               ", store dim is " + std::to_string(dim_));
  }
  if (!std::all_of(vector.begin(), vector.end(), [](float v) { return std::isfinite(v); })) {
    data_error("non-finite value in '" + utt_id + "'");
  }
  const auto [it, inserted] = index_.emplace(utt_id, records_.size());
  if (!inserted) data_error("duplicate utt_id '" + utt_id + "'");
  records_.push_back({std::move(utt_id), std::move(vector)});
}

const EmbeddingRecord* EmbeddingStore::find(std::string_view utt_id) const {
  const auto it = index_.find(std::string(utt_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::span<const float> EmbeddingStore::vector(std::string_view utt_id) const {
  const auto* rec = find(utt_id);
  if (rec == nullptr) data_error("no embedding for utt_id '" + std::string(utt_id) + "'");
  return rec->vector;
}

EmbeddingStore read_embeddings(std::istream& in, EmbeddingFormat format) {
  return format == EmbeddingFormat::binary ? read_binary(in) : read_text(in);
}

EmbeddingStore load_embeddings(const std::string& path, EmbeddingFormat format) {
  auto in = open_in(path, format == EmbeddingFormat::binary ? std::ios::binary : std::ios::in);
  try {
    return read_embeddings(in, format);
  } catch (const Error& e) {
    // Re-tag with the path; keep the original exception kind.
    const std::string msg = path + ": " + std::string(e.what()).substr(e.module().size() + 2);
    if (dynamic_cast<const FormatError*>(&e)) throw FormatError(std::string(kModule), msg);
    throw DataError(std::string(kModule), msg);
  }
}

EmbeddingStore load_embeddings(const std::string& path) {
  return load_embeddings(path, guess_format(path));
}

void write_embeddings(const EmbeddingStore& store, std::ostream& out, EmbeddingFormat format) {
  if (format == EmbeddingFormat::binary) {
    if (store.dim() == 0) data_error("cannot write a store without a dimension");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
    put_le<std::uint64_t>(out, store.size());
    for (const auto& rec : store.records()) {
      put_le<std::uint16_t>(out, static_cast<std::uint16_t>(rec.utt_id.size()));
      out.write(rec.utt_id.data(), static_cast<std::streamsize>(rec.utt_id.size()));
      for (float v : rec.vector) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
  } else {
    for (const auto& rec : store.records()) {
      out << rec.utt_id << '\t';
      for (std::size_t i = 0; i < rec.vector.size(); ++i) {
        if (i) out << ' ';
        out << text::format_g(rec.vector[i], 9);
      }
      out << '\n';
    }
  }
  if (!out) data_error("write failed");
}

void save_embeddings(const EmbeddingStore& store, const std::string& path, EmbeddingFormat format) {
  auto out = open_out(path, format == EmbeddingFormat::binary ? std::ios::binary : std::ios::out);
  write_embeddings(store, out, format);
}

Manifest read_manifest(std::istream& in) {
  Manifest manifest;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cols = text::split(text::chomp(raw), '\t');
    if (cols.size() != 5) {
      format_error("manifest " + line_prefix(line_no) + "expected 5 columns, got " +
                   std::to_string(cols.size()));
    }
    const auto split = parse_split(cols[4]);
    if (!split) {
      format_error("manifest " + line_prefix(line_no) + "unknown split '" + std::string(cols[4]) +
                   "' (expected train, dev or test)");
    }
    try {
      manifest.add({std::string(cols[0]), std::string(cols[1]), std::string(cols[2]),
                    std::string(cols[3]), *split});
    } catch (const DataError& e) {
      data_error("manifest " + line_prefix(line_no) + e.what());
    }
  }
  return manifest;
}

Manifest load_manifest(const std::string& path) {
  auto in = open_in(path, std::ios::in);
  return read_manifest(in);
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
  for (const auto& e : manifest.entries()) {
    out << e.utt_id << '\t' << e.source_speaker << '\t' << e.target_speaker << '\t' << e.method
        << '\t' << to_string(e.split) << '\n';
  }
  if (!out) data_error("write failed");
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  auto out = open_out(path, std::ios::out);
  write_manifest(manifest, out);
}

JoinReport join_validate(const EmbeddingStore& store) {
  JoinReport report;
  for (const auto& rec : store.records()) {
    if (store.manifest().find(rec.utt_id) == nullptr) report.missing_manifest.push_back(rec.utt_id);
  }
  for (const auto& e : store.manifest().entries()) {
    if (store.find(e.utt_id) == nullptr) report.missing_embedding.push_back(e.utt_id);
  }
  std::sort(report.missing_manifest.begin(), report.missing_manifest.end());
  std::sort(report.missing_embedding.begin(), report.missing_embedding.end());
  return report;
}

}  // namespace ssv
