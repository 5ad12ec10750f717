#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ssv {

enum class Split { train, dev, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view token);

enum class EmbeddingFormat { binary, text };

// Picks binary for a ".ssve" suffix and text otherwise.
EmbeddingFormat guess_format(std::string_view path);

struct EmbeddingRecord {
  std::string utt_id;
  std::vector<float> vector;
};

/// Labels for one converted utterance: who spoke the source audio, whose
/// voice it was converted towards, which conversion method, and the split.
struct ManifestEntry {
  std::string utt_id;
  std::string source_speaker;
  std::string target_speaker;
  std::string method;
  Split split = Split::test;

  bool operator==(const ManifestEntry&) const = default;
};

/// Manifest rows in file order with an id index.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<ManifestEntry> entries);

  // Throws DataError on a duplicate id or an empty field.
  void add(ManifestEntry entry);

  const ManifestEntry* find(std::string_view utt_id) const;
  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Vectors of one embedding kind (speaker or method) keyed by utterance id.
/// dim is fixed by the first record added, or up front by the caller.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  // Throws DataError on a dim mismatch, duplicate id, empty id or
  // non-finite entry.
  void add(std::string utt_id, std::vector<float> vector);

  const EmbeddingRecord* find(std::string_view utt_id) const;
  // Throws DataError naming the id when absent.
  std::span<const float> vector(std::string_view utt_id) const;

  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t dim() const noexcept { return dim_; }

  const Manifest& manifest() const noexcept { return manifest_; }
  void set_manifest(Manifest manifest) { manifest_ = std::move(manifest); }

 private:
  std::size_t dim_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
  Manifest manifest_;
};

// Embedding files. The binary layout is
//   "SSVE" | u32 version=1 | u32 dim | u64 count |
//   count x ( u16 id_len | id bytes | dim x f32 )
// with every integer and float little-endian.
EmbeddingStore read_embeddings(std::istream& in, EmbeddingFormat format);
EmbeddingStore load_embeddings(const std::string& path, EmbeddingFormat format);
EmbeddingStore load_embeddings(const std::string& path);
void write_embeddings(const EmbeddingStore& store, std::ostream& out, EmbeddingFormat format);
void save_embeddings(const EmbeddingStore& store, const std::string& path, EmbeddingFormat format);

// Manifest TSV: utt_id, source_speaker, target_speaker, method, split.
Manifest read_manifest(std::istream& in);
Manifest load_manifest(const std::string& path);
void write_manifest(const Manifest& manifest, std::ostream& out);
void save_manifest(const Manifest& manifest, const std::string& path);

struct JoinReport {
  std::vector<std::string> missing_manifest;   // have a vector, no manifest row
  std::vector<std::string> missing_embedding;  // have a manifest row, no vector

  bool valid() const noexcept { return missing_manifest.empty() && missing_embedding.empty(); }
};

// Both lists come back sorted.
JoinReport join_validate(const EmbeddingStore& store);

}  // namespace ssv
