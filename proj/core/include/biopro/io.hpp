#pragma once

#include "biopro/embedding.hpp"
#include "biopro/keyvalue.hpp"
#include "biopro/projector.hpp"
#include "biopro/selection.hpp"
#include "biopro/subspace.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biopro::io {

// Binary layout shared by every persisted matrix type, little-endian:
//   magic[4] | u32 version | u32 dtype | u32 d | u32 n | u64 checksum | payload
// The checksum is 64-bit FNV-1a over the payload bytes exactly as stored.
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 28;

inline constexpr std::array<char, 4> kEmbeddingMagic{'E', 'M', 'B', '1'};
inline constexpr std::array<char, 4> kProjectorMagic{'P', 'R', 'J', '1'};
inline constexpr std::array<char, 4> kSubspaceMagic{'S', 'U', 'B', '1'};
inline constexpr std::array<char, 4> kPolicyMagic{'P', 'O', 'L', '1'};

enum class Dtype : std::uint32_t { kF32 = 0, kF64 = 1 };

std::string_view to_string(Dtype dtype) noexcept;
Dtype parse_dtype(std::string_view text);

struct Header {
  std::array<char, 4> magic{};
  std::uint32_t version = kFormatVersion;
  Dtype dtype = Dtype::kF64;
  std::uint32_t d = 0;
  std::uint32_t n = 0;
  std::uint64_t checksum = 0;
};

struct Manifest {
  int format_version = static_cast<int>(kFormatVersion);
  Dtype dtype = Dtype::kF64;
  std::uint32_t d = 0;
  std::uint32_t n = 0;
  std::string label_file;  // relative to the data file's directory
  std::uint64_t checksum = 0;
  KeyValue extra;  // type-specific fields (kind, provenance, ...)

  std::string to_string() const;
  static Manifest parse(std::string_view text);
};

/// Sidecar paths: `<file>.manifest` and `<file>.labels`.
std::filesystem::path manifest_path(const std::filesystem::path& data_file);
std::filesystem::path labels_path(const std::filesystem::path& data_file);

// Header and checksum of any file in the family, without decoding values.
Header read_header(const std::filesystem::path& path);

/// One line per column: `source_id<TAB>group<TAB>attribute` (attribute may be empty).
std::string labels_to_text(std::span<const LabelRecord> labels);
std::vector<LabelRecord> parse_labels(std::string_view text);

/// Writes the EMB1 payload plus manifest and label sidecars. f64 round-trips
/// bit-exactly; f32 rounds each value to nearest float. Refuses non-finite
/// values, naming the first offending column.
void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path,
                      Dtype dtype = Dtype::kF64);

/// Verifies magic, version, payload length and checksum (distinct error
/// codes). Labels come from the manifest's label file when present, else
/// the `.labels` sidecar, else unlabeled columns.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

/// PRJ1 payload: u32 kind | u32 reserved | u64 subspace checksum | d·d values.
void write_projector(const Projector& p, const std::filesystem::path& path,
                     Dtype dtype = Dtype::kF64);
Projector read_projector(const std::filesystem::path& path);

/// SUB1 payload: U_k column-major (d·k values) then k singular values.
void write_subspace(const BiasSubspace& s, const std::filesystem::path& path,
                    Dtype dtype = Dtype::kF64);
BiasSubspace read_subspace(const std::filesystem::path& path);

/// POL1 payload (always f64): ξ_n ω_n α_n ξ_e ω_e α_e δ_c λ_c | u32 score_dim | u32 side.
void write_policy(const SelectionPolicy& p, const std::filesystem::path& path);
SelectionPolicy read_policy(const std::filesystem::path& path);

/// One value per line, shortest round-trip decimal.
void write_scores(std::span<const double> scores, const std::filesystem::path& path);
std::vector<double> read_scores(const std::filesystem::path& path);

}  // namespace biopro::io
