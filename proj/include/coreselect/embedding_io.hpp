#pragma once

#include "coreselect/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace coreselect {

enum class EmbeddingFormat { csv, binary };

EmbeddingFormat parse_format(const std::string& name);
const char* format_name(EmbeddingFormat format) noexcept;

/// Picks the format from the extension: ".csv" is CSV, anything else binary.
EmbeddingFormat format_for_path(const std::filesystem::path& path);

inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;

// CSV layout: header `id,label,f0,...,f{d-1}`, one row per sample. Labels are class
// names; class_names are ordered by first appearance. Values use the shortest decimal
// that round-trips.
EmbeddingMatrix read_embeddings_csv(std::istream& in);
void write_embeddings_csv(std::ostream& out, const EmbeddingMatrix& m);

// Binary layout (little-endian): "CSEL", u16 version, u64 N, u32 d, N x u64 id,
// N x u32 label, u32 name count + length-prefixed names, N*d f64 row-major.
EmbeddingMatrix read_embeddings_binary(std::istream& in);
void write_embeddings_binary(std::ostream& out, const EmbeddingMatrix& m);

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path, EmbeddingFormat format);

/// Dataset manifest (JSON). `embedding_path` is relative to the manifest's directory
/// unless absolute.
struct Manifest {
    std::string name;
    std::vector<std::string> class_names;
    std::string embedding_path;
    EmbeddingFormat format = EmbeddingFormat::binary;
    std::size_t dim = 0;
    std::size_t count = 0;
    std::string provenance;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Loads the embeddings a manifest points at and checks them against the manifest.
EmbeddingMatrix load_manifest_embeddings(const std::filesystem::path& manifest_path);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace coreselect
