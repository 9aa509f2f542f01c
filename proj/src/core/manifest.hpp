#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/types.hpp"

namespace mmvm {

inline constexpr std::string_view kManifestFormat = "mmvm-manifest";
inline constexpr std::string_view kManifestVersion = "1";

struct ImageEntry {
  ImageRef ref;
  std::vector<SegmentedObject> objects;
  friend bool operator==(const ImageEntry&, const ImageEntry&) = default;
};

struct Provenance {
  std::string generator;
  std::uint64_t seed = 0;
  std::string config_hash;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DatasetManifest {
  std::string version{kManifestVersion};
  std::vector<ImageEntry> images;
  std::vector<MatchingQuestion> questions;
  Provenance provenance;

  const ImageEntry* find_image(std::string_view id) const noexcept;
  const SegmentedObject* find_object(std::string_view image_id, std::string_view track_id) const noexcept;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Violation {
  std::string entity;  // e.g. "question q17", "image cam0/f3"
  std::string rule;    // stable rule id, e.g. "question.answer_not_in_options"
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationOptions {
  // When set, image files are resolved against this root and their decoded
  // dimensions are compared with the manifest.
  std::optional<std::filesystem::path> image_root;
};

std::vector<Violation> validate_manifest(const DatasetManifest& manifest, const ValidationOptions& options = {});

// Canonical line-delimited encoding: a header record, one record per image,
// one record per question. Keys sorted, compact separators, '\n' terminated.
std::string serialize_manifest(const DatasetManifest& manifest);
// Throws ParseError on ill-formed input (distinct from validation failures).
DatasetManifest parse_manifest(std::string_view bytes);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::string manifest_hash(const DatasetManifest& manifest);

}  // namespace mmvm
