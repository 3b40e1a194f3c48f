#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace locsolv {

using Json = nlohmann::json;

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Serialized result of one command. Keys are emitted sorted, doubles with
/// round-trip precision.
struct ResultEnvelope {
  int schema_version = kSchemaVersion;
  Json inputs = Json::object();
  Json outputs = Json::object();
  Json provenance = Json::object();

  Json to_json() const;
  /// Throws PreconditionError on a missing or mistyped field.
  static ResultEnvelope from_json(const Json& j);
  std::string dump(int indent = 2) const { return to_json().dump(indent); }
  bool operator==(const ResultEnvelope&) const = default;
};

/// Identity of a cached computation.
struct CacheKey {
  std::string kind;  ///< e.g. "sigma"
  int m = 2;
  std::string branch = "+";
  double lo = 0.0;
  double hi = 0.0;
  double tol = 0.0;
  int basis_dim = 0;
  double basis_scale = 1.0;
  std::string code_version = kCodeVersion;

  Json to_json() const;
  /// Stable file stem derived from the key contents.
  std::string file_stem() const;
};

/// On-disk store of envelopes, one JSON file per key. A file whose stored key
/// or version differs is a miss; a file that fails to parse is a miss with a
/// warning. The directory is created on the first store.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path_for(const CacheKey& key) const;

  std::optional<ResultEnvelope> load(const CacheKey& key, std::vector<std::string>& warnings) const;
  void store(const CacheKey& key, const ResultEnvelope& envelope) const;

 private:
  std::filesystem::path dir_;
};

/// LOCSOLV_CACHE_DIR, if set and non-empty.
std::optional<std::filesystem::path> default_cache_dir();

}  // namespace locsolv
