#include "locsolv/envelope.hpp"

#include "locsolv/linalg.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace locsolv {

Json ResultEnvelope::to_json() const {
  return Json{{"schema_version", schema_version},
              {"inputs", inputs},
              {"outputs", outputs},
              {"provenance", provenance}};
}

ResultEnvelope ResultEnvelope::from_json(const Json& j) {
  if (!j.is_object()) throw PreconditionError("envelope must be a JSON object");
  for (const char* field : {"schema_version", "inputs", "outputs", "provenance"}) {
    if (!j.contains(field)) throw PreconditionError(std::string("envelope lacks '") + field + "'");
  }
  if (!j["schema_version"].is_number_integer()) throw PreconditionError("schema_version must be an integer");
  ResultEnvelope e;
  e.schema_version = j["schema_version"].get<int>();
  e.inputs = j["inputs"];
  e.outputs = j["outputs"];
  e.provenance = j["provenance"];
  return e;
}

Json CacheKey::to_json() const {
  return Json{{"kind", kind},         {"m", m},
              {"branch", branch},     {"lo", lo},
              {"hi", hi},             {"tol", tol},
              {"basis_dim", basis_dim}, {"basis_scale", basis_scale},
              {"code_version", code_version}};
}

std::string CacheKey::file_stem() const {
  // FNV-1a of the canonical key text; collisions are caught by the key check on load.
  const std::string text = to_json().dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << kind << '-' << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::filesystem::path ResultCache::path_for(const CacheKey& key) const {
  return dir_ / (key.file_stem() + ".json");
}

std::optional<ResultEnvelope> ResultCache::load(const CacheKey& key,
                                                std::vector<std::string>& warnings) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  std::ifstream in(path);
  if (!in) {
    warnings.push_back("cache file unreadable, recomputing: " + path.string());
    return std::nullopt;
  }
  try {
    const Json doc = Json::parse(in);
    if (doc.at("key") != key.to_json()) return std::nullopt;
    return ResultEnvelope::from_json(doc.at("envelope"));
  } catch (const std::exception& e) {
    warnings.push_back("corrupt cache file, recomputing: " + path.string());
    return std::nullopt;
  }
}

void ResultCache::store(const CacheKey& key, const ResultEnvelope& envelope) const {
  std::filesystem::create_directories(dir_);
  const auto path = path_for(key);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("io", "cannot write cache file " + tmp.string());
    out << Json{{"key", key.to_json()}, {"envelope", envelope.to_json()}}.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::optional<std::filesystem::path> default_cache_dir() {
  const char* env = std::getenv("LOCSOLV_CACHE_DIR");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return std::filesystem::path(env);
}

}  // namespace locsolv
