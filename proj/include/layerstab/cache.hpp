#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "layerstab/spectral.hpp"
#include "layerstab/steady.hpp"

namespace layerstab {

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t h);

// On-disk store: blobs named by the hash of their content, plus index.json mapping key hashes to blobs.
// An empty directory string disables the cache.
class Cache {
public:
    explicit Cache(std::string dir);
    // LAYERSTAB_CACHE_DIR if set, otherwise ".layerstab-cache" under the working directory.
    static std::string default_dir();

    bool enabled() const { return !dir_.empty(); }
    const std::string& dir() const { return dir_; }

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& kind, const std::string& bytes);

    int hits() const { return hits_; }
    int misses() const { return misses_; }

private:
    std::string dir_;
    mutable int hits_ = 0, misses_ = 0;
};

std::string serialize(const SlepConstants& c);
SlepConstants deserialize_constants(const std::string& bytes);
std::string serialize(const SpectralBasis& b);
SpectralBasis deserialize_basis(const std::string& bytes);
std::string serialize(const LayeredStateEps& s);
LayeredStateEps deserialize_state(const std::string& bytes);

// Canonical cache keys: every input that changes the result appears in the key.
std::string constants_key(const ModelParams& p, const ConstantsOptions& opt);
std::string basis_key(const ModelParams& p, const SlowOptions& opt, const ReducedOptions& ropt);
std::string state_key(const ModelParams& p, const SteadyOptions& opt, const ReducedOptions& ropt);

// Cached builders; a disabled cache just computes.
SlepConstants cached_constants(Cache& cache, const ModelParams& p, const ConstantsOptions& opt = {});
SpectralBasis cached_basis(Cache& cache, const ModelParams& p, const SlowOptions& opt = {},
                           const ReducedOptions& ropt = {});
LayeredStateEps cached_state(Cache& cache, const ModelParams& p, const SteadyOptions& opt = {},
                             const ReducedOptions& ropt = {});

}  // namespace layerstab
