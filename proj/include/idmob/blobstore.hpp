#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "idmob/types.hpp"

namespace idmob {

  struct BlobStoreConfig {
    std::size_t max_blob_size = std::size_t{64} << 20;
    double base_latency_ms = 200.0;
    /// When set, blobs are also written to <root>/<hh>/<handle-hex> and any
    /// existing files are loaded at construction.
    std::optional<std::filesystem::path> root;
  };

  struct BlobInfo {
    std::size_t size = 0;
    std::uint64_t stored_at = 0;
    std::uint64_t access_count = 0;
  };

  struct Retrieval {
    Bytes content;
    double latency_ms = 0.0;
    /// Count after this retrieval.
    std::uint64_t access_count = 0;
  };

  /// Content-addressed store. Popularity caching is modeled by the reported
  /// latency, which shrinks with the number of prior retrievals:
  ///   latency = base / (1 + log2(1 + prior_accesses))
  class BlobStore {
   public:
    explicit BlobStore(BlobStoreConfig config = {});
    BlobStore(const BlobStore &) = delete;
    BlobStore &operator=(const BlobStore &) = delete;

    Handle put(ByteView content, std::uint64_t height = 0);
    Retrieval get(const Handle &handle);
    bool has(const Handle &handle) const;
    std::optional<BlobInfo> info(const Handle &handle) const;
    std::size_t size() const;
    std::vector<Handle> handles() const;

    /// Re-hashes every blob; returns the handles whose content no longer
    /// matches. Empty means the store is intact.
    std::vector<Handle> audit() const;

    static double retrieval_latency(double base_latency_ms, std::uint64_t prior_accesses);
    static Handle hash_of(ByteView content);

    const BlobStoreConfig &config() const {
      return config_;
    }

   private:
    struct Blob {
      Bytes content;
      std::uint64_t stored_at = 0;
      std::uint64_t access_count = 0;
    };

    std::filesystem::path path_for(const Handle &handle) const;
    void load_root();

    BlobStoreConfig config_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<Handle, Blob> blobs_;
  };

}  // namespace idmob
