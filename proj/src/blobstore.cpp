#include "idmob/blobstore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <mutex>

#include "idmob/error.hpp"

namespace idmob {

  namespace fs = std::filesystem;

  BlobStore::BlobStore(BlobStoreConfig config) : config_(std::move(config)) {
    if (config_.root) {
      std::error_code ec;
      fs::create_directories(*config_.root, ec);
      if (ec) {
        throw Error(Errc::StorageIo, config_.root->string() + ": " + ec.message());
      }
      load_root();
    }
  }

  Handle BlobStore::hash_of(ByteView content) {
    Handle h;
    h.bytes = sha256(content);
    return h;
  }

  double BlobStore::retrieval_latency(double base_latency_ms, std::uint64_t prior_accesses) {
    return base_latency_ms / (1.0 + std::log2(1.0 + static_cast<double>(prior_accesses)));
  }

  fs::path BlobStore::path_for(const Handle &handle) const {
    const auto hex = handle.hex();
    return *config_.root / hex.substr(0, 2) / hex;
  }

  void BlobStore::load_root() {
    for (const auto &shard : fs::directory_iterator(*config_.root)) {
      if (!shard.is_directory()) continue;
      for (const auto &file : fs::directory_iterator(shard.path())) {
        const auto name = file.path().filename().string();
        if (name.size() != 64 || !is_lower_hex(name)) continue;
        std::ifstream in(file.path(), std::ios::binary);
        Bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        auto h = hash_of(content);
        // Corrupt or foreign files are ignored rather than served.
        if (h.hex() != name) continue;
        blobs_.emplace(h, Blob{std::move(content), 0, 0});
      }
    }
  }

  Handle BlobStore::put(ByteView content, std::uint64_t height) {
    if (content.size() > config_.max_blob_size) {
      throw Error(Errc::BlobTooLarge,
                  std::to_string(content.size()) + " > " + std::to_string(config_.max_blob_size));
    }
    const auto h = hash_of(content);
    std::unique_lock lock(mutex_);
    if (blobs_.contains(h)) {
      return h;
    }
    if (config_.root) {
      const auto path = path_for(h);
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
      const auto tmp = path.string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char *>(content.data()),
                  static_cast<std::streamsize>(content.size()));
        if (!out) {
          throw Error(Errc::StorageIo, tmp);
        }
      }
      fs::rename(tmp, path, ec);
      if (ec) {
        throw Error(Errc::StorageIo, path.string() + ": " + ec.message());
      }
    }
    blobs_.emplace(h, Blob{Bytes(content.begin(), content.end()), height, 0});
    return h;
  }

  Retrieval BlobStore::get(const Handle &handle) {
    std::unique_lock lock(mutex_);
    auto it = blobs_.find(handle);
    if (it == blobs_.end()) {
      throw Error(Errc::NotFound, handle.hex());
    }
    auto &blob = it->second;
    Retrieval r;
    r.latency_ms = retrieval_latency(config_.base_latency_ms, blob.access_count);
    r.access_count = ++blob.access_count;
    r.content = blob.content;
    return r;
  }

  bool BlobStore::has(const Handle &handle) const {
    std::shared_lock lock(mutex_);
    return blobs_.contains(handle);
  }

  std::optional<BlobInfo> BlobStore::info(const Handle &handle) const {
    std::shared_lock lock(mutex_);
    auto it = blobs_.find(handle);
    if (it == blobs_.end()) return std::nullopt;
    return BlobInfo{it->second.content.size(), it->second.stored_at, it->second.access_count};
  }

  std::size_t BlobStore::size() const {
    std::shared_lock lock(mutex_);
    return blobs_.size();
  }

  std::vector<Handle> BlobStore::handles() const {
    std::shared_lock lock(mutex_);
    std::vector<Handle> out;
    out.reserve(blobs_.size());
    for (const auto &[h, _] : blobs_) out.push_back(h);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Handle> BlobStore::audit() const {
    std::shared_lock lock(mutex_);
    std::vector<Handle> bad;
    for (const auto &[h, blob] : blobs_) {
      if (hash_of(blob.content) != h) bad.push_back(h);
    }
    return bad;
  }

}  // namespace idmob
