#pragma once

#include "exmix/ingest.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace exmix {

inline constexpr std::string_view kShuttleTrainUrl =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/shuttle/shuttle.trn.Z";
inline constexpr std::string_view kShuttleTestUrl =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/shuttle/shuttle.tst";
inline constexpr std::size_t kShuttleFilteredRows = 12414;

// Decoder for the Unix `compress` (.Z, LZW) format. Throws ParseError.
std::string decompress_lzw(std::string_view data);

// Throws NetworkError.
std::string http_get(const std::string& url);

std::string sha256_hex(std::string_view data);

struct ShuttleData {
  RawDataset attributes;              // 9 numeric attributes
  std::vector<std::size_t> classes;   // class codes 2..7 after filtering
  bool downloaded = false;            // false when served from the cache
  std::filesystem::path cache_file;
};

// Merged training + test table, cached as <cache_dir>/shuttle.csv with a
// .sha256 sidecar. Raw shuttle.trn(.Z) / shuttle.tst files placed in the cache
// directory are used instead of the network. Rows of class 1 are dropped.
// Throws NetworkError when nothing is cached and the download fails, and
// ChecksumMismatch when the cached file does not match its sidecar.
ShuttleData load_shuttle(const std::filesystem::path& cache_dir, bool allow_download = true);

// True when load_shuttle would not need the network.
bool shuttle_cached(const std::filesystem::path& cache_dir);

}  // namespace exmix
