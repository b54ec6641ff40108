#include "exmix/shuttle.hpp"

#include "exmix/errors.hpp"
#include "exmix/io.hpp"

#include <curl/curl.h>
#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <sstream>

namespace exmix {

namespace {

constexpr std::size_t kShuttleColumns = 10;

class BitReader {
 public:
  explicit BitReader(std::string_view data) : data_(data) {}

  bool read(int nbits, std::uint32_t& out) {
    if (pos_ + static_cast<std::size_t>(nbits) > data_.size() * 8) return false;
    out = 0;
    for (int b = 0; b < nbits; ++b, ++pos_) {
      const auto byte = static_cast<unsigned char>(data_[pos_ / 8]);
      out |= static_cast<std::uint32_t>((byte >> (pos_ % 8)) & 1u) << b;
    }
    return true;
  }

  // Codes are written in groups of 8; a width change skips to the end of
  // the current group.
  void align_group(int nbits, std::size_t group_start) {
    const std::size_t group_bits = static_cast<std::size_t>(nbits) * 8;
    const std::size_t used = pos_ - group_start;
    if (used % group_bits != 0) pos_ += group_bits - used % group_bits;
  }

  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::vector<std::array<double, kShuttleColumns>> parse_shuttle(const std::string& text, const std::string& source) {
  std::vector<std::array<double, kShuttleColumns>> rows;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::array<double, kShuttleColumns> row{};
    std::size_t count = 0;
    double x = 0.0;
    while (ls >> x) {
      if (count == kShuttleColumns) break;
      row[count++] = x;
    }
    if (count == 0 && ls.eof()) continue;
    if (count != kShuttleColumns || !ls.eof()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(kShuttleColumns) + " numbers");
    }
    rows.push_back(row);
  }
  return rows;
}

std::size_t write_body(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
  static_cast<std::string*>(userdata)->append(ptr, size * nmemb);
  return size * nmemb;
}

std::string raw_file(const std::filesystem::path& dir, const std::string& name, std::string_view url,
                     bool allow_download) {
  if (std::filesystem::exists(dir / name)) return read_text_file(dir / name);
  if (std::filesystem::exists(dir / (name + ".Z"))) return decompress_lzw(read_text_file(dir / (name + ".Z")));
  if (!allow_download) throw NetworkError("shuttle data not cached in " + dir.string() + " and downloads are disabled");
  auto body = http_get(std::string(url));
  return url.ends_with(".Z") ? decompress_lzw(body) : body;
}

}  // namespace

std::string decompress_lzw(std::string_view data) {
  if (data.size() < 3 || static_cast<unsigned char>(data[0]) != 0x1f ||
      static_cast<unsigned char>(data[1]) != 0x9d) {
    throw ParseError("not a compress (.Z) stream");
  }
  const auto flags = static_cast<unsigned char>(data[2]);
  const int max_bits = flags & 0x1f;
  const bool block_mode = (flags & 0x80) != 0;
  if (max_bits < 9 || max_bits > 16) throw ParseError("unsupported .Z code width");

  std::vector<std::uint32_t> prefix(1u << max_bits, 0);
  std::vector<unsigned char> suffix(1u << max_bits, 0);
  for (std::uint32_t c = 0; c < 256; ++c) suffix[c] = static_cast<unsigned char>(c);
  const std::uint32_t first_free = block_mode ? 257 : 256;

  BitReader bits(data.substr(3));
  std::string out;
  std::string stack;
  int nbits = 9;
  std::uint32_t next = first_free;
  std::size_t group_start = 0;
  std::uint32_t old = 0;
  bool have_old = false;
  unsigned char first_char = 0;
  std::uint32_t code = 0;
  while (bits.read(nbits, code)) {
    if (block_mode && code == 256) {
      bits.align_group(nbits, group_start);
      nbits = 9;
      next = first_free;
      group_start = bits.position();
      have_old = false;
      continue;
    }
    if (!have_old) {
      if (code > 255) throw ParseError("corrupt .Z stream");
      first_char = static_cast<unsigned char>(code);
      out.push_back(static_cast<char>(first_char));
      old = code;
      have_old = true;
      continue;
    }
    std::uint32_t cur = code;
    stack.clear();
    if (cur >= next) {
      if (cur > next) throw ParseError("corrupt .Z stream");
      stack.push_back(static_cast<char>(first_char));
      cur = old;
    }
    while (cur >= 256) {
      stack.push_back(static_cast<char>(suffix[cur]));
      cur = prefix[cur];
    }
    first_char = suffix[cur];
    stack.push_back(static_cast<char>(first_char));
    out.append(stack.rbegin(), stack.rend());
    if (next < (1u << max_bits)) {
      prefix[next] = old;
      suffix[next] = first_char;
      ++next;
    }
    old = code;
    if (next >= (1u << nbits) && nbits < max_bits) {
      bits.align_group(nbits, group_start);
      group_start = bits.position();
      ++nbits;
    }
  }
  return out;
}

std::string http_get(const std::string& url) {
  CURL* curl = curl_easy_init();
  if (!curl) throw NetworkError("cannot initialize the HTTP client");
  std::string body;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 20L);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, 300L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_body);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) throw NetworkError("download of " + url + " failed: " + curl_easy_strerror(rc));
  return body;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

bool shuttle_cached(const std::filesystem::path& cache_dir) {
  namespace fs = std::filesystem;
  if (fs::exists(cache_dir / "shuttle.csv")) return true;
  const bool train = fs::exists(cache_dir / "shuttle.trn") || fs::exists(cache_dir / "shuttle.trn.Z");
  const bool test = fs::exists(cache_dir / "shuttle.tst") || fs::exists(cache_dir / "shuttle.tst.Z");
  return train && test;
}

ShuttleData load_shuttle(const std::filesystem::path& cache_dir, bool allow_download) {
  namespace fs = std::filesystem;
  const auto csv_path = cache_dir / "shuttle.csv";
  const auto sum_path = cache_dir / "shuttle.csv.sha256";
  ShuttleData out;
  out.cache_file = csv_path;

  std::string csv;
  if (fs::exists(csv_path)) {
    csv = read_text_file(csv_path);
    if (fs::exists(sum_path)) {
      std::string expected = read_text_file(sum_path);
      expected = expected.substr(0, expected.find_first_of(" \n\r"));
      const auto actual = sha256_hex(csv);
      if (actual != expected) {
        throw ChecksumMismatch(csv_path.string() + " has SHA-256 " + actual + ", expected " + expected);
      }
    }
  } else {
    const bool had_raw = shuttle_cached(cache_dir);
    std::vector<std::array<double, kShuttleColumns>> rows;
    for (const auto& [name, url] : {std::pair{std::string("shuttle.trn"), kShuttleTrainUrl},
                                    std::pair{std::string("shuttle.tst"), kShuttleTestUrl}}) {
      auto part = parse_shuttle(raw_file(cache_dir, name, url, allow_download), name);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    out.downloaded = !had_raw;
    std::ostringstream os;
    os << "a1,a2,a3,a4,a5,a6,a7,a8,a9,class\n";
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < kShuttleColumns; ++j) os << (j ? "," : "") << r[j];
      os << '\n';
    }
    csv = os.str();
    write_text_file(csv_path, csv);
    write_text_file(sum_path, sha256_hex(csv) + "  shuttle.csv\n");
  }

  std::istringstream is(csv);
  auto table = read_csv(is, csv_path.string());
  const auto cls = take_column(table, "class");
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (cls[i] != 1.0) keep.push_back(static_cast<Eigen::Index>(i));
  }
  out.attributes.feature_names = table.feature_names;
  out.attributes.rows.resize(static_cast<Eigen::Index>(keep.size()), table.rows.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.attributes.rows.row(static_cast<Eigen::Index>(r)) = table.rows.row(keep[r]);
    out.classes.push_back(static_cast<std::size_t>(cls[static_cast<std::size_t>(keep[r])]));
  }
  return out;
}

}  // namespace exmix
