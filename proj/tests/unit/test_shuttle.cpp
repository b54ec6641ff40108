#include "exmix/errors.hpp"
#include "exmix/io.hpp"
#include "exmix/random.hpp"
#include "exmix/shuttle.hpp"
#include "lzw_encoder.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace exmix;
namespace fs = std::filesystem;

namespace {

std::string random_text(std::size_t n, std::size_t alphabet, std::uint64_t seed) {
  Rng rng(seed);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<char>('a' + rng() % alphabet);
  return s;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("exmix-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Space-separated rows in the raw archive layout: nine attributes, then the class.
std::string raw_rows(std::initializer_list<std::array<int, 10>> rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < 10; ++j) os << (j ? " " : "") << r[j];
    os << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("LZW known streams") {
  CHECK(decompress_lzw(std::string("\x1f\x9d\x90\x61\x00", 5)) == "a");
  CHECK(decompress_lzw(std::string("\x1f\x9d\x90", 3)).empty());
  CHECK(fixture::compress_lzw("a") == std::string("\x1f\x9d\x90\x61\x00", 5));
  CHECK_THROWS_AS(decompress_lzw("plain text"), ParseError);
  CHECK_THROWS_AS(decompress_lzw(std::string("\x1f\x9d\x85", 3)), ParseError);
}

TEST_CASE("LZW round trips through every code width") {
  for (const auto& [n, alphabet] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 1}, {300, 1}, {5000, 2},
                                    {80000, 26}, {700000, 3}}) {
    const auto text = random_text(n, alphabet, n);
    CHECK(decompress_lzw(fixture::compress_lzw(text)) == text);
  }
  const std::string bytes = [] {
    std::string s;
    for (int rep = 0; rep < 40; ++rep)
      for (int c = 0; c < 256; ++c) s += static_cast<char>(c ^ rep);
    return s;
  }();
  CHECK(decompress_lzw(fixture::compress_lzw(bytes)) == bytes);
}

TEST_CASE("LZW handles a table reset") {
  const auto text = random_text(1200000, 2, 7);
  CHECK(decompress_lzw(fixture::compress_lzw(text, true)) == text);
}

TEST_CASE("SHA-256 digests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("shuttle loading from a local cache") {
  const auto dir = fresh_dir("shuttle");
  CHECK_FALSE(shuttle_cached(dir));
  CHECK_THROWS_AS(load_shuttle(dir, false), NetworkError);

  const auto trn = raw_rows({{50, 21, 77, 0, 28, 0, 27, 48, 22, 2},
                             {55, 0, 92, 0, 0, 26, 36, 92, 56, 4},
                             {53, 0, 82, 0, 52, -5, 29, 30, 2, 1}});
  const auto tst = raw_rows({{37, 0, 79, 0, 12, 0, 42, 67, 26, 1}, {41, -3, 108, 0, 40, 4, 67, 68, 0, 5}});
  write_text_file(dir / "shuttle.trn.Z", fixture::compress_lzw(trn));
  write_text_file(dir / "shuttle.tst", tst);
  CHECK(shuttle_cached(dir));

  const auto data = load_shuttle(dir, false);
  CHECK_FALSE(data.downloaded);
  REQUIRE(data.attributes.n() == 3);
  CHECK(data.attributes.d() == 9);
  CHECK(data.classes == std::vector<std::size_t>{2, 4, 5});
  CHECK(data.attributes.rows(1, 0) == 55);
  CHECK(data.attributes.rows(2, 1) == -3);
  CHECK(fs::exists(dir / "shuttle.csv"));
  CHECK(fs::exists(dir / "shuttle.csv.sha256"));

  // the merged table is now served on its own
  fs::remove(dir / "shuttle.trn.Z");
  fs::remove(dir / "shuttle.tst");
  const auto again = load_shuttle(dir, false);
  CHECK(again.attributes.rows == data.attributes.rows);
  CHECK(again.classes == data.classes);

  auto csv = read_text_file(dir / "shuttle.csv");
  csv[csv.size() - 3] = csv[csv.size() - 3] == '7' ? '6' : '7';
  write_text_file(dir / "shuttle.csv", csv);
  CHECK_THROWS_AS(load_shuttle(dir, false), ChecksumMismatch);
  fs::remove_all(dir);
}

TEST_CASE("malformed raw shuttle rows") {
  const auto dir = fresh_dir("shuttle-bad");
  write_text_file(dir / "shuttle.trn", "1 2 3\n");
  write_text_file(dir / "shuttle.tst", raw_rows({{1, 2, 3, 4, 5, 6, 7, 8, 9, 2}}));
  CHECK_THROWS_AS(load_shuttle(dir, false), ParseError);
  fs::remove_all(dir);
}
