#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "oal/manifest.hpp"

using namespace oal;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Sha256, FileMatchesBytes) {
  const auto path = std::filesystem::temp_directory_path() / "oal_sha_test.txt";
  std::ofstream(path, std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(path), sha256_hex("abc"));
  std::filesystem::remove(path);
  EXPECT_THROW(sha256_file(path), Error);
}

TEST(Fingerprint, StableAndSensitive) {
  const auto a = oal::testing::two_predicate_corpus(20, 2, 1);
  const auto b = oal::testing::two_predicate_corpus(20, 2, 2);
  EXPECT_EQ(corpus_fingerprint(a.regions()), corpus_fingerprint(a.regions()));
  EXPECT_NE(corpus_fingerprint(a.regions()), corpus_fingerprint(b.regions()));
}

TEST(Manifest, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "oal_manifest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunManifest m;
  m.config = {{"master_seed", 4}};
  m.corpus_fingerprint = "abc";
  m.version = "1";
  m.master_seed = 4;
  m.outputs = {{"metrics.csv", "00"}};
  m.created = utc_timestamp();
  m.command = "oal run";
  write_manifest(m, dir);
  const auto back = read_manifest(dir);
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_THROW(read_manifest(dir / "nowhere"), CorpusError);
  std::filesystem::remove_all(dir);
}

TEST(Manifest, TimestampShape) {
  const auto t = utc_timestamp();
  ASSERT_EQ(t.size(), 20u);
  EXPECT_EQ(t[10], 'T');
  EXPECT_EQ(t.back(), 'Z');
}
