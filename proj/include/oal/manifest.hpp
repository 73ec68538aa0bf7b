#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "oal/corpus.hpp"

namespace oal {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Hash of the annotation-json serialization, for corpora that never touched
// disk.
std::string corpus_fingerprint(std::span<const Region> regions);

std::string utc_timestamp();

// Every run directory holds exactly one of these.
struct RunManifest {
  nlohmann::json config;
  std::string corpus_fingerprint;
  std::string version;
  std::uint64_t master_seed = 0;
  nlohmann::json outputs = nlohmann::json::object();
  std::string created;
  std::string command;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& dir);

}  // namespace oal
