#include "cogeffort/manifest.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "cogeffort/error.hpp"

namespace cogeffort {

namespace {

struct DigestContext {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  DigestContext() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest initialisation failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
      throw std::runtime_error("sha256: finalisation failed");
    }
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }
};

nlohmann::json digests_json(const std::map<std::string, std::string>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

}  // namespace

std::string sha256_hex(std::istream& in) {
  DigestContext d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string sha256_hex(const std::string& bytes) {
  DigestContext d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path);
  return sha256_hex(in);
}

void RunManifest::record(StageRecord stage) {
  for (auto& s : stages) {
    if (s.name == stage.name) {
      s = std::move(stage);
      return;
    }
  }
  stages.push_back(std::move(stage));
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stages) {
    st.push_back({{"name", s.name},
                  {"inputs", digests_json(s.inputs)},
                  {"outputs", digests_json(s.outputs)},
                  {"wall_seconds", s.wall_seconds}});
  }
  return {{"version", version}, {"seed", seed}, {"config", config}, {"stages", st}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.version = j.at("version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = j.at("config");
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
    r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
    r.wall_seconds = s.at("wall_seconds").get<double>();
    m.stages.push_back(std::move(r));
  }
  return m;
}

std::map<std::string, std::string> RunManifest::output_digests() const {
  std::map<std::string, std::string> out;
  for (const auto& s : stages) {
    for (const auto& [file, digest] : s.outputs) out[file] = digest;
  }
  return out;
}

std::vector<std::string> RunManifest::verify(const std::string& dir) const {
  std::vector<std::string> bad;
  for (const auto& [file, digest] : output_digests()) {
    const auto path = (std::filesystem::path(dir) / file).string();
    if (!std::filesystem::exists(path) || sha256_file(path) != digest) bad.push_back(file);
  }
  return bad;
}

RunManifest load_manifest(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / kManifestFile;
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path);
  try {
    return RunManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt " + path.string() + ": " + e.what());
  }
}

void save_manifest(const std::string& dir, const RunManifest& manifest) {
  std::ofstream out(std::filesystem::path(dir) / kManifestFile);
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
}

}  // namespace cogeffort
