#include "cli_common.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>

#include <openssl/evp.h>
#include <unistd.h>

#include <json.hpp>

#include "xarb/error.hpp"

namespace xarb::cli {

namespace fs = std::filesystem;

unsigned Globals::resolved_threads() const {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("XARB_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("XARB_THREADS must be a positive integer, got '") + env + "'");
  }
  return 0;
}

OutputStage::OutputStage(fs::path out_dir) : out_dir_(std::move(out_dir)) {
  if (out_dir_.empty()) throw ConfigError("missing output directory");
  if (fs::exists(out_dir_) && !fs::is_directory(out_dir_)) {
    throw ConfigError(out_dir_.string() + " exists and is not a directory");
  }
  fs::path parent = fs::absolute(out_dir_).parent_path();
  fs::create_directories(parent);
  std::random_device rd;
  const std::string tag = std::to_string(::getpid()) + "-" + std::to_string(rd());
  stage_ = parent / (".xarb-stage-" + out_dir_.filename().string() + "-" + tag);
  fs::create_directories(stage_);
}

OutputStage::~OutputStage() {
  std::error_code ec;
  fs::remove_all(stage_, ec);
}

fs::path OutputStage::file(const std::string& name) {
  names_.push_back(name);
  return stage_ / name;
}

void OutputStage::write_text(const std::string& name, const std::string& text) {
  std::ofstream f(file(name), std::ios::binary);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  f.flush();
  if (!f) throw DataError("cannot write " + name);
}

void OutputStage::commit(const RunInfo& info, const Globals& g) {
  nlohmann::ordered_json m;
  m["tool"] = "xarb";
  m["version"] = kToolVersion;
  m["subcommand"] = info.subcommand;
  m["argv"] = g.argv;
  m["configs"] = info.configs;
  m["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [role, path] : info.inputs) {
    m["inputs"][role] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  if (info.seed) {
    m["seed"] = *info.seed;
  } else {
    m["seed"] = nullptr;
  }
  m["threads"] = g.resolved_threads();
  m["strict"] = g.strict;
  m["started_at"] = iso_utc(info.started);
  m["outputs"] = nlohmann::ordered_json::array();
  for (const auto& name : names_) {
    const fs::path p = stage_ / name;
    if (!fs::exists(p)) throw std::logic_error("registered output was not written: " + name);
    m["outputs"].push_back({{"file", name}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  m["finished_at"] = iso_utc(std::chrono::system_clock::now());
  {
    std::ofstream f(stage_ / "manifest.json", std::ios::binary);
    f << m.dump(2) << '\n';
    f.flush();
    if (!f) throw DataError("cannot write manifest.json");
  }
  fs::create_directories(out_dir_);
  for (const auto& name : names_) fs::rename(stage_ / name, out_dir_ / name);
  fs::rename(stage_ / "manifest.json", out_dir_ / "manifest.json");
  committed_ = true;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string iso_utc(std::chrono::system_clock::time_point t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace xarb::cli
