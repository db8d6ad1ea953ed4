#include "smoothgnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "smoothgnn/errors.hpp"

namespace sg {

namespace {
constexpr char kMagic[4] = {'C', 'S', 'G', 'N'};
constexpr uint16_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params, uint64_t spec_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  auto put = [&](const void* p, size_t len) { out.write(static_cast<const char*>(p), len); };
  put(kMagic, 4);
  put(&kVersion, sizeof kVersion);
  put(&spec_hash, sizeof spec_hash);
  const uint32_t count = static_cast<uint32_t>(params.size());
  put(&count, sizeof count);
  for (const auto& [name, p] : params.items()) {
    const uint32_t len = static_cast<uint32_t>(name.size());
    put(&len, sizeof len);
    put(name.data(), len);
    const uint32_t rank = static_cast<uint32_t>(p->shape.size());
    put(&rank, sizeof rank);
    for (int64_t d : p->shape) put(&d, sizeof d);
    put(p->v.data(), p->v.size() * sizeof(double));
  }
  if (!out) throw ParseError("short write on checkpoint: " + path);
}

void load_checkpoint(const std::string& path, ParamStore& params, uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  auto get = [&](void* p, size_t len) {
    in.read(static_cast<char*>(p), len);
    if (!in) throw ParseError("checkpoint truncated: " + path);
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError("bad checkpoint magic: " + path);
  uint16_t version = 0;
  get(&version, sizeof version);
  if (version != kVersion) throw ParseError("unknown checkpoint version");
  uint64_t spec_hash = 0;
  get(&spec_hash, sizeof spec_hash);
  if (spec_hash != expected_hash) {
    throw ValidationError("checkpoint spec hash mismatch (checkpoint was written by a "
                          "different model spec)");
  }
  uint32_t count = 0;
  get(&count, sizeof count);
  if (count != params.size()) throw ValidationError("checkpoint parameter count mismatch");
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t len = 0;
    get(&len, sizeof len);
    std::string name(len, '\0');
    get(name.data(), len);
    const auto& [expect_name, p] = params.items()[i];
    if (name != expect_name) {
      throw ValidationError("checkpoint parameter order mismatch: got " + name + ", expected " +
                            expect_name);
    }
    uint32_t rank = 0;
    get(&rank, sizeof rank);
    if (rank != p->shape.size()) throw ValidationError("checkpoint rank mismatch for " + name);
    for (uint32_t r = 0; r < rank; ++r) {
      int64_t d = 0;
      get(&d, sizeof d);
      if (d != p->shape[r]) throw ValidationError("checkpoint shape mismatch for " + name);
    }
    get(p->v.data(), p->v.size() * sizeof(double));
  }
}

}  // namespace sg
