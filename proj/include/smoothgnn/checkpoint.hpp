#pragma once

#include <cstdint>
#include <string>

#include "smoothgnn/params.hpp"

namespace sg {

// Binary checkpoint: magic "CSGN", version u16, spec hash u64, parameter
// count u32, then per parameter (name length u32, name bytes, rank u32,
// dims i64..., row-major doubles). Native byte order.
void save_checkpoint(const std::string& path, const ParamStore& params, uint64_t spec_hash);

// Restores values into an already-built ParamStore with matching names and
// shapes. Throws ParseError on corrupt/truncated files and ValidationError
// when the stored spec hash differs from expected_hash.
void load_checkpoint(const std::string& path, ParamStore& params, uint64_t expected_hash);

}  // namespace sg
