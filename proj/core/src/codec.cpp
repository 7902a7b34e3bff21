#include "wdht/codec.hpp"

#include <cmath>
#include <fstream>

#include "wdht/binio.hpp"
#include "wdht/errors.hpp"

namespace wdht {

namespace {
constexpr uint32_t kCodesVersion = 1;
constexpr char kCodesMagic[] = "WDHC";
}  // namespace

void CodeMatrix::set_row(size_t i, const HashCode& code) {
  if (code.bits != bits_) {
    throw DataError("code bit width " + std::to_string(code.bits) +
                    " does not match matrix width " + std::to_string(bits_));
  }
  auto dst = row(i);
  for (uint32_t w = 0; w < stride_; ++w) dst[w] = code.words[w];
}

HashCode CodeMatrix::code(size_t i) const {
  HashCode out;
  out.bits = bits_;
  auto src = row(i);
  out.words.assign(src.begin(), src.end());
  return out;
}

HashCode binarize(std::span<const double> h1) {
  HashCode out;
  out.bits = static_cast<uint32_t>(h1.size());
  out.words.assign(words_per_code(out.bits), 0);
  for (size_t i = 0; i < h1.size(); ++i) {
    if (!std::isfinite(h1[i])) {
      throw NumericError("non-finite activation at bit " + std::to_string(i));
    }
    if (h1[i] >= 0.5) out.words[i / 64] |= 1ULL << (i % 64);
  }
  return out;
}

HashCode pack(std::span<const uint8_t> bits01, uint32_t bits) {
  if (bits01.size() != bits) {
    throw DataError("bit vector length " + std::to_string(bits01.size()) +
                    " does not match declared width " + std::to_string(bits));
  }
  HashCode out;
  out.bits = bits;
  out.words.assign(words_per_code(bits), 0);
  for (uint32_t i = 0; i < bits; ++i) {
    if (bits01[i]) out.words[i / 64] |= 1ULL << (i % 64);
  }
  return out;
}

std::vector<uint8_t> unpack(const HashCode& code) {
  std::vector<uint8_t> out(code.bits);
  for (uint32_t i = 0; i < code.bits; ++i) out[i] = code.get(i) ? 1 : 0;
  return out;
}

void save_codes(const std::string& path, const CodeMatrix& codes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  binio::write_magic(out, kCodesMagic);
  binio::write_u32(out, kCodesVersion);
  binio::write_u64(out, codes.count());
  binio::write_u32(out, codes.bits());
  for (size_t i = 0; i < codes.count(); ++i) {
    for (uint64_t w : codes.row(i)) binio::write_u64(out, w);
  }
  if (!out) throw DataError("write failed: " + path);
}

CodeMatrix load_codes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  binio::expect_magic(in, kCodesMagic, path);
  const uint32_t version = binio::read_u32(in, path + " version");
  if (version != kCodesVersion) {
    throw DataError("unsupported codes file version " + std::to_string(version) +
                    " in " + path);
  }
  const uint64_t count = binio::read_u64(in, path + " count");
  const uint32_t bits = binio::read_u32(in, path + " bits");
  if (bits == 0) throw DataError("zero bit width in " + path);
  CodeMatrix codes(count, bits);
  for (size_t i = 0; i < count; ++i) {
    auto dst = codes.row(i);
    for (uint32_t w = 0; w < codes.stride(); ++w) {
      dst[w] = binio::read_u64(in, path + " code words");
    }
  }
  return codes;
}

}  // namespace wdht
