#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wdht {

// One b-bit code, packed LSB-first into 64-bit words: bit i lives in
// words[i / 64] at position (i % 64). Padding bits past b are always zero.
struct HashCode {
  uint32_t bits = 0;
  std::vector<uint64_t> words;

  bool get(uint32_t i) const { return (words[i / 64] >> (i % 64)) & 1ULL; }

  friend bool operator==(const HashCode&, const HashCode&) = default;
};

inline uint32_t words_per_code(uint32_t bits) { return (bits + 63) / 64; }

// Row-packed code database; all rows share the same bit width.
class CodeMatrix {
 public:
  CodeMatrix() = default;
  CodeMatrix(size_t count, uint32_t bits)
      : count_(count), bits_(bits), stride_(words_per_code(bits)),
        words_(count * stride_, 0) {}

  size_t count() const { return count_; }
  uint32_t bits() const { return bits_; }
  uint32_t stride() const { return stride_; }

  std::span<const uint64_t> row(size_t i) const {
    return {words_.data() + i * stride_, stride_};
  }
  std::span<uint64_t> row(size_t i) {
    return {words_.data() + i * stride_, stride_};
  }

  void set_row(size_t i, const HashCode& code);
  HashCode code(size_t i) const;

  friend bool operator==(const CodeMatrix&, const CodeMatrix&) = default;

 private:
  size_t count_ = 0;
  uint32_t bits_ = 0;
  uint32_t stride_ = 0;
  std::vector<uint64_t> words_;
};

// Threshold at 0.5; exactly 0.5 maps to bit 1. Throws NumericError on
// non-finite input.
HashCode binarize(std::span<const double> h1);

// bits01 holds one 0/1 byte per bit position.
HashCode pack(std::span<const uint8_t> bits01, uint32_t bits);
std::vector<uint8_t> unpack(const HashCode& code);

// Codes file: magic "WDHC", version u32 LE, count u64 LE, bits u32 LE, then
// count * ceil(bits/64) words u64 LE in sample order.
void save_codes(const std::string& path, const CodeMatrix& codes);
CodeMatrix load_codes(const std::string& path);

}  // namespace wdht
