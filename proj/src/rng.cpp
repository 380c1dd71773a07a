#include "smcmc/rng.hpp"


namespace smcmc {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint32_t time_index, std::uint32_t stream_id)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      time_index_(time_index),
      stream_id_(stream_id) {}

Philox4x32::Block Philox4x32::encrypt(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void Philox4x32::refill() {
  const Block counter{static_cast<std::uint32_t>(block_counter_),
                      static_cast<std::uint32_t>(block_counter_ >> 32), time_index_, stream_id_};
  buffer_ = encrypt(counter, key_);
  ++block_counter_;
  cursor_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (cursor_ >= 4) refill();
  const std::uint64_t lo = buffer_[cursor_];
  const std::uint64_t hi = buffer_[cursor_ + 1];
  cursor_ += 2;
  return (hi << 32) | lo;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint32_t time_index, std::uint32_t stream_id)
    : engine_(seed, time_index, stream_id) {}

double RandomStream::normal() { return normal_(engine_); }

Vector RandomStream::normal_vector(Eigen::Index n) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal_(engine_);
  return z;
}

double RandomStream::uniform() { return uniform_(engine_); }

int RandomStream::uniform_index(int n) {
  std::uniform_int_distribution<int> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace smcmc
