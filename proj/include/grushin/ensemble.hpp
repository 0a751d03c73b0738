#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "grushin/rng.hpp"

namespace grushin {

/// Samples per RNG chunk. Chunk c of a run draws from stream_index + c, so
/// results depend on the chunk layout and never on the worker count.
inline constexpr std::size_t kChunkSize = 4096;

/// Monte Carlo controls shared by every estimator.
struct McOptions {
  std::size_t n_samples = 100000;
  std::size_t grid_n = 256;
  RngStream rng{};
  unsigned workers = 1;
};

/// Running mean/variance of positive quantities supplied as logarithms.
///
/// Values are kept relative to the running maximum so that integrands like
/// exp(-50/T) with T = 0.01 neither underflow nor lose relative precision.
class LogMeanAccumulator {
 public:
  void add(double log_value) {
    ++n_;
    if (!(log_value > -std::numeric_limits<double>::infinity())) return;
    if (log_value > max_) {
      if (s1_ > 0.0) {
        const double r = std::exp(max_ - log_value);
        s1_ *= r;
        s2_ *= r * r;
      }
      max_ = log_value;
    }
    const double e = std::exp(log_value - max_);
    s1_ += e;
    s2_ += e * e;
  }

  void merge(const LogMeanAccumulator& other) {
    if (other.n_ == 0) return;
    if (other.s1_ > 0.0) {
      if (s1_ == 0.0) {
        max_ = other.max_;
        s1_ = other.s1_;
        s2_ = other.s2_;
      } else if (other.max_ > max_) {
        const double r = std::exp(max_ - other.max_);
        s1_ = s1_ * r + other.s1_;
        s2_ = s2_ * r * r + other.s2_;
        max_ = other.max_;
      } else {
        const double r = std::exp(other.max_ - max_);
        s1_ += other.s1_ * r;
        s2_ += other.s2_ * r * r;
      }
    }
    n_ += other.n_;
  }

  std::size_t count() const { return n_; }

  /// log of the sample mean; -inf when every sample was zero.
  double log_mean() const {
    if (n_ == 0 || s1_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(s1_ / static_cast<double>(n_));
  }

  /// Standard error divided by the mean (sample sd with n - 1).
  double relative_stderr() const {
    if (n_ < 2 || s1_ == 0.0) return 0.0;
    const double n = static_cast<double>(n_);
    const double var = std::max(0.0, (s2_ - s1_ * s1_ / n) / (n - 1.0));
    return std::sqrt(var / n) / (s1_ / n);
  }

  /// log of the largest single sample.
  double log_max() const { return max_; }

 private:
  std::size_t n_ = 0;
  double max_ = -std::numeric_limits<double>::infinity();
  double s1_ = 0.0;
  double s2_ = 0.0;
};

/// Plain mean/variance accumulator (Chan merge) for signed quantities.
class MomentAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const MomentAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * nb / (na + nb);
    m2_ += other.m2_ + delta * delta * na * nb / (na + nb);
    n_ += other.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Runs `fn(chunk_rng, begin, count)` over fixed-size chunks of `n_samples`
/// and merges the per-chunk accumulators in chunk order.
template <class Acc, class ChunkFn>
Acc run_chunked(std::size_t n_samples, const RngStream& rng, unsigned workers, ChunkFn&& fn) {
  const std::size_t n_chunks = (n_samples + kChunkSize - 1) / kChunkSize;
  std::vector<Acc> parts(n_chunks);
  auto do_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kChunkSize;
    const std::size_t count = std::min(kChunkSize, n_samples - begin);
    parts[c] = fn(rng.substream(c), begin, count);
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n_chunks));
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) do_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < n_chunks; c = next++) {
          try {
            do_chunk(c);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  Acc total{};
  for (const auto& part : parts) total.merge(part);
  return total;
}

}  // namespace grushin
