#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace amfpmc {

using DrugIndex = std::int32_t;
using ClassId = std::int32_t;

/// Retrospective graphs reserve class 0 for "no interaction"; holdout graphs
/// use every class index for a real interaction type.
enum class Mode { Retrospective, Holdout };

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using SoftTarget = Vector<double>;

using Rng = std::mt19937_64;

// Uniform on [0, 1) from the top 53 bits; stable across standard libraries,
// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

}  // namespace amfpmc
