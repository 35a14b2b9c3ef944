#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace nextvisit {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kSepId = 1;

// Row-major dense types, templated on the scalar so the same model code runs
// in float for training and in double for gradient checks.
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Process exit codes shared by every subcommand.
enum class ExitCode : int { Ok = 0, Usage = 2, Data = 3, Numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::Usage) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(what, ExitCode::Data) {}
};
struct ProvenanceError : Error {
  explicit ProvenanceError(const std::string& what) : Error(what, ExitCode::Data) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(what, ExitCode::Numeric) {}
};
struct UndefinedMetricError : Error {
  explicit UndefinedMetricError(const std::string& what) : Error(what, ExitCode::Data) {}
};

// Counter-based seed derivation: every random stream is a pure function of
// (master seed, stream name, index), so parallel and serial runs agree.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ hash_name(stream)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

/// Uniform draw in [0, 1) that does not depend on the standard library's
/// distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace nextvisit
