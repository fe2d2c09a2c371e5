#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace lecam {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LECAM_DEFINE_ERROR(Name)        \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  };

LECAM_DEFINE_ERROR(InvalidParams)
LECAM_DEFINE_ERROR(AbsoluteContinuityViolation)
LECAM_DEFINE_ERROR(SizeLimitExceeded)
LECAM_DEFINE_ERROR(NoArbitrageViolation)
LECAM_DEFINE_ERROR(InvalidState)
LECAM_DEFINE_ERROR(NotACall)
LECAM_DEFINE_ERROR(PathDependenceUnsupported)
LECAM_DEFINE_ERROR(UnsupportedTest)
LECAM_DEFINE_ERROR(InvalidTangent)
LECAM_DEFINE_ERROR(ThetaOutOfRange)
LECAM_DEFINE_ERROR(LemmaHypothesisViolated)
LECAM_DEFINE_ERROR(SpecError)

#undef LECAM_DEFINE_ERROR

namespace limits {

// 3^14: admits binary lattices up to N = 22 and ternary up to N = 14.
inline constexpr std::uint64_t kDefaultMaxPaths = 4782969;
inline constexpr std::uint64_t kDefaultMaxProductOutcomes = std::uint64_t{1} << 24;
inline constexpr std::uint64_t kDefaultMaxLawAtoms = 20000000;

/// Path-enumeration cap; LECAM_MAX_PATHS overrides the default.
inline std::uint64_t max_paths() {
  if (const char* env = std::getenv("LECAM_MAX_PATHS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return kDefaultMaxPaths;
}

}  // namespace limits
}  // namespace lecam
