#pragma once

#include <stdexcept>
#include <string>

namespace hgs {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { kConfig, kData, kInfeasibleRate, kCorruptStream };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define HGS_DEFINE_ERROR(Name, Category)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what)                               \
        : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {} \
  };

// ply_io
HGS_DEFINE_ERROR(ParseError, kData)
HGS_DEFINE_ERROR(SchemaError, kData)
HGS_DEFINE_ERROR(DataError, kData)
HGS_DEFINE_ERROR(IoError, kData)
// quantizers
HGS_DEFINE_ERROR(RangeError, kData)
HGS_DEFINE_ERROR(DegenerateRangeError, kData)
HGS_DEFINE_ERROR(CodeError, kData)
HGS_DEFINE_ERROR(SingularFitError, kData)
// geometry
HGS_DEFINE_ERROR(InsufficientPointsError, kData)
HGS_DEFINE_ERROR(DegenerateCloudError, kData)
HGS_DEFINE_ERROR(PruneAllError, kData)
HGS_DEFINE_ERROR(ScheduleError, kConfig)
// latent
HGS_DEFINE_ERROR(InsufficientDataError, kData)
HGS_DEFINE_ERROR(DivergenceError, kData)
HGS_DEFINE_ERROR(ShapeError, kData)
// codec / bitstream
HGS_DEFINE_ERROR(DuplicateError, kData)
HGS_DEFINE_ERROR(CorruptStreamError, kCorruptStream)
HGS_DEFINE_ERROR(ConsistencyError, kData)
// ratecontrol / cli
HGS_DEFINE_ERROR(InfeasibleRateError, kInfeasibleRate)
HGS_DEFINE_ERROR(ConfigError, kConfig)

#undef HGS_DEFINE_ERROR

}  // namespace hgs
