#pragma once

#include <stdexcept>
#include <string>

namespace copysample {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COPYSAMPLE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

COPYSAMPLE_ERROR(RangeError);
COPYSAMPLE_ERROR(PreconditionError);
COPYSAMPLE_ERROR(DegenerateColumnError);
COPYSAMPLE_ERROR(StratificationError);
COPYSAMPLE_ERROR(ProtocolError);
COPYSAMPLE_ERROR(TransportError);
COPYSAMPLE_ERROR(UnsupportedError);
COPYSAMPLE_ERROR(FitError);
COPYSAMPLE_ERROR(TrainingError);
COPYSAMPLE_ERROR(MetricError);
COPYSAMPLE_ERROR(ComparisonError);
COPYSAMPLE_ERROR(ConfigError);
COPYSAMPLE_ERROR(FormatError);
COPYSAMPLE_ERROR(RefusalError);

#undef COPYSAMPLE_ERROR

}  // namespace copysample
