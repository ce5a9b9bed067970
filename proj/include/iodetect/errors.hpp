#pragma once

#include <stdexcept>
#include <string>

namespace iodetect {

/// Base of every error raised by the library. The CLI maps these to a
/// one-line diagnostic and a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define IODETECT_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    using Error::Error;                                              \
    const char* kind() const noexcept override { return #Name; }     \
  }

// ingest
IODETECT_DEFINE_ERROR(FormatError);
IODETECT_DEFINE_ERROR(MixedDeviceError);
IODETECT_DEFINE_ERROR(OrderError);
IODETECT_DEFINE_ERROR(DuplicateApError);

// distance / index
IODETECT_DEFINE_ERROR(EmptyFingerprintError);
IODETECT_DEFINE_ERROR(DisjointError);
IODETECT_DEFINE_ERROR(IndexRangeError);

// clustering / graph
IODETECT_DEFINE_ERROR(ConfigError);
IODETECT_DEFINE_ERROR(CoverageError);
IODETECT_DEFINE_ERROR(NodeRangeError);

// features / learner
IODETECT_DEFINE_ERROR(RankDeficiencyError);
IODETECT_DEFINE_ERROR(DegenerateLabelsError);
IODETECT_DEFINE_ERROR(InsufficientDataError);
IODETECT_DEFINE_ERROR(FeatureMismatchError);

// evaluation
IODETECT_DEFINE_ERROR(NoLabelsError);
IODETECT_DEFINE_ERROR(NoTransitionsError);
IODETECT_DEFINE_ERROR(SingleLocationError);
IODETECT_DEFINE_ERROR(EmptyPrefixError);

#undef IODETECT_DEFINE_ERROR

}  // namespace iodetect
