#pragma once

#include <stdexcept>
#include <string>

namespace scenfuzz {

// Base of every recoverable error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SCENFUZZ_ERROR(Name)              \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

SCENFUZZ_ERROR(InfeasibleSample);
SCENFUZZ_ERROR(StaleFeedback);
SCENFUZZ_ERROR(UnknownLane);
SCENFUZZ_ERROR(MapError);
SCENFUZZ_ERROR(MeshTooFine);
SCENFUZZ_ERROR(EmptySampleSet);
SCENFUZZ_ERROR(IndexGap);
SCENFUZZ_ERROR(StorageFull);
SCENFUZZ_ERROR(UnknownDimension);
SCENFUZZ_ERROR(HashMismatch);
SCENFUZZ_ERROR(RowNotFound);
SCENFUZZ_ERROR(ConfigError);
SCENFUZZ_ERROR(SutUnreachable);
SCENFUZZ_ERROR(ProtocolError);

#undef SCENFUZZ_ERROR

}  // namespace scenfuzz
