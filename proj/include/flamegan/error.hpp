#pragma once

#include <stdexcept>
#include <string>

namespace flamegan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FLAMEGAN_DEFINE_ERROR(Name)                \
  class Name : public Error {                      \
   public:                                         \
    explicit Name(const std::string& what)         \
        : Error(std::string(#Name ": ") + what) {} \
  }

FLAMEGAN_DEFINE_ERROR(ManifestError);
FLAMEGAN_DEFINE_ERROR(FormatError);
FLAMEGAN_DEFINE_ERROR(IoError);
FLAMEGAN_DEFINE_ERROR(EmptyInput);
FLAMEGAN_DEFINE_ERROR(DimensionError);
FLAMEGAN_DEFINE_ERROR(StateError);
FLAMEGAN_DEFINE_ERROR(IndexError);
FLAMEGAN_DEFINE_ERROR(BatchError);
FLAMEGAN_DEFINE_ERROR(ParamError);
FLAMEGAN_DEFINE_ERROR(SpecError);
FLAMEGAN_DEFINE_ERROR(SplitError);
FLAMEGAN_DEFINE_ERROR(ConfigError);

#undef FLAMEGAN_DEFINE_ERROR

}  // namespace flamegan
