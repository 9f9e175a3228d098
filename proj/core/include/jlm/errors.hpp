#pragma once

#include <stdexcept>
#include <string>

namespace jlm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define JLM_DECLARE_ERROR(Name)                 \
  class Name : public Error {                   \
   public:                                      \
    explicit Name(const std::string& what)      \
        : Error(std::string(#Name ": ") + what) {} \
  }

// rotmath
JLM_DECLARE_ERROR(DegenerateInput);
JLM_DECLARE_ERROR(InvalidRotation);
// skeleton
JLM_DECLARE_ERROR(TopologyError);
// dataio
JLM_DECLARE_ERROR(FormatError);
JLM_DECLARE_ERROR(VersionError);
JLM_DECLARE_ERROR(UnknownKind);
JLM_DECLARE_ERROR(SequenceTooShort);
// nnops
JLM_DECLARE_ERROR(ShapeMismatch);
JLM_DECLARE_ERROR(GraphError);
JLM_DECLARE_ERROR(MissingGrad);
// losses / metrics
JLM_DECLARE_ERROR(WindowTooShort);
JLM_DECLARE_ERROR(LengthMismatch);
// runtime
JLM_DECLARE_ERROR(SchemaError);
JLM_DECLARE_ERROR(DataError);
JLM_DECLARE_ERROR(NonFiniteLoss);

#undef JLM_DECLARE_ERROR

}  // namespace jlm
