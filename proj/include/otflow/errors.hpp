#pragma once

#include <stdexcept>
#include <string>

namespace otflow {

// Failure class decides the CLI exit code: validation/io -> 1, numeric -> 2.
enum class ErrorCategory { validation, numeric, io };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const noexcept { return cat_; }

private:
    ErrorCategory cat_;
};

#define OTFLOW_DEFINE_ERROR(Name, Cat)                           \
    class Name : public Error {                                  \
    public:                                                      \
        explicit Name(const std::string& msg)                    \
            : Error(ErrorCategory::Cat, std::string(#Name ": ") + msg) {} \
    }

OTFLOW_DEFINE_ERROR(DimMismatch, validation);
OTFLOW_DEFINE_ERROR(TimeOutOfRange, validation);
OTFLOW_DEFINE_ERROR(BadReparameterization, validation);
OTFLOW_DEFINE_ERROR(EmptyInput, validation);
OTFLOW_DEFINE_ERROR(ShapeMismatch, validation);
OTFLOW_DEFINE_ERROR(TooFewSeeds, validation);
OTFLOW_DEFINE_ERROR(TooFewCheckpoints, validation);
OTFLOW_DEFINE_ERROR(ParseError, validation);
OTFLOW_DEFINE_ERROR(UnknownKey, validation);
OTFLOW_DEFINE_ERROR(RangeError, validation);

OTFLOW_DEFINE_ERROR(NotSpd, numeric);
OTFLOW_DEFINE_ERROR(NoConvergence, numeric);
OTFLOW_DEFINE_ERROR(NonFiniteState, numeric);
OTFLOW_DEFINE_ERROR(NonFiniteLoss, numeric);
OTFLOW_DEFINE_ERROR(SingularInterpolation, numeric);

OTFLOW_DEFINE_ERROR(IoError, io);
OTFLOW_DEFINE_ERROR(FormatError, io);

#undef OTFLOW_DEFINE_ERROR

}  // namespace otflow
