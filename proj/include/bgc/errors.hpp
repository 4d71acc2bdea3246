#pragma once

#include <stdexcept>
#include <string>

namespace bgc {

// Exit-code class of an error (mirrors the CLI contract: 2 usage, 3 data,
// 4 numeric failure).
enum class ErrorClass : int { Usage = 2, Data = 3, Numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const char* kind, std::string msg)
        : std::runtime_error(std::string(kind) + ": " + msg),
          cls_(cls),
          kind_(kind) {}

    ErrorClass error_class() const { return cls_; }
    int exit_code() const { return static_cast<int>(cls_); }
    const char* kind() const { return kind_; }

private:
    ErrorClass cls_;
    const char* kind_;
};

#define BGC_DEFINE_ERROR(Name, Cls)                       \
    struct Name : ::bgc::Error {                          \
        explicit Name(std::string msg)                    \
            : ::bgc::Error(Cls, #Name, std::move(msg)) {} \
    }

// gridstore
BGC_DEFINE_ERROR(OutOfBounds, ErrorClass::Data);
BGC_DEFINE_ERROR(BadMagic, ErrorClass::Data);
BGC_DEFINE_ERROR(DimMismatch, ErrorClass::Data);
BGC_DEFINE_ERROR(TruncatedPayload, ErrorClass::Data);
BGC_DEFINE_ERROR(ParseError, ErrorClass::Data);
BGC_DEFINE_ERROR(DuplicateFix, ErrorClass::Data);
BGC_DEFINE_ERROR(MissingVariable, ErrorClass::Data);

// tracker
BGC_DEFINE_ERROR(EmptyHistory, ErrorClass::Data);
BGC_DEFINE_ERROR(FlatField, ErrorClass::Data);
BGC_DEFINE_ERROR(PlausibilityViolation, ErrorClass::Data);

// density
BGC_DEFINE_ERROR(EmptySupport, ErrorClass::Data);
BGC_DEFINE_ERROR(OutOfWindow, ErrorClass::Data);
BGC_DEFINE_ERROR(NonFiniteInput, ErrorClass::Numeric);
BGC_DEFINE_ERROR(SpecMismatch, ErrorClass::Data);

// correction
BGC_DEFINE_ERROR(ShapeMismatch, ErrorClass::Data);
BGC_DEFINE_ERROR(NonFiniteActivation, ErrorClass::Numeric);
BGC_DEFINE_ERROR(DivergedTraining, ErrorClass::Numeric);

// intensity
BGC_DEFINE_ERROR(IndivisibleWindow, ErrorClass::Data);
BGC_DEFINE_ERROR(RegionTooLarge, ErrorClass::Data);
BGC_DEFINE_ERROR(DegenerateFit, ErrorClass::Data);

// synthcyclone
BGC_DEFINE_ERROR(OutOfSpan, ErrorClass::Data);
BGC_DEFINE_ERROR(IndivisibleFactor, ErrorClass::Data);

// evalharness
BGC_DEFINE_ERROR(InvalidCoordinate, ErrorClass::Data);
BGC_DEFINE_ERROR(EmptySet, ErrorClass::Data);
BGC_DEFINE_ERROR(CoverageMismatch, ErrorClass::Data);

// cli
BGC_DEFINE_ERROR(OutputExists, ErrorClass::Data);
BGC_DEFINE_ERROR(ConfigError, ErrorClass::Usage);

#undef BGC_DEFINE_ERROR

}  // namespace bgc
