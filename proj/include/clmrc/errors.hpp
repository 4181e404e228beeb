#pragma once

#include <stdexcept>
#include <string>

namespace clmrc {

// Root of every error this library throws. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define CLMRC_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                           \
    public:                                                               \
        using Error::Error;                                               \
        const char* kind() const noexcept override { return #Name; }      \
    }

// numeric core
CLMRC_DEFINE_ERROR(DimensionError);
CLMRC_DEFINE_ERROR(InvalidMaskError);
CLMRC_DEFINE_ERROR(IndexError);
CLMRC_DEFINE_ERROR(DegenerateVectorError);
CLMRC_DEFINE_ERROR(DivergenceError);
CLMRC_DEFINE_ERROR(DeterminismError);

// configuration and text
CLMRC_DEFINE_ERROR(ConfigError);
CLMRC_DEFINE_ERROR(InputTooLongError);
CLMRC_DEFINE_ERROR(OffsetError);
CLMRC_DEFINE_ERROR(EncodingError);

// data
CLMRC_DEFINE_ERROR(ParseError);
CLMRC_DEFINE_ERROR(ValidationError);
CLMRC_DEFINE_ERROR(TranslationError);
CLMRC_DEFINE_ERROR(DataError);

// models
CLMRC_DEFINE_ERROR(PackingError);
CLMRC_DEFINE_ERROR(SupervisionError);
CLMRC_DEFINE_ERROR(DecodeError);
CLMRC_DEFINE_ERROR(SpanError);
CLMRC_DEFINE_ERROR(CheckpointError);

// evaluation
CLMRC_DEFINE_ERROR(ScoringError);

#undef CLMRC_DEFINE_ERROR

}  // namespace clmrc
