#pragma once

#include <stdexcept>
#include <string>

namespace abi_engine {

// Base for every domain error raised by the engine. `code()` is the stable
// machine-readable name surfaced in API error bodies.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string &message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string &code() const noexcept { return code_; }

private:
    std::string code_;
};

#define ABI_DEFINE_ERROR(Name)                                                 \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string &message) : Error(#Name, message) {}   \
    };

ABI_DEFINE_ERROR(OutOfTableRange)
ABI_DEFINE_ERROR(UnsupportedShape)
ABI_DEFINE_ERROR(UnknownAlternative)
ABI_DEFINE_ERROR(NotFlagged)
ABI_DEFINE_ERROR(MissingRating)
ABI_DEFINE_ERROR(AllZeroDifferences)
ABI_DEFINE_ERROR(EmptySample)
ABI_DEFINE_ERROR(DegenerateTable)
ABI_DEFINE_ERROR(ReferentialError)
ABI_DEFINE_ERROR(SchemaError)
ABI_DEFINE_ERROR(StorageError)
ABI_DEFINE_ERROR(CorruptLog)
ABI_DEFINE_ERROR(DuplicateError)

#undef ABI_DEFINE_ERROR

} // namespace abi_engine
