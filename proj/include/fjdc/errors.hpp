#pragma once

#include <stdexcept>
#include <string>

namespace fjdc {

// Every error raised by the library derives from fjdc::Error so callers can
// catch the whole family at once.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define FJDC_DEFINE_ERROR(Name)                    \
    class Name : public Error {                    \
    public:                                        \
        explicit Name(const std::string& what)     \
            : Error(#Name ": " + what) {}          \
    }

FJDC_DEFINE_ERROR(InvalidParameter);
FJDC_DEFINE_ERROR(DimensionMismatch);
FJDC_DEFINE_ERROR(DisconnectedNetwork);
FJDC_DEFINE_ERROR(NotPrimitive);
FJDC_DEFINE_ERROR(ConvergenceFailure);
FJDC_DEFINE_ERROR(NonVanishingSchedule);
FJDC_DEFINE_ERROR(NonUniformUnsupported);
FJDC_DEFINE_ERROR(AsymmetricWeights);
FJDC_DEFINE_ERROR(ConsensusInitialCondition);
FJDC_DEFINE_ERROR(NoStrictDrop);

#undef FJDC_DEFINE_ERROR

// Config errors carry the offending line (0 when not tied to a line) and field.
class ConfigError : public Error {
public:
    ConfigError(std::size_t line, std::string field, const std::string& what)
        : Error(format(line, field, what)), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(std::size_t line, const std::string& field, const std::string& what) {
        std::string msg = "ConfigError";
        if (line != 0) msg += " (line " + std::to_string(line) + ")";
        if (!field.empty()) msg += " [" + field + "]";
        return msg + ": " + what;
    }

    std::size_t line_;
    std::string field_;
};

}  // namespace fjdc
