#pragma once

#include <stdexcept>
#include <string>

namespace frailtyfa {

// Errors carry the module that raised them so the CLI can print
// module-qualified messages. `validation` errors are problems with the
// caller's input (exit code 2); everything else is a runtime failure.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what, bool validation = false)
        : std::runtime_error(module + ": " + what),
          module_(std::move(module)),
          validation_(validation) {}

    const std::string& module() const noexcept { return module_; }
    bool is_validation() const noexcept { return validation_; }

private:
    std::string module_;
    bool validation_;
};

#define FRAILTYFA_ERROR(Name, validation)                                      \
    class Name : public Error {                                                \
    public:                                                                    \
        Name(std::string module, const std::string& what)                      \
            : Error(std::move(module), what, validation) {}                    \
    };

// input validation
FRAILTYFA_ERROR(ParseError, true)
FRAILTYFA_ERROR(SchemaError, true)
FRAILTYFA_ERROR(MissingColumn, true)
FRAILTYFA_ERROR(ValueError, true)
FRAILTYFA_ERROR(SpecError, true)

// numerical / runtime
FRAILTYFA_ERROR(DegenerateRecord, false)
FRAILTYFA_ERROR(DegenerateMargin, false)
FRAILTYFA_ERROR(InsufficientOverlap, false)
FRAILTYFA_ERROR(SingularMatrix, false)
FRAILTYFA_ERROR(ConvergenceFailure, false)
FRAILTYFA_ERROR(ConstantInput, false)
FRAILTYFA_ERROR(RankDeficient, false)
FRAILTYFA_ERROR(InsufficientData, false)
FRAILTYFA_ERROR(CohortMismatch, false)
FRAILTYFA_ERROR(IoError, false)

#undef FRAILTYFA_ERROR

} // namespace frailtyfa
