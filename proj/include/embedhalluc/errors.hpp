#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace embedhalluc {

// Root of every error thrown by the library. The CLI maps subclasses to exit
// codes through category().
class Error : public std::runtime_error {
public:
    enum class Category { config, data, training };

    explicit Error(const std::string& what, Category category = Category::training)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

#define EMBEDHALLUC_DEFINE_ERROR(Name, Cat)                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(what, Category::Cat) {} \
    }

EMBEDHALLUC_DEFINE_ERROR(DimensionError, training);
EMBEDHALLUC_DEFINE_ERROR(IndexError, training);
EMBEDHALLUC_DEFINE_ERROR(DistributionError, training);
EMBEDHALLUC_DEFINE_ERROR(CapabilityError, training);
EMBEDHALLUC_DEFINE_ERROR(DegenerateBatchError, training);
EMBEDHALLUC_DEFINE_ERROR(DependencyError, training);
EMBEDHALLUC_DEFINE_ERROR(CoverageError, data);
EMBEDHALLUC_DEFINE_ERROR(DataError, data);
EMBEDHALLUC_DEFINE_ERROR(LabelError, data);
EMBEDHALLUC_DEFINE_ERROR(CapacityError, data);
EMBEDHALLUC_DEFINE_ERROR(ContaminationError, data);
EMBEDHALLUC_DEFINE_ERROR(IoError, data);
EMBEDHALLUC_DEFINE_ERROR(SpecError, config);
EMBEDHALLUC_DEFINE_ERROR(ConfigError, config);

#undef EMBEDHALLUC_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")", Category::data), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace embedhalluc
