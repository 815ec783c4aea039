#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cosparse {

// Every failure carries a stable machine-readable category so the CLI can
// print "error category=<cat>: <message>" and exit nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(msg), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

#define COSPARSE_DEFINE_ERROR(Name, cat)                                      \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& msg) : Error(cat, msg) {}            \
    };

COSPARSE_DEFINE_ERROR(InvalidArgument, "invalid-argument")
COSPARSE_DEFINE_ERROR(RankDeficient, "rank-deficient")
COSPARSE_DEFINE_ERROR(NumericalFailure, "numerical-failure")
COSPARSE_DEFINE_ERROR(DivergenceError, "divergence")
COSPARSE_DEFINE_ERROR(ParseError, "parse-error")
COSPARSE_DEFINE_ERROR(SchemaError, "schema-error")
COSPARSE_DEFINE_ERROR(EmptyData, "empty-data")
COSPARSE_DEFINE_ERROR(UndefinedMetric, "undefined-metric")
COSPARSE_DEFINE_ERROR(ProtocolError, "protocol-error")
COSPARSE_DEFINE_ERROR(ConfigError, "config-error")
COSPARSE_DEFINE_ERROR(IoError, "io-error")

#undef COSPARSE_DEFINE_ERROR

}  // namespace cosparse
