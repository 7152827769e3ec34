#pragma once

#include <stdexcept>
#include <string>

namespace mssl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class SplitError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class AggregationError : public Error { using Error::Error; };
class SpecHashError : public Error { using Error::Error; };

}  // namespace mssl
