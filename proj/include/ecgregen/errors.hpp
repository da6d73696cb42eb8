#pragma once

#include <stdexcept>
#include <string>

namespace ecgregen {

// Error taxonomy maps onto CLI exit codes:
//   ConfigError  -> 1 (usage / configuration)
//   DataError    -> 2 (parse, validation, format, integrity)
//   ServiceError -> 3 (external service failure)
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ecgregen
