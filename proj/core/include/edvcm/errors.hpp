#pragma once

#include <stdexcept>
#include <string>

namespace edvcm {

// Malformed or inconsistent user input (files, flags, configs). CLI maps
// this to exit code 2; everything else thrown maps to exit code 3.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace edvcm
