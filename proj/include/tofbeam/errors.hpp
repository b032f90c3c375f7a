#pragma once

#include <stdexcept>
#include <string>

namespace tofbeam {

/// Invalid user input (bad parameters, malformed files, violated preconditions).
class invalid_input : public std::invalid_argument {
public:
  explicit invalid_input(const std::string& msg) : std::invalid_argument(msg) {}
};

/// File I/O failure (cannot open, read, or write a path).
class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-convergent quadrature, singular matrix, fit divergence).
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tofbeam
