#pragma once

#include <stdexcept>
#include <string>

namespace exset {

// Base for failures of the numerical machinery (CLI exit code 3).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A Cholesky pivot was <= 0 or below the 1e-300 floor.
class not_positive_definite : public numeric_error {
 public:
  not_positive_definite(int pivot_index, double pivot_value)
      : numeric_error("matrix not positive definite at pivot " +
                      std::to_string(pivot_index) + " (value " +
                      std::to_string(pivot_value) + ")"),
        pivot(pivot_index),
        value(pivot_value) {}
  int pivot;
  double value;
};

// Integration bounds with a_i >= b_i.
class empty_interval : public numeric_error {
 public:
  explicit empty_interval(int index)
      : numeric_error("empty integration interval at index " +
                      std::to_string(index)),
        index(index) {}
  int index;
};

// Truncation interval carries less than 1e-300 probability mass.
class interval_mass_underflow : public numeric_error {
 public:
  interval_mass_underflow()
      : numeric_error("truncated normal interval mass underflow") {}
};

// MCMC chain stopped moving.
class chain_divergence : public numeric_error {
 public:
  explicit chain_divergence(double rate)
      : numeric_error("MCMC acceptance rate " + std::to_string(rate) +
                      " below 1% over 10000 steps"),
        acceptance_rate(rate) {}
  double acceptance_rate;
};

// Malformed user input: files, formats, flag combinations (CLI exit code 2).
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace exset
