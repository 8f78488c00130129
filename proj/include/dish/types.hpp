#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dish {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Error type thrown by all validating constructors and operations.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dish
