#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cidg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for invalid inputs, malformed files and numerical failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cidg
