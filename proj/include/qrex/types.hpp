#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qrex {

typedef double Real;
typedef std::complex<double> Cplx;

typedef Eigen::VectorXd Vec;
typedef Eigen::MatrixXd Mat;
typedef Eigen::VectorXcd CVec;
typedef Eigen::MatrixXcd CMat;
typedef Eigen::Matrix4cd Mat4c;

// Error kinds map onto CLI exit codes; see tools/qrex.cpp.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qrex
