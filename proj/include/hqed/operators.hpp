#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace hqed {

using complexd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Ordered tensor-product structure of the composite Hilbert space.
//
// The canonical subsystem order used throughout is
//   (DQD, tr, Sq, 50)
// i.e. charge qubit, transmon, high-impedance array resonator, readout
// resonator. Every module builds on this one ordering.
struct SpaceLayout {
  std::vector<int> dims;
  std::vector<std::string> labels;

  int total_dim() const;
  bool has(const std::string& label) const;
  int index_of(const std::string& label) const;  // throws config_error if unknown
  void validate() const;                         // dims >= 1, labels unique
};

// Dense complex square matrix tagged with the layout it acts on.
struct OperatorMatrix {
  SpaceLayout layout;
  Matrix m;

  int dim() const { return static_cast<int>(m.rows()); }
  // max_ij |M - M^dag|
  double hermiticity_error() const;
  bool is_hermitian(double tol = 1e-12) const;
};

enum class Pauli { X, Y, Z, Plus, Minus };

SpaceLayout single_factor(int dim, const std::string& label = "");

// <n|a|n+1> = sqrt(n+1), zero elsewhere. Requires dim >= 2.
OperatorMatrix annihilation(int dim);

// 2x2 qubit operators; basis order (excited, ground), sigma_z = diag(1,-1),
// sigma_plus = (x + i y)/2 = |e><g|.
OperatorMatrix pauli(Pauli which);

OperatorMatrix identity(int dim);

Matrix kron(const Matrix& a, const Matrix& b);

// Lift a single-factor operator to the full space: I x ... x op x ... x I.
OperatorMatrix embed(const OperatorMatrix& op, const std::string& target,
                     const SpaceLayout& layout);

}  // namespace hqed
