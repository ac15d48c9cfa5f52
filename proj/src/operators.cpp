#include "hqed/operators.hpp"

#include "hqed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hqed {

int SpaceLayout::total_dim() const {
  int total = 1;
  for (int d : dims) total *= d;
  return total;
}

bool SpaceLayout::has(const std::string& label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

int SpaceLayout::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end())
    throw config_error("unknown subsystem label '" + label + "'");
  return static_cast<int>(it - labels.begin());
}

void SpaceLayout::validate() const {
  if (dims.size() != labels.size())
    throw config_error("layout dims/labels size mismatch");
  for (int d : dims)
    if (d < 1) throw config_error("layout dimension must be >= 1");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size())
    throw config_error("layout labels must be unique");
}

double OperatorMatrix::hermiticity_error() const {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool OperatorMatrix::is_hermitian(double tol) const {
  return hermiticity_error() <= tol;
}

SpaceLayout single_factor(int dim, const std::string& label) {
  return SpaceLayout{{dim}, {label}};
}

OperatorMatrix annihilation(int dim) {
  if (dim < 2) throw config_error("annihilation: dimension must be >= 2");
  Matrix a = Matrix::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) a(n, n + 1) = std::sqrt(double(n + 1));
  return {single_factor(dim, "fock"), std::move(a)};
}

OperatorMatrix pauli(Pauli which) {
  Matrix m = Matrix::Zero(2, 2);
  const complexd i(0.0, 1.0);
  switch (which) {
    case Pauli::X: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case Pauli::Y: m(0, 1) = -i;  m(1, 0) = i;   break;
    case Pauli::Z: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    case Pauli::Plus:  m(0, 1) = 1.0; break;
    case Pauli::Minus: m(1, 0) = 1.0; break;
  }
  return {single_factor(2, "qubit"), std::move(m)};
}

OperatorMatrix identity(int dim) {
  if (dim < 1) throw config_error("identity: dimension must be >= 1");
  return {single_factor(dim, "id"), Matrix::Identity(dim, dim)};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

OperatorMatrix embed(const OperatorMatrix& op, const std::string& target,
                     const SpaceLayout& layout) {
  layout.validate();
  const int slot = layout.index_of(target);
  if (op.dim() != layout.dims[slot])
    throw config_error("embed: operator dimension " +
                       std::to_string(op.dim()) + " does not match factor '" +
                       target + "' of dimension " +
                       std::to_string(layout.dims[slot]));
  Matrix acc = Matrix::Identity(1, 1);
  for (size_t k = 0; k < layout.dims.size(); ++k) {
    if (static_cast<int>(k) == slot)
      acc = kron(acc, op.m);
    else
      acc = kron(acc, Matrix::Identity(layout.dims[k], layout.dims[k]));
  }
  return {layout, std::move(acc)};
}

}  // namespace hqed
