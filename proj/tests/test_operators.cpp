#include "hqed/errors.hpp"
#include "hqed/operators.hpp"

#include <doctest.h>

#include <random>

using namespace hqed;

namespace {

Matrix random_hermitian(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = complexd(u(rng), u(rng));
  return 0.5 * (m + m.adjoint().eval());
}

}  // namespace

TEST_CASE("annihilation operator at smallest size") {
  const OperatorMatrix a = annihilation(2);
  CHECK(a.m(0, 1) == complexd(1.0, 0.0));
  CHECK(a.m(0, 0) == complexd(0.0, 0.0));
  CHECK(a.m(1, 0) == complexd(0.0, 0.0));
  CHECK(a.m(1, 1) == complexd(0.0, 0.0));
  CHECK_THROWS_AS(annihilation(1), config_error);
}

TEST_CASE("number operator from ladder product") {
  const Matrix a = annihilation(4).m;
  const Matrix n = a.adjoint() * a;
  for (int k = 0; k < 4; ++k) CHECK(n(k, k).real() == doctest::Approx(k));
  CHECK(n.cwiseAbs().sum() == doctest::Approx(0.0 + 1.0 + 2.0 + 3.0));
}

TEST_CASE("truncated commutator identity to machine precision") {
  for (int d : {2, 3, 5, 8, 17}) {
    const Matrix a = annihilation(d).m;
    const Matrix c = a * a.adjoint() - a.adjoint() * a;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double expect = i != j ? 0.0 : (i == d - 1 ? 1.0 - d : 1.0);
        CHECK(std::abs(c(i, j).real() - expect) <= 1e-13);
        CHECK(c(i, j).imag() == 0.0);
      }
  }
}

TEST_CASE("pauli matrices") {
  CHECK(pauli(Pauli::Z).m(0, 0) == complexd(1.0, 0.0));
  CHECK(pauli(Pauli::Z).m(1, 1) == complexd(-1.0, 0.0));

  const Matrix proj = pauli(Pauli::Plus).m * pauli(Pauli::Minus).m;
  CHECK(proj(0, 0) == complexd(1.0, 0.0));
  CHECK(proj(1, 1) == complexd(0.0, 0.0));

  const Matrix x = pauli(Pauli::Plus).m + pauli(Pauli::Minus).m;
  CHECK((x - pauli(Pauli::X).m).cwiseAbs().maxCoeff() == 0.0);

  // sigma_pm = (x +- i y)/2
  const complexd i(0.0, 1.0);
  const Matrix plus = 0.5 * (pauli(Pauli::X).m + i * pauli(Pauli::Y).m);
  CHECK((plus - pauli(Pauli::Plus).m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed basics") {
  SpaceLayout layout{{2, 4}, {"DQD", "Sq"}};
  const OperatorMatrix sz = pauli(Pauli::Z);
  const OperatorMatrix e = embed(sz, "DQD", layout);
  CHECK(e.dim() == 8);
  CHECK(std::abs(e.m.trace()) == 0.0);

  CHECK_THROWS_AS(embed(sz, "tr", layout), config_error);
  CHECK_THROWS_AS(embed(annihilation(3), "Sq", layout), config_error);

  const OperatorMatrix id = embed(identity(4), "Sq", layout);
  CHECK((id.m - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disjoint embeddings commute") {
  SpaceLayout layout{{2, 4, 5, 3}, {"DQD", "tr", "Sq", "50"}};
  std::mt19937 seed_gen(7);
  const OperatorMatrix a{single_factor(4, "op"), random_hermitian(4, 11)};
  const OperatorMatrix b{single_factor(5, "op"), random_hermitian(5, 13)};
  const Matrix ea = embed(a, "tr", layout).m;
  const Matrix eb = embed(b, "Sq", layout).m;
  const double comm = (ea * eb - eb * ea).cwiseAbs().maxCoeff();
  CHECK(comm <= 1e-12);

  const OperatorMatrix c{single_factor(2, "op"), random_hermitian(2, 17)};
  const Matrix ec = embed(c, "DQD", layout).m;
  CHECK((ec * eb - eb * ec).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("embed preserves hermiticity and spectrum multiplicity") {
  SpaceLayout layout{{2, 3, 4}, {"DQD", "tr", "Sq"}};
  const OperatorMatrix op{single_factor(3, "op"), random_hermitian(3, 23)};
  const OperatorMatrix lifted = embed(op, "tr", layout);
  CHECK(lifted.is_hermitian(1e-14));

  Eigen::SelfAdjointEigenSolver<Matrix> small(op.m);
  Eigen::SelfAdjointEigenSolver<Matrix> big(lifted.m);
  const int mult = layout.total_dim() / 3;
  // Each eigenvalue of op appears with multiplicity total/3.
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < mult; ++r)
      CHECK(big.eigenvalues()[k * mult + r] ==
            doctest::Approx(small.eigenvalues()[k]).epsilon(1e-12));
}

TEST_CASE("layout validation") {
  SpaceLayout bad{{2, 0}, {"a", "b"}};
  CHECK_THROWS_AS(bad.validate(), config_error);
  SpaceLayout dup{{2, 2}, {"a", "a"}};
  CHECK_THROWS_AS(dup.validate(), config_error);
  SpaceLayout ok{{2, 4, 5, 3}, {"DQD", "tr", "Sq", "50"}};
  ok.validate();
  CHECK(ok.total_dim() == 120);
  CHECK(ok.index_of("Sq") == 2);
  CHECK_THROWS_AS(ok.index_of("nope"), config_error);
}

TEST_CASE("hermiticity error is computable") {
  OperatorMatrix m{single_factor(2, "q"), Matrix::Zero(2, 2)};
  m.m(0, 1) = complexd(0.0, 1.0);  // M - M^dag has i in both corners
  CHECK(m.hermiticity_error() == doctest::Approx(1.0));
  CHECK_FALSE(m.is_hermitian());
  CHECK(pauli(Pauli::Y).is_hermitian(0.0));
}
