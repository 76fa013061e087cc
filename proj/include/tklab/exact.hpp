#pragma once

#include <optional>
#include <vector>

#include "tklab/scalar.hpp"

namespace tklab {

enum class PsdKind {
  strictly_positive,      // all pivots positive: strictly positive definite
  semidefinite_singular,  // positive semidefinite with a nontrivial null space
  indefinite,             // a direction of strictly negative energy exists
};

// Machine-checkable outcome of a positive-semidefiniteness test. In rational
// mode the decision is exact: `pivots` are the LDL^T pivots of the
// symmetrically permuted matrix, `vector` is an exact null vector
// (semidefinite_singular) or a direction v with v^T G v < 0 (indefinite),
// and `quad_value` is v^T G v recomputed against the input. In float mode
// the same fields are filled from an eigendecomposition with eigenvalue
// threshold 1e-10 times the largest eigenvalue magnitude.
struct PsdCertificate {
  PsdKind kind = PsdKind::strictly_positive;
  Num mode = Num::rational;
  int n = 0;
  int rank = 0;
  std::vector<int> permutation;  // rational mode: pivot order, original indices
  std::vector<Scalar> pivots;    // rational: LDL^T pivots; float: eigenvalues
  std::optional<std::vector<Scalar>> vector;
  std::optional<Scalar> quad_value;
};

// Decides PD / PSD-singular / indefinite for a symmetric matrix given
// row-major. Verifies symmetry first (exact in rational mode, 1e-12
// absolute in float mode) and throws std::invalid_argument on asymmetry or
// mixed modes. The rational path clears denominators and runs fraction-free
// Bareiss elimination with symmetric max-diagonal pivoting, so no rounding
// occurs anywhere.
PsdCertificate validate_psd(int n, const std::vector<Scalar>& gram);

// Basis of { x : A x = 0 } for a rows x cols rational matrix (row-major),
// via exact Gauss-Jordan elimination. The basis vectors are the standard
// free-column completions.
std::vector<std::vector<Rational>> rational_nullspace(
    std::size_t rows, std::size_t cols, const std::vector<Rational>& a);

}  // namespace tklab
