#include "ucps/models.hpp"

#include <cmath>

namespace ucps {

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix identity2() { return Matrix::Identity(2, 2); }

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "ising") return ModelKind::ising;
  if (name == "xy") return ModelKind::xy;
  if (name == "heisenberg") return ModelKind::heisenberg;
  throw InvalidArgument("unknown model '" + name +
                        "' (expected ising, xy, or heisenberg)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ising: return "ising";
    case ModelKind::xy: return "xy";
    case ModelKind::heisenberg: return "heisenberg";
  }
  return "?";
}

std::vector<LocalTerm> build_model(ModelKind kind, const ModelParams& p) {
  std::vector<LocalTerm> terms;
  // Zero-coefficient terms (h = 0 fields, gamma = 1 XY) are dropped below so
  // limits of one model coincide term-for-term with the simpler model.
  switch (kind) {
    case ModelKind::ising:
      terms.push_back({LocalTerm::Kind::two_site, -p.J, pauli_z(), pauli_z()});
      terms.push_back({LocalTerm::Kind::one_site, p.h, pauli_x(), Matrix()});
      break;
    case ModelKind::xy:
      terms.push_back({LocalTerm::Kind::two_site, -0.5 * (1.0 + p.gamma),
                       pauli_x(), pauli_x()});
      terms.push_back({LocalTerm::Kind::two_site, -0.5 * (1.0 - p.gamma),
                       pauli_y(), pauli_y()});
      terms.push_back({LocalTerm::Kind::one_site, -p.h, pauli_z(), Matrix()});
      break;
    case ModelKind::heisenberg:
      terms.push_back({LocalTerm::Kind::two_site, p.J, pauli_x(), pauli_x()});
      terms.push_back({LocalTerm::Kind::two_site, p.J, pauli_y(), pauli_y()});
      terms.push_back({LocalTerm::Kind::two_site, p.J, pauli_z(), pauli_z()});
      break;
  }
  std::erase_if(terms, [](const LocalTerm& t) { return t.coefficient == 0.0; });
  return terms;
}

Matrix rotation_y(double theta) {
  // exp(-i theta sigma_y / 2) = cos(theta/2) I - i sin(theta/2) sigma_y,
  // which is the real rotation [[c, -s], [s, c]].
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  Matrix u(2, 2);
  u << c, -s, s, c;
  return u;
}

Matrix rotate_op(const Matrix& op, double theta) {
  const Matrix u = rotation_y(theta);
  return u.adjoint() * op * u;
}

std::vector<LocalTerm> rotate_basis(const std::vector<LocalTerm>& terms,
                                    double theta) {
  std::vector<LocalTerm> out;
  out.reserve(terms.size());
  for (const LocalTerm& t : terms) {
    LocalTerm r = t;
    r.op_a = rotate_op(t.op_a, theta);
    if (t.kind == LocalTerm::Kind::two_site) r.op_b = rotate_op(t.op_b, theta);
    out.push_back(std::move(r));
  }
  return out;
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

Matrix block_one_site_op(const Matrix& op, int n, int pos) {
  if (pos < 0 || pos >= n)
    throw InvalidArgument("block_one_site_op: position out of range");
  Matrix out = Matrix::Identity(1, 1);
  for (int k = 0; k < n; ++k)
    out = kron(out, k == pos ? op : identity2());
  return out;
}

Matrix BlockHamiltonian::intra_total() const {
  Matrix total = intra_total_unshifted();
  total -= energy_shift * Matrix::Identity(dim, dim);
  return total;
}

Matrix BlockHamiltonian::intra_total_unshifted() const {
  Matrix total = Matrix::Zero(dim, dim);
  for (const Matrix& m : intra) total += m;
  return total;
}

BlockHamiltonian block_embed(const std::vector<LocalTerm>& terms, int n) {
  if (n < 1) throw InvalidArgument("block_embed: n must be >= 1");
  BlockHamiltonian H;
  H.n = n;
  H.dim = 1 << n;
  for (const LocalTerm& t : terms) {
    ensure_finite(t.op_a, "local term operator");
    if (t.kind == LocalTerm::Kind::one_site) {
      for (int k = 0; k < n; ++k)
        H.intra.push_back(t.coefficient * block_one_site_op(t.op_a, n, k));
    } else {
      ensure_finite(t.op_b, "local term operator");
      for (int k = 0; k + 1 < n; ++k) {
        Matrix m = Matrix::Identity(1, 1);
        for (int q = 0; q < n; ++q) {
          if (q == k) m = kron(m, t.op_a);
          else if (q == k + 1) m = kron(m, t.op_b);
          else m = kron(m, identity2());
        }
        H.intra.push_back(t.coefficient * m);
      }
      // Block-crossing part: op_a on the last spin, op_b on the first spin of
      // the following block; coefficient folded into the left factor.
      H.boundary.emplace_back(
          t.coefficient * block_one_site_op(t.op_a, n, n - 1),
          block_one_site_op(t.op_b, n, 0));
    }
  }
  return H;
}

}  // namespace ucps
