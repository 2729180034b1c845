#include "koopctl/lmi.h"

#include <algorithm>

#include "koopctl/errors.h"

namespace koopctl {

// ---- AffineMatrix ----------------------------------------------------------

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols)
    : constant_(Matrix::Zero(rows, cols)) {}

AffineMatrix AffineMatrix::constant(const Matrix& c) {
  AffineMatrix a(c.rows(), c.cols());
  a.constant_ = c;
  return a;
}

void AffineMatrix::add_coeff(int index, const Matrix& m) {
  if (m.rows() != rows() || m.cols() != cols()) throw DimensionError("add_coeff: shape");
  auto it = coeffs_.find(index);
  if (it == coeffs_.end()) {
    coeffs_.emplace(index, m);
  } else {
    it->second += m;
  }
}

Matrix AffineMatrix::evaluate(const Vector& z) const {
  Matrix out = constant_;
  for (const auto& [k, m] : coeffs_) {
    if (k >= z.size()) throw DimensionError("evaluate: assignment too short");
    out += z(k) * m;
  }
  return out;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix out = constant(constant_.transpose());
  for (const auto& [k, m] : coeffs_) out.coeffs_.emplace(k, m.transpose());
  return out;
}

AffineMatrix AffineMatrix::operator+(const AffineMatrix& o) const {
  if (rows() != o.rows() || cols() != o.cols()) throw DimensionError("affine +: shape");
  AffineMatrix out = *this;
  out.constant_ += o.constant_;
  for (const auto& [k, m] : o.coeffs_) out.add_coeff(k, m);
  return out;
}

AffineMatrix AffineMatrix::operator-() const {
  AffineMatrix out = constant(-constant_);
  for (const auto& [k, m] : coeffs_) out.coeffs_.emplace(k, -m);
  return out;
}

AffineMatrix AffineMatrix::operator-(const AffineMatrix& o) const { return *this + (-o); }

AffineMatrix AffineMatrix::operator*(double s) const {
  AffineMatrix out = constant(s * constant_);
  for (const auto& [k, m] : coeffs_) out.coeffs_.emplace(k, s * m);
  return out;
}

AffineMatrix operator*(const Matrix& left, const AffineMatrix& a) {
  AffineMatrix out = AffineMatrix::constant(ordered_product(left, a.constant_));
  for (const auto& [k, m] : a.coeffs_) out.coeffs_.emplace(k, ordered_product(left, m));
  return out;
}

AffineMatrix operator*(const AffineMatrix& a, const Matrix& right) {
  AffineMatrix out = AffineMatrix::constant(ordered_product(a.constant_, right));
  for (const auto& [k, m] : a.coeffs_) out.coeffs_.emplace(k, ordered_product(m, right));
  return out;
}

AffineMatrix kron(const AffineMatrix& a, const Matrix& b) {
  AffineMatrix out = AffineMatrix::constant(kron(a.constant_term(), b));
  for (const auto& [k, m] : a.coeffs()) out.add_coeff(k, kron(m, b));
  return out;
}

AffineMatrix kron(const Matrix& a, const AffineMatrix& b) {
  AffineMatrix out = AffineMatrix::constant(kron(a, b.constant_term()));
  for (const auto& [k, m] : b.coeffs()) out.add_coeff(k, kron(a, m));
  return out;
}

namespace {

// Places `part` at (r, c) inside every matrix of `dst`.
void place(AffineMatrix& dst, const AffineMatrix& part, Eigen::Index r, Eigen::Index c,
           bool transpose) {
  const Matrix pc = transpose ? Matrix(part.constant_term().transpose()) : part.constant_term();
  Matrix C = dst.constant_term();
  C.block(r, c, pc.rows(), pc.cols()) = pc;
  AffineMatrix out = AffineMatrix::constant(C);
  for (const auto& [k, m] : dst.coeffs()) out.add_coeff(k, m);
  for (const auto& [k, m] : part.coeffs()) {
    Matrix full = Matrix::Zero(dst.rows(), dst.cols());
    if (transpose) {
      full.block(r, c, m.cols(), m.rows()) = m.transpose();
    } else {
      full.block(r, c, m.rows(), m.cols()) = m;
    }
    out.add_coeff(k, full);
  }
  dst = std::move(out);
}

}  // namespace

AffineMatrix hcat(const std::vector<AffineMatrix>& parts) {
  if (parts.empty()) return {};
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) throw DimensionError("hcat: row mismatch");
    cols += p.cols();
  }
  AffineMatrix out(parts.front().rows(), cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    place(out, p, 0, c, false);
    c += p.cols();
  }
  return out;
}

AffineMatrix vcat(const std::vector<AffineMatrix>& parts) {
  if (parts.empty()) return {};
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != parts.front().cols()) throw DimensionError("vcat: column mismatch");
    rows += p.rows();
  }
  AffineMatrix out(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    place(out, p, r, 0, false);
    r += p.rows();
  }
  return out;
}

AffineMatrix assemble_symmetric(const std::vector<int>& sizes,
                                const std::map<std::pair<int, int>, AffineMatrix>& lower) {
  std::vector<Eigen::Index> off(sizes.size() + 1, 0);
  for (size_t i = 0; i < sizes.size(); ++i) off[i + 1] = off[i] + sizes[i];
  const Eigen::Index n = off.back();

  // Write blocks directly into dense coefficient matrices.
  Matrix C = Matrix::Zero(n, n);
  std::map<int, Matrix> coeffs;
  auto slot = [&](int k) -> Matrix& {
    auto it = coeffs.find(k);
    if (it == coeffs.end()) it = coeffs.emplace(k, Matrix::Zero(n, n)).first;
    return it->second;
  };
  for (const auto& [ij, blk] : lower) {
    const auto [i, j] = ij;
    if (i < j || i < 0 || static_cast<size_t>(i) >= sizes.size()) {
      throw DimensionError("assemble_symmetric: block index must satisfy i >= j");
    }
    if (blk.rows() != sizes[static_cast<size_t>(i)] || blk.cols() != sizes[static_cast<size_t>(j)]) {
      throw DimensionError("assemble_symmetric: block (" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ") has the wrong shape");
    }
    const auto r = off[static_cast<size_t>(i)];
    const auto c = off[static_cast<size_t>(j)];
    auto put = [&](Matrix& dst, const Matrix& m) {
      if (i == j) {
        dst.block(r, c, m.rows(), m.cols()) = 0.5 * (m + m.transpose());
      } else {
        dst.block(r, c, m.rows(), m.cols()) = m;
        dst.block(c, r, m.cols(), m.rows()) = m.transpose();
      }
    };
    put(C, blk.constant_term());
    for (const auto& [k, m] : blk.coeffs()) put(slot(k), m);
  }
  AffineMatrix out = AffineMatrix::constant(C);
  for (const auto& [k, m] : coeffs) out.add_coeff(k, m);
  return out;
}

// ---- VariableSet -----------------------------------------------------------

const MatrixVariable& VariableSet::add_symmetric(const std::string& name, int n) {
  if (contains(name)) throw ValidationError("duplicate variable " + name);
  MatrixVariable v{name, n, n, true, std::vector<int>(static_cast<size_t>(n * n))};
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int k = count_++;
      v.index[static_cast<size_t>(i * n + j)] = k;
      v.index[static_cast<size_t>(j * n + i)] = k;
    }
  }
  vars_.push_back(std::move(v));
  return vars_.back();
}

const MatrixVariable& VariableSet::add_full(const std::string& name, int rows, int cols) {
  if (contains(name)) throw ValidationError("duplicate variable " + name);
  MatrixVariable v{name, rows, cols, false, std::vector<int>(static_cast<size_t>(rows * cols))};
  for (auto& k : v.index) k = count_++;
  vars_.push_back(std::move(v));
  return vars_.back();
}

const MatrixVariable& VariableSet::add_scalar(const std::string& name) {
  return add_full(name, 1, 1);
}

bool VariableSet::contains(const std::string& name) const {
  return std::any_of(vars_.begin(), vars_.end(), [&](const auto& v) { return v.name == name; });
}

const MatrixVariable& VariableSet::get(const std::string& name) const {
  for (const auto& v : vars_) {
    if (v.name == name) return v;
  }
  throw ValidationError("unknown variable " + name);
}

AffineMatrix VariableSet::expr(const std::string& name) const {
  const MatrixVariable& v = get(name);
  AffineMatrix out(v.rows, v.cols);
  for (int i = 0; i < v.rows; ++i) {
    for (int j = 0; j < v.cols; ++j) {
      if (v.symmetric && j < i) continue;
      Matrix e = Matrix::Zero(v.rows, v.cols);
      e(i, j) = 1.0;
      if (v.symmetric) e(j, i) = 1.0;
      out.add_coeff(v.scalar_index(i, j), e);
    }
  }
  return out;
}

Vector VariableSet::pack(const Assignment& a) const {
  Vector z = Vector::Zero(count_);
  for (const auto& v : vars_) {
    auto it = a.find(v.name);
    if (it == a.end()) throw ValidationError("assignment is missing variable " + v.name);
    const Matrix& m = it->second;
    if (m.rows() != v.rows || m.cols() != v.cols) {
      throw DimensionError("assignment for " + v.name + " has the wrong shape");
    }
    for (int i = 0; i < v.rows; ++i) {
      for (int j = 0; j < v.cols; ++j) {
        if (v.symmetric && j < i) continue;
        z(v.scalar_index(i, j)) = v.symmetric ? 0.5 * (m(i, j) + m(j, i)) : m(i, j);
      }
    }
  }
  return z;
}

Matrix VariableSet::value(const std::string& name, const Vector& z) const {
  const MatrixVariable& v = get(name);
  Matrix m(v.rows, v.cols);
  for (int i = 0; i < v.rows; ++i) {
    for (int j = 0; j < v.cols; ++j) m(i, j) = z(v.scalar_index(i, j));
  }
  return m;
}

Assignment VariableSet::unpack(const Vector& z) const {
  if (z.size() != count_) throw DimensionError("unpack: wrong length");
  Assignment a;
  for (const auto& v : vars_) a[v.name] = value(v.name, z);
  return a;
}

Json VariableSet::manifest() const {
  Json out = Json::array();
  for (const auto& v : vars_) {
    out.push_back({{"name", v.name},
                   {"rows", v.rows},
                   {"cols", v.cols},
                   {"symmetric", v.symmetric},
                   {"scalars", v.symmetric ? v.rows * (v.rows + 1) / 2 : v.rows * v.cols}});
  }
  return out;
}

// ---- SynthesisProblem ------------------------------------------------------

const LmiConstraint& SynthesisProblem::constraint(const std::string& name) const {
  for (const auto& c : constraints) {
    if (c.name == name) return c;
  }
  throw ValidationError("no constraint named " + name);
}

bool SynthesisProblem::has_constraint(const std::string& name) const {
  return std::any_of(constraints.begin(), constraints.end(),
                     [&](const auto& c) { return c.name == name; });
}

Json SynthesisProblem::manifest() const {
  Json cons = Json::array();
  for (const auto& c : constraints) {
    cons.push_back({{"name", c.name}, {"dim", c.expr.rows()}, {"strict", c.strict}});
  }
  Json j = {{"theorem", theorem},
            {"N", N},
            {"m", m},
            {"epsilon", epsilon},
            {"num_scalars", vars.num_scalars()},
            {"variables", vars.manifest()},
            {"constraints", cons},
            {"objective", objective.size() ? "linear" : "none"},
            {"notes", notes}};
  return j;
}

// ---- builders --------------------------------------------------------------

double effective_epsilon(const Surrogate& s, double epsilon) {
  double scale = std::max({1.0, s.A.cwiseAbs().maxCoeff(), s.B0.cwiseAbs().maxCoeff()});
  for (const auto& B : s.B) scale = std::max(scale, B.cwiseAbs().maxCoeff());
  return epsilon * scale;
}

namespace {

Matrix eye(int n) { return Matrix::Identity(n, n); }

void check_inputs(const Surrogate& s, const UncertaintyRegion& region) {
  const int N = s.N();
  if (N < 1 || s.m() < 1) throw DimensionError("surrogate is empty");
  if (region.N() != N) throw DimensionError("region dimension differs from the surrogate's N");
  if (!(s.c_r > 0.0)) throw ValidationError("surrogate has no positive c_r attached");
  if (static_cast<int>(s.B.size()) != s.m()) throw DimensionError("surrogate B list length");
}

// -A P - B0 L - P A^T - L^T B0^T - tau I
AffineMatrix lyapunov_block(const Surrogate& s, const AffineMatrix& P, const AffineMatrix& L,
                            const AffineMatrix& tau) {
  const int N = s.N();
  return -(s.A * P) - s.B0 * L - P * Matrix(s.A.transpose()) - L.transpose() * Matrix(s.B0.transpose()) -
         kron(tau, eye(N));
}

AffineMatrix remainder_block(const Surrogate& s, const AffineMatrix& tau, int size) {
  return kron(tau, eye(size) * (0.5 / (s.c_r * s.c_r)));
}

void add_common(SynthesisProblem& p, const UncertaintyRegion& region, const SynthesisOptions& o,
                const char* mult_name) {
  const int N = p.N;
  const AffineMatrix P = p.vars.expr("P");
  if (o.include_invariance) {
    p.constraints.push_back({"invariance", invariance_lmi(p.vars, region), false});
  } else {
    p.notes.push_back("invariance inequality omitted");
  }
  p.constraints.push_back({"P_pos", P, true});
  p.constraints.push_back({std::string(mult_name) + "_pos", p.vars.expr(mult_name), true});
  p.constraints.push_back({"tau_pos", p.vars.expr("tau"), true});
  if (o.include_invariance) p.constraints.push_back({"nu_pos", p.vars.expr("nu"), true});
  if (o.trace_cap > 0.0) {
    AffineMatrix tr = AffineMatrix::constant(Matrix::Constant(1, 1, o.trace_cap));
    for (int i = 0; i < N; ++i) {
      Matrix e = Matrix::Zero(1, 1);
      e(0, 0) = -1.0;
      tr.add_coeff(p.vars.get("P").scalar_index(i, i), e);
    }
    p.constraints.push_back({"trace_cap", tr, false});
    p.notes.push_back("trace(P) <= " + std::to_string(o.trace_cap));
  }
  if (o.maximize_min_eig_P) {
    const AffineMatrix t = p.vars.expr("t");
    p.constraints.push_back({"P_min_eig", P - kron(t, eye(N)), false});
    p.objective = Vector::Zero(p.vars.num_scalars());
    p.objective(p.vars.get("t").scalar_index(0, 0)) = -1.0;
    p.notes.push_back("objective: maximize t subject to P >= t I");
  }
}

}  // namespace

AffineMatrix invariance_lmi(const VariableSet& vars, const UncertaintyRegion& region) {
  const int N = region.N();
  const AffineMatrix P = vars.expr("P");
  const AffineMatrix nu = vars.expr("nu");
  const Matrix Sz = region.S();
  std::map<std::pair<int, int>, AffineMatrix> b;
  b[{0, 0}] = P;
  b[{1, 0}] = Matrix(Sz.transpose()) * P;
  b[{2, 0}] = P;
  b[{1, 1}] = nu * region.R();
  b[{3, 1}] = nu;
  b[{2, 2}] = kron(nu, Matrix(-region.Q_inverse()));
  b[{3, 3}] = AffineMatrix::constant(Matrix::Ones(1, 1));
  return assemble_symmetric({N, 1, N, 1}, b);
}

SynthesisProblem build_theorem1(const Surrogate& s, const UncertaintyRegion& region,
                                const SynthesisOptions& o) {
  check_inputs(s, region);
  if (s.m() != 1) throw DimensionError("theorem 1 requires a single input (m = 1)");
  SynthesisProblem p;
  p.theorem = 1;
  p.N = s.N();
  p.m = 1;
  p.epsilon = effective_epsilon(s, o.epsilon);
  const int N = p.N;
  p.vars.add_symmetric("P", N);
  p.vars.add_full("L", 1, N);
  p.vars.add_scalar("lambda");
  p.vars.add_scalar("tau");
  if (o.include_invariance) p.vars.add_scalar("nu");
  if (o.maximize_min_eig_P) p.vars.add_scalar("t");

  const AffineMatrix P = p.vars.expr("P");
  const AffineMatrix L = p.vars.expr("L");
  const AffineMatrix lam = p.vars.expr("lambda");
  const AffineMatrix tau = p.vars.expr("tau");
  const Matrix B1t = s.B[0].transpose();
  const Matrix Stt = region.S_tilde().transpose();

  std::map<std::pair<int, int>, AffineMatrix> b;
  b[{0, 0}] = lyapunov_block(s, P, L, tau);
  b[{1, 0}] = -L - kron(lam, Stt) * B1t;
  b[{2, 0}] = -vcat({P, L});
  b[{3, 0}] = kron(lam, eye(N)) * B1t;
  b[{1, 1}] = kron(lam, Matrix::Constant(1, 1, region.R_tilde()));
  b[{2, 2}] = remainder_block(s, tau, N + 1);
  b[{3, 3}] = -kron(lam, region.Q_tilde_inverse());
  p.constraints.push_back({"synthesis", assemble_symmetric({N, 1, N + 1, N}, b), true});
  add_common(p, region, o, "lambda");
  return p;
}

SynthesisProblem build_theorem2(const Surrogate& s, const UncertaintyRegion& region,
                                const SynthesisOptions& o) {
  check_inputs(s, region);
  SynthesisProblem p;
  p.theorem = 2;
  p.N = s.N();
  p.m = s.m();
  p.epsilon = effective_epsilon(s, o.epsilon);
  const int N = p.N;
  const int m = p.m;
  p.vars.add_symmetric("P", N);
  p.vars.add_full("L", m, N);
  if (!o.freeze_Lw) p.vars.add_full("Lw", m, N * m);
  p.vars.add_symmetric("Lambda", m);
  p.vars.add_scalar("tau");
  if (o.include_invariance) p.vars.add_scalar("nu");
  if (o.maximize_min_eig_P) p.vars.add_scalar("t");
  if (o.freeze_Lw) p.notes.push_back("L_w fixed to 0");

  const AffineMatrix P = p.vars.expr("P");
  const AffineMatrix L = p.vars.expr("L");
  const AffineMatrix Lam = p.vars.expr("Lambda");
  const AffineMatrix tau = p.vars.expr("tau");
  const Matrix Bt = s.B_tilde().transpose();  // Nm x N
  const Matrix B0t = s.B0.transpose();         // m x N
  const Matrix St = region.S_tilde();
  const Matrix Stt = St.transpose();
  const Matrix ImSt = kron(eye(m), St);    // Nm x m
  const Matrix ImStt = kron(eye(m), Stt);  // m x Nm

  std::map<std::pair<int, int>, AffineMatrix> b;
  b[{0, 0}] = lyapunov_block(s, P, L, tau);
  b[{1, 0}] = -L - kron(Lam, Stt) * Bt;
  b[{2, 0}] = -vcat({P, L});
  b[{3, 0}] = kron(Lam, eye(N)) * Bt;
  b[{1, 1}] = kron(Lam, Matrix::Constant(1, 1, region.R_tilde()));
  b[{2, 2}] = remainder_block(s, tau, N + m);
  b[{3, 3}] = -kron(Lam, region.Q_tilde_inverse());
  if (!o.freeze_Lw) {
    const AffineMatrix Lw = p.vars.expr("Lw");
    const AffineMatrix Lwt = Lw.transpose();
    const AffineMatrix zero_w(N, N * m);
    b[{1, 0}] = b[{1, 0}] - ImStt * Lwt * B0t;
    b[{1, 1}] = b[{1, 1}] - Lw * ImSt - ImStt * Lwt;
    b[{2, 1}] = -(vcat({zero_w, Lw}) * ImSt);
    b[{3, 0}] = b[{3, 0}] + Lwt * B0t;
    b[{3, 1}] = Lwt;
    b[{3, 2}] = hcat({zero_w.transpose(), Lwt});
  }
  p.constraints.push_back({"synthesis", assemble_symmetric({N, m, N + m, N * m}, b), true});
  add_common(p, region, o, "Lambda");
  return p;
}

Evaluation evaluate(const AffineMatrix& expr, const Vector& z) {
  Evaluation e;
  e.value = expr.evaluate(z);
  e.min_eig = min_eigenvalue(e.value);
  return e;
}

Evaluation evaluate(const SynthesisProblem& p, const LmiConstraint& c, const Assignment& a) {
  return evaluate(c.expr, p.vars.pack(a));
}

}  // namespace koopctl
