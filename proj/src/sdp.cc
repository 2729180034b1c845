#include "koopctl/sdp.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/rng.h"

namespace koopctl {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

Vector svec(const Matrix& sym) {
  const auto n = sym.rows();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) v(k++) = i == j ? sym(i, j) : kSqrt2 * sym(i, j);
  }
  return v;
}

Matrix smat(const Vector& v, int n) {
  if (v.size() != n * (n + 1) / 2) throw DimensionError("smat: length mismatch");
  Matrix m(n, n);
  Eigen::Index k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double x = i == j ? v(k) : v(k) / kSqrt2;
      m(i, j) = x;
      m(j, i) = x;
      ++k;
    }
  }
  return m;
}

Vector ConicProgram::to_problem(const Vector& z) const {
  Vector s(num_vars);
  for (int k = 0; k < num_vars; ++k) s(k) = scale[static_cast<size_t>(k)] * z(k);
  return s;
}

Vector ConicProgram::from_problem(const Vector& s) const {
  Vector z(num_vars);
  for (int k = 0; k < num_vars; ++k) z(k) = s(k) / scale[static_cast<size_t>(k)];
  return z;
}

Matrix ConicProgram::block_value(int j, const Vector& z) const {
  const PsdBlock& b = blocks[static_cast<size_t>(j)];
  Matrix v = b.F0;
  for (const auto& [k, f] : b.F) v += z(k) * f;
  return v;
}

ConicProgram lower(const SynthesisProblem& problem) {
  ConicProgram p;
  p.num_vars = problem.vars.num_scalars();
  p.scale.assign(static_cast<size_t>(p.num_vars), 1.0);
  p.labels.assign(static_cast<size_t>(p.num_vars), "");
  for (const auto& v : problem.vars.variables()) {
    for (int i = 0; i < v.rows; ++i) {
      for (int j = 0; j < v.cols; ++j) {
        if (v.symmetric && j < i) continue;
        const auto k = static_cast<size_t>(v.scalar_index(i, j));
        if (v.symmetric && i != j) p.scale[k] = 1.0 / kSqrt2;
        p.labels[k] = v.name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
      }
    }
  }
  for (const auto& c : problem.constraints) {
    PsdBlock b;
    b.name = c.name;
    b.dim = static_cast<int>(c.expr.rows());
    b.shift = c.strict ? problem.epsilon : 0.0;
    b.F0 = c.expr.constant_term() - b.shift * Matrix::Identity(b.dim, b.dim);
    for (const auto& [k, m] : c.expr.coeffs()) {
      b.F.push_back({k, p.scale[static_cast<size_t>(k)] * m});
    }
    p.blocks.push_back(std::move(b));
  }
  p.c = Vector::Zero(p.num_vars);
  if (problem.objective.size() == p.num_vars) {
    for (int k = 0; k < p.num_vars; ++k) p.c(k) = problem.objective(k) * p.scale[static_cast<size_t>(k)];
  }
  return p;
}

void export_sparse(const ConicProgram& program, std::ostream& out) {
  out << "# conic program: F0 + sum_i z_i F_i >= 0 per block\n";
  out << "# lines: 'F0 block row col value' and 'F var block row col value' (1-based, upper)\n";
  out << "vars " << program.num_vars << "\n";
  out << "blocks " << program.blocks.size() << "\n";
  for (size_t j = 0; j < program.blocks.size(); ++j) {
    const auto& b = program.blocks[j];
    out << "block " << j + 1 << " " << b.name << " dim " << b.dim << " shift "
        << format_double(b.shift) << "\n";
  }
  for (int k = 0; k < program.num_vars; ++k) {
    out << "var " << k + 1 << " " << program.labels[static_cast<size_t>(k)] << " scale "
        << format_double(program.scale[static_cast<size_t>(k)]) << " c "
        << format_double(program.c.size() ? program.c(k) : 0.0) << "\n";
  }
  auto triplets = [&](const Matrix& m, const std::string& prefix, size_t blk) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = r; c < m.cols(); ++c) {
        if (m(r, c) != 0.0) {
          out << prefix << blk + 1 << " " << r + 1 << " " << c + 1 << " "
              << format_double(m(r, c)) << "\n";
        }
      }
    }
  };
  for (size_t j = 0; j < program.blocks.size(); ++j) {
    triplets(program.blocks[j].F0, "F0 ", j);
    for (const auto& [k, f] : program.blocks[j].F) {
      triplets(f, "F " + std::to_string(k + 1) + " ", j);
    }
  }
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasibleCertificate: return "infeasible_certificate";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

Json SolverOptions::to_json() const {
  return {{"backend", backend == Backend::kReference ? "reference" : "external"},
          {"tol_feasibility", tol_feasibility},
          {"tol_gap", tol_gap},
          {"max_iterations", max_iterations},
          {"margin_cap", margin_cap},
          {"variable_box", variable_box},
          {"center", center},
          {"seed", seed},
          {"external_command", external_command}};
}

SolverOptions SolverOptions::from_json(const Json& j) {
  SolverOptions o;
  const std::string backend = j.value("backend", std::string("reference"));
  if (backend == "reference") {
    o.backend = Backend::kReference;
  } else if (backend == "external") {
    o.backend = Backend::kExternal;
  } else {
    throw ValidationError("unknown solver backend '" + backend + "'");
  }
  o.tol_feasibility = j.value("tol_feasibility", o.tol_feasibility);
  o.tol_gap = j.value("tol_gap", o.tol_gap);
  o.max_iterations = j.value("max_iterations", o.max_iterations);
  o.margin_cap = j.value("margin_cap", o.margin_cap);
  o.variable_box = j.value("variable_box", o.variable_box);
  o.center = j.value("center", o.center);
  o.seed = j.value("seed", o.seed);
  o.external_command = j.value("external_command", std::string());
  o.work_dir = j.value("work_dir", std::string());
  return o;
}

Json SolveReport::to_json(const ConicProgram& p) const {
  Json eig = Json::object();
  for (size_t j = 0; j < min_eig.size() && j < p.blocks.size(); ++j) {
    eig[p.blocks[j].name] = min_eig[j];
  }
  return {{"status", to_string(status)},
          {"margin", margin},
          {"margin_bound", margin_bound},
          {"iterations", iterations},
          {"min_eig", eig},
          {"message", message}};
}

namespace {

constexpr double kSlack = 1e-7;

// Phase 1: maximize t s.t. F_j(z) >= t I, |z_i| <= box, t <= cap.
StandardSdp phase1(const ConicProgram& p, const SolverOptions& o) {
  StandardSdp s;
  const int nv = p.num_vars + 1;
  const int t_idx = p.num_vars;
  s.A.resize(static_cast<size_t>(nv));
  s.b = Vector::Zero(nv);
  s.b(t_idx) = 1.0;
  for (const auto& blk : p.blocks) {
    const int j = s.num_blocks();
    s.dims.push_back(blk.dim);
    s.C.push_back(blk.F0);
    for (const auto& [k, f] : blk.F) s.A[static_cast<size_t>(k)].push_back({j, -f});
    s.A[static_cast<size_t>(t_idx)].push_back({j, Matrix::Identity(blk.dim, blk.dim)});
  }
  for (int k = 0; k < p.num_vars; ++k) {
    for (double sign : {1.0, -1.0}) {
      const int j = s.num_blocks();
      s.dims.push_back(1);
      s.C.push_back(Matrix::Constant(1, 1, o.variable_box));
      s.A[static_cast<size_t>(k)].push_back({j, Matrix::Constant(1, 1, sign)});
    }
  }
  const int j = s.num_blocks();
  s.dims.push_back(1);
  s.C.push_back(Matrix::Constant(1, 1, o.margin_cap));
  s.A[static_cast<size_t>(t_idx)].push_back({j, Matrix::Ones(1, 1)});
  return s;
}

// Phase 2: maximize -c^T z s.t. F_j(z) >= 0, |z_i| <= box.
StandardSdp phase2(const ConicProgram& p, const SolverOptions& o) {
  StandardSdp s;
  s.A.resize(static_cast<size_t>(p.num_vars));
  s.b = -p.c;
  for (const auto& blk : p.blocks) {
    const int j = s.num_blocks();
    s.dims.push_back(blk.dim);
    s.C.push_back(blk.F0);
    for (const auto& [k, f] : blk.F) s.A[static_cast<size_t>(k)].push_back({j, -f});
  }
  for (int k = 0; k < p.num_vars; ++k) {
    for (double sign : {1.0, -1.0}) {
      const int j = s.num_blocks();
      s.dims.push_back(1);
      s.C.push_back(Matrix::Constant(1, 1, o.variable_box));
      s.A[static_cast<size_t>(k)].push_back({j, Matrix::Constant(1, 1, sign)});
    }
  }
  return s;
}

std::vector<double> block_min_eigs(const ConicProgram& p, const Vector& z) {
  std::vector<double> out;
  for (int j = 0; j < static_cast<int>(p.blocks.size()); ++j) {
    out.push_back(min_eigenvalue(p.block_value(j, z)));
  }
  return out;
}

double worst(const std::vector<double>& v) {
  double w = std::numeric_limits<double>::infinity();
  for (double x : v) w = std::min(w, x);
  return w;
}

void write_sdpa(const StandardSdp& s, const std::filesystem::path& path) {
  // SDPA: minimize c^T x s.t. sum_i x_i F_i - F_0 >= 0, here x = y,
  // c = -b, F_0 = -C, F_i = -A_i.
  std::ostringstream out;
  out << "\"conic program export\"\n" << s.num_vars() << "\n" << s.num_blocks() << "\n";
  for (int j = 0; j < s.num_blocks(); ++j) out << (j ? " " : "") << s.dims[static_cast<size_t>(j)];
  out << "\n";
  for (int i = 0; i < s.num_vars(); ++i) out << (i ? " " : "") << format_double(-s.b(i));
  out << "\n";
  auto emit = [&](int mat, int blk, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = r; c < m.cols(); ++c) {
        if (m(r, c) != 0.0) {
          out << mat << " " << blk + 1 << " " << r + 1 << " " << c + 1 << " "
              << format_double(-m(r, c)) << "\n";
        }
      }
    }
  };
  for (int j = 0; j < s.num_blocks(); ++j) emit(0, j, s.C[static_cast<size_t>(j)]);
  for (int i = 0; i < s.num_vars(); ++i) {
    for (const auto& [j, a] : s.A[static_cast<size_t>(i)]) emit(i + 1, j, a);
  }
  write_text_file(path, out.str());
}

struct BackendResult {
  bool ok = false;
  bool converged = false;
  Vector y;
  double bound = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string message;
};

BackendResult run_backend(const StandardSdp& s, const SolverOptions& o, const Vector& y0,
                          const std::string& tag) {
  BackendResult br;
  if (o.backend == SolverOptions::Backend::kReference) {
    IpmOptions io;
    io.tol_primal = o.tol_feasibility;
    io.tol_dual = o.tol_feasibility;
    io.tol_gap = o.tol_gap;
    io.max_iterations = o.max_iterations;
    io.y0 = y0;
    const IpmResult r = solve_standard_sdp(s, io);
    br.y = r.y;
    br.iterations = r.iterations;
    br.converged = r.status == IpmResult::Status::kConverged;
    br.ok = r.y.allFinite();
    br.bound = r.primal_objective;
    br.message = r.message;
    if (r.status == IpmResult::Status::kIterationLimit) br.message = "iteration limit";
    return br;
  }
  if (o.external_command.empty()) {
    br.message = "external backend selected without a command";
    return br;
  }
  namespace fs = std::filesystem;
  const fs::path dir = o.work_dir.empty() ? fs::temp_directory_path() : fs::path(o.work_dir);
  fs::create_directories(dir);
  const fs::path in = dir / ("koopctl_" + tag + ".dat-s");
  const fs::path out = dir / ("koopctl_" + tag + ".sol");
  write_sdpa(s, in);
  fs::remove(out);
  const std::string cmd = o.external_command + " '" + in.string() + "' '" + out.string() + "'";
  const int rc = std::system(cmd.c_str());
  if (rc != 0 || !fs::exists(out)) {
    br.message = "external solver failed (exit " + std::to_string(rc) + ")";
    return br;
  }
  // First line: status word; then one value per variable.
  std::istringstream sol(read_text_file(out));
  std::string status;
  sol >> status;
  br.y = Vector::Zero(s.num_vars());
  for (int i = 0; i < s.num_vars(); ++i) {
    std::string tok;
    if (!(sol >> tok)) {
      br.message = "external solver wrote a short solution";
      return br;
    }
    br.y(i) = parse_double(tok);
  }
  br.ok = br.y.allFinite();
  br.converged = status == "optimal";
  br.message = "external status " + status;
  return br;
}

// Damped Newton iterations on -sum log det F_j(z) - sum log(box -+ z_i).
Vector analytic_center(const ConicProgram& p, const SolverOptions& o, Vector z) {
  const int nv = p.num_vars;
  for (int it = 0; it < 100; ++it) {
    Vector g = Vector::Zero(nv);
    Matrix H = Matrix::Zero(nv, nv);
    for (int j = 0; j < static_cast<int>(p.blocks.size()); ++j) {
      const PsdBlock& b = p.blocks[static_cast<size_t>(j)];
      Eigen::LLT<Matrix> llt(p.block_value(j, z));
      if (llt.info() != Eigen::Success) return z;
      const Matrix Finv = llt.solve(Matrix::Identity(b.dim, b.dim));
      std::vector<Matrix> W;
      for (const auto& [k, f] : b.F) {
        W.push_back(Finv * f);
        g(k) += W.back().trace();
      }
      for (size_t a = 0; a < b.F.size(); ++a) {
        for (size_t c = a; c < b.F.size(); ++c) {
          const double h = W[a].cwiseProduct(W[c].transpose()).sum();
          H(b.F[a].first, b.F[c].first) += h;
          if (a != c) H(b.F[c].first, b.F[a].first) += h;
        }
      }
    }
    for (int k = 0; k < nv; ++k) {
      const double up = o.variable_box - z(k);
      const double lo = o.variable_box + z(k);
      if (!(up > 0.0) || !(lo > 0.0)) return z;
      g(k) += -1.0 / up + 1.0 / lo;
      H(k, k) += 1.0 / (up * up) + 1.0 / (lo * lo);
    }
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() != Eigen::Success) return z;
    const Vector dz = ldlt.solve(g);
    const double dec2 = g.dot(dz);
    if (!std::isfinite(dec2) || dec2 < 0.0) return z;
    const double step = 1.0 / (1.0 + std::sqrt(dec2));
    z += step * dz;
    if (dec2 < 1e-12) break;
  }
  return z;
}

}  // namespace

SolveReport solve(const ConicProgram& program, const SolverOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  auto finish = [&](SolveReport& r) -> SolveReport {
    r.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.z.size() == program.num_vars) {
      r.scalars = program.to_problem(r.z);
      r.min_eig = block_min_eigs(program, r.z);
    }
    return r;
  };
  for (const auto& b : program.blocks) {
    if (!b.F0.allFinite()) {
      rep.status = SolveStatus::kNumericalFailure;
      rep.message = "program has non-finite data";
      return finish(rep);
    }
  }
  if (program.num_vars == 0) {
    rep.z = Vector::Zero(0);
    rep.status = worst(block_min_eigs(program, rep.z)) >= -kSlack
                     ? SolveStatus::kFeasible
                     : SolveStatus::kInfeasibleCertificate;
    return finish(rep);
  }

  const StandardSdp s1 = phase1(program, opts);
  Vector y0 = Vector::Zero(s1.num_vars());
  if (opts.seed != 0) {
    Rng rng(derive_seed(opts.seed, 0x5344505fULL));
    for (int k = 0; k < program.num_vars; ++k) y0(k) = rng.uniform(-0.5, 0.5);
  }
  const BackendResult r1 = run_backend(s1, opts, y0, "phase1");
  rep.iterations = r1.iterations;
  if (!r1.ok) {
    rep.status = SolveStatus::kNumericalFailure;
    rep.message = r1.message;
    return finish(rep);
  }
  Vector z = r1.y.head(program.num_vars);
  rep.margin = r1.y(program.num_vars);
  rep.margin_bound = r1.bound;
  const double w = worst(block_min_eigs(program, z));
  if (w < -kSlack) {
    if (r1.converged) {
      rep.status = SolveStatus::kInfeasibleCertificate;
      rep.message = "maximal margin is negative";
    } else {
      rep.status = r1.message == "iteration limit" ? SolveStatus::kIterationLimit
                                                   : SolveStatus::kNumericalFailure;
      rep.message = r1.message;
    }
    rep.z = z;
    return finish(rep);
  }
  rep.status = SolveStatus::kFeasible;
  rep.z = z;

  if (w <= 0.0) return finish(rep);
  if (program.has_objective()) {
    const StandardSdp s2 = phase2(program, opts);
    const BackendResult r2 = run_backend(s2, opts, z, "phase2");
    rep.iterations += r2.iterations;
    if (r2.ok) {
      // Pull back toward the interior point until every block is PSD.
      const Vector z2 = r2.y;
      for (double theta : {1.0, 0.999, 0.99, 0.9, 0.5, 0.0}) {
        const Vector zc = (1.0 - theta) * z + theta * z2;
        if (worst(block_min_eigs(program, zc)) >= 0.0) {
          rep.z = zc;
          break;
        }
      }
    } else {
      rep.message = "objective phase failed, keeping the feasibility point: " + r2.message;
    }
  } else if (opts.center && opts.backend == SolverOptions::Backend::kReference) {
    const Vector zc = analytic_center(program, opts, z);
    if (zc.allFinite() && worst(block_min_eigs(program, zc)) >= 0.0) rep.z = zc;
  }
  return finish(rep);
}

Json VerifyReport::to_json() const {
  Json list = Json::array();
  for (const auto& m : margins) {
    list.push_back({{"name", m.name}, {"min_eig", m.min_eig}, {"required", m.required}, {"ok", m.ok}});
  }
  return {{"pass", pass}, {"worst", worst}, {"constraints", list}};
}

VerifyReport verify(const SynthesisProblem& problem, const Assignment& assignment) {
  VerifyReport rep;
  rep.pass = true;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (const auto& c : problem.constraints) {
    const Evaluation e = evaluate(problem, c, assignment);
    ConstraintMargin m;
    m.name = c.name;
    m.min_eig = e.min_eig;
    m.required = c.strict ? problem.epsilon : 0.0;
    m.ok = std::isfinite(e.min_eig) && e.min_eig >= m.required - kSlack;
    rep.pass = rep.pass && m.ok;
    if (e.min_eig - m.required < worst_gap) {
      worst_gap = e.min_eig - m.required;
      rep.worst = c.name;
    }
    rep.margins.push_back(m);
  }
  return rep;
}

}  // namespace koopctl
