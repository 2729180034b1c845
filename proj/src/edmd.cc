#include "koopctl/edmd.h"

#include <sstream>

#include "koopctl/errors.h"

namespace koopctl {

DataMatrices build_data_matrices(const Lifting& lifting, const SampleSet& samples) {
  if (samples.n != lifting.state_dim()) {
    throw DimensionError("build_data_matrices: lifting and samples disagree on n");
  }
  if (static_cast<int>(samples.batches.size()) != samples.m + 1) {
    throw ValidationError("build_data_matrices: need one batch per ubar in {0, e_1..e_m}");
  }
  DataMatrices D;
  D.N = lifting.lifted_dim();
  D.m = samples.m;
  const int N = D.N;
  for (int k = 0; k <= samples.m; ++k) {
    const SampleBatch* batch = nullptr;
    for (const auto& b : samples.batches) {
      if (b.channel == k) batch = &b;
    }
    if (batch == nullptr) {
      throw ValidationError("build_data_matrices: missing batch for channel " + std::to_string(k));
    }
    const int d = batch->count();
    if (d < 1) throw ValidationError("build_data_matrices: empty batch");
    if (!batch->states.allFinite() || !batch->derivatives.allFinite()) {
      throw NumericalError("build_data_matrices: NaN or Inf in samples");
    }
    Matrix X(N + 1, d);
    Matrix Y(N, d);
    for (int j = 0; j < d; ++j) {
      const Vector x = batch->states.col(j);
      X.col(j) = lifting.lift(x);
      const Vector lie = lifting.lift_gradient(x) * batch->derivatives.col(j);
      Y.col(j) = lie.tail(N);
    }
    if (k == 0) {
      D.x_drift = X.bottomRows(N);
      D.y_drift = std::move(Y);
    } else {
      if (!(batch->amplitude > 0.0)) {
        throw ValidationError("build_data_matrices: input batch with non-positive amplitude");
      }
      D.x_input.push_back(std::move(X));
      D.y_input.push_back(std::move(Y));
      D.amplitude.push_back(batch->amplitude);
    }
  }
  return D;
}

Matrix Surrogate::B_tilde() const {
  Matrix out(N(), N() * m());
  for (int i = 0; i < m(); ++i) out.block(0, i * N(), N(), N()) = B[static_cast<size_t>(i)];
  return out;
}

Vector Surrogate::predict(const Vector& z, const Vector& u) const {
  if (z.size() != N() || u.size() != m()) throw DimensionError("predict: dimension mismatch");
  Vector out = A * z + B0 * u;
  for (int i = 0; i < m(); ++i) out += u(i) * (B[static_cast<size_t>(i)] * z);
  return out;
}

Matrix Surrogate::generator_drift() const {
  Matrix G = Matrix::Zero(N() + 1, N() + 1);
  G.bottomRightCorner(N(), N()) = A;
  return G;
}

Matrix Surrogate::generator_input(int i) const {
  Matrix G = Matrix::Zero(N() + 1, N() + 1);
  G.block(1, 0, N(), 1) = B0.col(i);
  G.bottomRightCorner(N(), N()) = A + B[static_cast<size_t>(i)];
  return G;
}

Surrogate Surrogate::with_error_bound(double c_r_, double delta_) const {
  if (!(c_r_ > 0.0)) throw ValidationError("c_r must be positive");
  if (!(delta_ > 0.0 && delta_ < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  Surrogate s = *this;
  s.c_r = c_r_;
  s.delta = delta_;
  return s;
}

Json Surrogate::to_json() const {
  Json b = Json::array();
  for (const auto& Bi : B) b.push_back(matrix_to_json(Bi));
  return {{"A", matrix_to_json(A)}, {"B0", matrix_to_json(B0)}, {"B", b},
          {"c_r", c_r},             {"delta", delta},           {"lifting", lifting}};
}

Surrogate Surrogate::from_json(const Json& j) {
  Surrogate s;
  s.A = matrix_from_json(j.at("A"));
  s.B0 = matrix_from_json(j.at("B0"));
  for (const auto& b : j.at("B")) s.B.push_back(matrix_from_json(b));
  s.c_r = j.value("c_r", 0.0);
  s.delta = j.value("delta", 0.0);
  s.lifting = j.value("lifting", Json());
  if (s.A.rows() != s.A.cols() || s.B0.rows() != s.A.rows() ||
      static_cast<int>(s.B.size()) != s.B0.cols()) {
    throw DimensionError("surrogate JSON: inconsistent shapes");
  }
  for (const auto& Bi : s.B) {
    if (Bi.rows() != s.A.rows() || Bi.cols() != s.A.cols()) {
      throw DimensionError("surrogate JSON: B_i shape");
    }
  }
  return s;
}

Json FitReport::to_json() const {
  Json b = Json::array();
  for (const auto& f : batches) {
    b.push_back({{"channel", f.channel},
                 {"residual_fro", f.residual_fro},
                 {"rank", f.rank},
                 {"full_rank", f.full_rank},
                 {"condition", f.condition}});
  }
  return {{"batches", b}, {"warnings", warnings}};
}

namespace {

Matrix regress(const Matrix& Y, const Matrix& X, double cutoff, int channel, FitReport& report) {
  const PseudoInverse pinv = pseudo_inverse(X, cutoff);
  Matrix theta = Y * pinv.value;
  BatchFit bf;
  bf.channel = channel;
  bf.rank = pinv.rank;
  bf.full_rank = static_cast<int>(X.rows());
  bf.condition = pinv.condition;
  bf.residual_fro = (Y - theta * X).norm();
  if (bf.rank < bf.full_rank) {
    std::ostringstream msg;
    msg << "batch " << channel << ": data matrix rank " << bf.rank << " < " << bf.full_rank
        << " (condition " << bf.condition << "), pseudo-inverse fallback used";
    report.warnings.push_back(msg.str());
  }
  report.batches.push_back(bf);
  return theta;
}

}  // namespace

FitReport fit(const DataMatrices& data, double rank_cutoff) {
  const int N = data.N;
  if (data.x_drift.rows() != N || data.y_drift.rows() != N ||
      data.x_drift.cols() != data.y_drift.cols()) {
    throw DimensionError("fit: drift data shapes");
  }
  if (static_cast<int>(data.x_input.size()) != data.m ||
      static_cast<int>(data.y_input.size()) != data.m ||
      static_cast<int>(data.amplitude.size()) != data.m) {
    throw DimensionError("fit: expected one input batch per channel");
  }
  if (!data.x_drift.allFinite() || !data.y_drift.allFinite()) {
    throw NumericalError("fit: NaN in data");
  }
  FitReport report;
  Surrogate& s = report.surrogate;
  s.A = regress(data.y_drift, data.x_drift, rank_cutoff, 0, report);
  s.B0 = Matrix::Zero(N, data.m);
  for (int i = 0; i < data.m; ++i) {
    const auto& X = data.x_input[static_cast<size_t>(i)];
    const auto& Y = data.y_input[static_cast<size_t>(i)];
    if (X.rows() != N + 1 || Y.rows() != N || X.cols() != Y.cols()) {
      throw DimensionError("fit: input batch shapes");
    }
    if (!X.allFinite() || !Y.allFinite()) throw NumericalError("fit: NaN in data");
    const Matrix theta = regress(Y, X, rank_cutoff, i + 1, report);
    const double alpha = data.amplitude[static_cast<size_t>(i)];
    s.B0.col(i) = theta.col(0) / alpha;
    s.B.push_back((theta.rightCols(N) - s.A) / alpha);
  }
  return report;
}

}  // namespace koopctl
