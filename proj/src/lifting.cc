#include "koopctl/lifting.h"

#include <cmath>
#include <sstream>

#include "koopctl/errors.h"
#include "koopctl/rng.h"

namespace koopctl {
namespace {

constexpr double kZeroTol = 1e-12;

Observable make_constant(int n) {
  return {"constant", Json::object(), [](const Vector&) { return 1.0; },
          [n](const Vector&) { return Vector::Zero(n).eval(); }};
}

Observable make_coordinate(int n, int k) {
  return {"coordinate", {{"index", k}}, [k](const Vector& x) { return x(k); },
          [n, k](const Vector&) {
            Vector g = Vector::Zero(n);
            g(k) = 1.0;
            return g;
          }};
}

void check_index(int n, int k) {
  if (k < 0 || k >= n) throw ValidationError("observable index out of range");
}

double eval_term(const PolynomialTerm& t, const Vector& x) {
  double v = t.coeff;
  for (size_t k = 0; k < t.powers.size(); ++k) {
    if (t.powers[k] != 0) v *= std::pow(x(static_cast<Eigen::Index>(k)), t.powers[k]);
  }
  return v;
}

Vector grad_term(const PolynomialTerm& t, const Vector& x) {
  const int n = static_cast<int>(x.size());
  Vector g = Vector::Zero(n);
  for (int k = 0; k < n; ++k) {
    const int p = t.powers[static_cast<size_t>(k)];
    if (p == 0) continue;
    double v = t.coeff * p * std::pow(x(k), p - 1);
    for (int j = 0; j < n; ++j) {
      if (j != k && t.powers[static_cast<size_t>(j)] != 0) {
        v *= std::pow(x(j), t.powers[static_cast<size_t>(j)]);
      }
    }
    g(k) = v;
  }
  return g;
}

Json terms_to_json(const std::vector<PolynomialTerm>& terms) {
  Json out = Json::array();
  for (const auto& t : terms) out.push_back({{"coeff", t.coeff}, {"powers", t.powers}});
  return out;
}

Observable make_polynomial(int n, std::vector<PolynomialTerm> terms, std::string kind) {
  if (terms.empty()) throw ValidationError("polynomial observable without terms");
  for (const auto& t : terms) {
    if (static_cast<int>(t.powers.size()) != n) {
      throw DimensionError("polynomial term has wrong number of powers");
    }
    for (int p : t.powers) {
      if (p < 0) throw ValidationError("negative power in polynomial observable");
    }
  }
  Json params = kind == "monomial" ? Json{{"powers", terms.front().powers}}
                                   : Json{{"terms", terms_to_json(terms)}};
  return {std::move(kind), std::move(params),
          [terms](const Vector& x) {
            double v = 0.0;
            for (const auto& t : terms) v += eval_term(t, x);
            return v;
          },
          [terms, n](const Vector& x) {
            Vector g = Vector::Zero(n);
            for (const auto& t : terms) g += grad_term(t, x);
            return g;
          }};
}

Observable make_sin(int n, int k) {
  check_index(n, k);
  return {"sin", {{"index", k}}, [k](const Vector& x) { return std::sin(x(k)); },
          [n, k](const Vector& x) {
            Vector g = Vector::Zero(n);
            g(k) = std::cos(x(k));
            return g;
          }};
}

Observable make_cos_minus_one(int n, int k) {
  check_index(n, k);
  return {"cos_minus_one", {{"index", k}},
          [k](const Vector& x) { return std::cos(x(k)) - 1.0; },
          [n, k](const Vector& x) {
            Vector g = Vector::Zero(n);
            g(k) = -std::sin(x(k));
            return g;
          }};
}

Observable observable_from_json(int n, const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const Json params = j.value("params", Json::object());
  if (kind == "monomial") {
    return make_polynomial(n, {{1.0, params.at("powers").get<std::vector<int>>()}}, kind);
  }
  if (kind == "polynomial") {
    std::vector<PolynomialTerm> terms;
    for (const auto& t : params.at("terms")) {
      terms.push_back({t.at("coeff").get<double>(), t.at("powers").get<std::vector<int>>()});
    }
    return make_polynomial(n, std::move(terms), kind);
  }
  if (kind == "sin") return make_sin(n, params.at("index").get<int>());
  if (kind == "cos_minus_one") return make_cos_minus_one(n, params.at("index").get<int>());
  if (kind == "custom") {
    throw ValidationError("custom observables cannot be restored from a descriptor");
  }
  throw ValidationError("unknown observable kind '" + kind + "'");
}

}  // namespace

Vector finite_difference_gradient(const Observable::ValueFn& f, const Vector& x) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x(k)));
    xp(k) = x(k) + h;
    const double fp = f(xp);
    xp(k) = x(k) - h;
    const double fm = f(xp);
    xp(k) = x(k);
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Lifting::Builder::Builder(int n) : n_(n) {
  if (n < 1) throw ValidationError("lifting needs n >= 1");
}

Lifting::Builder& Lifting::Builder::add_monomial(std::vector<int> powers) {
  extra_.push_back(make_polynomial(n_, {{1.0, std::move(powers)}}, "monomial"));
  return *this;
}

Lifting::Builder& Lifting::Builder::add_polynomial(std::vector<PolynomialTerm> terms) {
  extra_.push_back(make_polynomial(n_, std::move(terms), "polynomial"));
  return *this;
}

Lifting::Builder& Lifting::Builder::add_sin(int index) {
  extra_.push_back(make_sin(n_, index));
  return *this;
}

Lifting::Builder& Lifting::Builder::add_cos_minus_one(int index) {
  extra_.push_back(make_cos_minus_one(n_, index));
  return *this;
}

Lifting::Builder& Lifting::Builder::add_custom(std::string name, Observable::ValueFn value,
                                               Observable::GradientFn gradient) {
  if (!value) throw ValidationError("custom observable without value function");
  extra_.push_back({"custom", {{"name", std::move(name)}}, std::move(value), std::move(gradient)});
  return *this;
}

Lifting::Builder& Lifting::Builder::lipschitz_hint(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("lipschitz hint must be positive");
  hint_ = l;
  return *this;
}

Lifting Lifting::Builder::build() const {
  std::vector<Observable> obs;
  obs.reserve(static_cast<size_t>(n_) + 1 + extra_.size());
  obs.push_back(make_constant(n_));
  for (int k = 0; k < n_; ++k) obs.push_back(make_coordinate(n_, k));
  obs.insert(obs.end(), extra_.begin(), extra_.end());
  return Lifting(n_, std::move(obs), hint_);
}

Lifting::Lifting(int n, std::vector<Observable> obs, std::optional<double> hint)
    : n_(n), observables_(std::move(obs)), hint_(hint) {
  const Vector zero = Vector::Zero(n_);
  for (size_t k = static_cast<size_t>(n_) + 1; k < observables_.size(); ++k) {
    const double v = observables_[k].value(zero);
    if (!std::isfinite(v) || std::abs(v) > kZeroTol) {
      std::ostringstream msg;
      msg << "observable " << k << " (" << observables_[k].kind << ") is " << v
          << " at the origin, expected 0";
      throw ValidationError(msg.str());
    }
  }
}

Lifting Lifting::from_descriptor(const Json& j) {
  const int n = j.at("n").get<int>();
  const int big_n = j.at("N").get<int>();
  const auto& list = j.at("observables");
  if (static_cast<int>(list.size()) != big_n + 1) {
    throw ValidationError("descriptor: expected N+1 observables");
  }
  if (big_n < n) throw ValidationError("descriptor: N < n");
  if (list[0].at("kind") != "constant") {
    throw ValidationError("descriptor: observable 0 must be the constant");
  }
  for (int k = 1; k <= n; ++k) {
    const auto& o = list[static_cast<size_t>(k)];
    if (o.at("kind") != "coordinate" || o.at("params").at("index").get<int>() != k - 1) {
      throw ValidationError("descriptor: observables 1..n must be the coordinates in order");
    }
  }
  std::vector<Observable> obs;
  obs.push_back(make_constant(n));
  for (int k = 0; k < n; ++k) obs.push_back(make_coordinate(n, k));
  for (size_t k = static_cast<size_t>(n) + 1; k < list.size(); ++k) {
    obs.push_back(observable_from_json(n, list[k]));
  }
  std::optional<double> hint;
  if (j.contains("lipschitz_hint") && !j["lipschitz_hint"].is_null()) {
    hint = j["lipschitz_hint"].get<double>();
  }
  return Lifting(n, std::move(obs), hint);
}

void Lifting::check_dim(const Vector& x) const {
  if (x.size() != n_) {
    std::ostringstream msg;
    msg << "lifting expects a state of length " << n_ << ", got " << x.size();
    throw DimensionError(msg.str());
  }
}

Vector Lifting::lift(const Vector& x) const {
  check_dim(x);
  Vector out(observables_.size());
  out(0) = 1.0;
  out.segment(1, n_) = x;
  for (size_t k = static_cast<size_t>(n_) + 1; k < observables_.size(); ++k) {
    const double v = observables_[k].value(x);
    if (!std::isfinite(v)) throw NumericalError("observable evaluated to a non-finite value");
    out(static_cast<Eigen::Index>(k)) = v;
  }
  return out;
}

Vector Lifting::lift_reduced(const Vector& x) const {
  const Vector full = lift(x);
  return full.tail(full.size() - 1);
}

Matrix Lifting::lift_gradient(const Vector& x) const {
  check_dim(x);
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(observables_.size()), n_);
  g.block(1, 0, n_, n_).setIdentity();
  for (size_t k = static_cast<size_t>(n_) + 1; k < observables_.size(); ++k) {
    const auto& o = observables_[k];
    const Vector row = o.gradient ? o.gradient(x) : finite_difference_gradient(o.value, x);
    if (row.size() != n_) throw DimensionError("observable gradient has wrong length");
    if (!row.allFinite()) throw NumericalError("observable gradient is not finite");
    g.row(static_cast<Eigen::Index>(k)) = row.transpose();
  }
  return g;
}

Json Lifting::descriptor() const {
  Json obs = Json::array();
  for (const auto& o : observables_) obs.push_back({{"kind", o.kind}, {"params", o.params}});
  Json j = {{"n", n_}, {"N", lifted_dim()}, {"observables", obs}};
  j["lipschitz_hint"] = hint_ ? Json(*hint_) : Json(nullptr);
  return j;
}

double estimate_lipschitz(const Lifting& lifting, const Box& box, int samples,
                          std::uint64_t seed) {
  if (box.dim() != lifting.state_dim()) throw DimensionError("estimate_lipschitz: box dimension");
  if (!(box.volume() > 0.0)) throw ValidationError("estimate_lipschitz: degenerate box");
  if (samples < 2) throw ValidationError("estimate_lipschitz: need at least 2 samples");
  const double diam = box.width().maxCoeff();
  const bool has_origin = box.contains(Vector::Zero(box.dim()));
  double best = 0.0;
  auto update = [&](const Vector& x, const Vector& y) {
    const double dx = (x - y).norm();
    if (dx <= 0.0) return;
    best = std::max(best, (lifting.lift(x) - lifting.lift(y)).norm() / dx);
  };
  // Pair i mixes a far partner, a near partner (log-uniform separation, so
  // local slopes are seen) and the origin.
  for (int i = 0; i < samples; ++i) {
    Rng rng(derive_seed(seed, 0x4c495053ULL, static_cast<std::uint64_t>(i)));
    const Vector x = rng.uniform_in(box);
    update(x, rng.uniform_in(box));
    const double sep = diam * std::pow(10.0, -6.0 * rng.uniform());
    Vector y = x + sep * rng.unit_vector(box.dim());
    y = y.cwiseMax(box.lower).cwiseMin(box.upper);
    update(x, y);
    if (has_origin) update(x, Vector::Zero(box.dim()));
  }
  return best;
}

Lifting identity_lifting(int n) { return Lifting::Builder(n).build(); }

namespace {
double eigen_coefficient(double rho, double lambda) {
  if (lambda == 2.0 * rho) throw ValidationError("lifting coefficient undefined for lambda = 2 rho");
  return lambda / (lambda - 2.0 * rho);
}
}  // namespace

Lifting cooked_up_lifting(double rho, double lambda) {
  const double c = eigen_coefficient(rho, lambda);
  return Lifting::Builder(2).add_polynomial({{1.0, {0, 1}}, {-c, {2, 0}}}).build();
}

Lifting cooked_up_xy_lifting(double rho, double lambda) {
  const double c = eigen_coefficient(rho, lambda);
  return Lifting::Builder(2)
      .add_polynomial({{1.0, {0, 1}}, {-c, {2, 0}}})
      .add_monomial({1, 1})
      .build();
}

Lifting pendulum_lifting() { return Lifting::Builder(2).add_sin(0).build(); }

}  // namespace koopctl
