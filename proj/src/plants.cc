#include "koopctl/plants.h"

#include <cmath>
#include <sstream>

#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/rng.h"

namespace koopctl {

ExampleId parse_example_id(const std::string& name) {
  if (name == "cooked_up") return ExampleId::kCookedUp;
  if (name == "cooked_up_xy") return ExampleId::kCookedUpXy;
  if (name == "pendulum") return ExampleId::kPendulum;
  throw ValidationError("unknown example id '" + name + "'");
}

std::string to_string(ExampleId id) {
  switch (id) {
    case ExampleId::kCookedUp: return "cooked_up";
    case ExampleId::kCookedUpXy: return "cooked_up_xy";
    case ExampleId::kPendulum: return "pendulum";
  }
  return "unknown";
}

Plant::Plant(std::string name, int n, int m, DriftFn drift, InputFn input, Box state_box,
             Box input_box, Json params)
    : name_(std::move(name)),
      n_(n),
      m_(m),
      drift_(std::move(drift)),
      input_(std::move(input)),
      state_box_(std::move(state_box)),
      input_box_(std::move(input_box)),
      params_(std::move(params)) {
  if (n_ < 1 || m_ < 1) throw ValidationError("plant needs n >= 1 and m >= 1");
  if (state_box_.dim() != n_ || input_box_.dim() != m_) {
    throw DimensionError("plant boxes do not match (n, m)");
  }
  if (!input_box_.contains_in_interior(Vector::Zero(m_))) {
    throw ValidationError("input box must contain 0 in its interior");
  }
  const Vector f0 = drift_(Vector::Zero(n_));
  if (f0.size() != n_ || f0.norm() > 1e-12) {
    throw ValidationError("plant drift must vanish at the origin");
  }
}

Vector Plant::drift(const Vector& x) const {
  if (x.size() != n_) throw DimensionError("plant: state dimension");
  return drift_(x);
}

Matrix Plant::input_matrix(const Vector& x) const {
  if (x.size() != n_) throw DimensionError("plant: state dimension");
  return input_(x);
}

Vector Plant::vector_field(const Vector& x, const Vector& u) const {
  if (u.size() != m_) throw DimensionError("plant: input dimension");
  return drift(x) + input_matrix(x) * u;
}

namespace {

Box box_param(const Json& params, const char* key, Box fallback) {
  return params.contains(key) ? Box::from_json(params.at(key)) : std::move(fallback);
}

}  // namespace

Plant make_example(ExampleId id, const Json& params) {
  switch (id) {
    case ExampleId::kCookedUp:
    case ExampleId::kCookedUpXy: {
      const double rho = params.value("rho", -2.0);
      const double lambda = params.value("lambda", 1.0);
      Json p = {{"rho", rho}, {"lambda", lambda}};
      Box xb = box_param(params, "state_box", Box::uniform(2, -1.0, 1.0));
      Box ub = box_param(params, "input_box", Box::uniform(1, -1.0, 1.0));
      p["state_box"] = xb.to_json();
      p["input_box"] = ub.to_json();
      return Plant(
          to_string(id), 2, 1,
          [rho, lambda](const Vector& x) {
            Vector f(2);
            f << rho * x(0), lambda * (x(1) - x(0) * x(0));
            return f;
          },
          [](const Vector&) {
            Matrix g(2, 1);
            g << 0.0, 1.0;
            return g;
          },
          std::move(xb), std::move(ub), std::move(p));
    }
    case ExampleId::kPendulum: {
      const double mass = params.value("mass", 1.0);
      const double length = params.value("length", 1.0);
      const double friction = params.value("friction", 0.01);
      const double gravity = params.value("gravity", 9.81);
      if (!(mass > 0.0) || !(length > 0.0)) throw ValidationError("pendulum: mass, length > 0");
      Json p = {{"mass", mass}, {"length", length}, {"friction", friction}, {"gravity", gravity}};
      Box xb = box_param(params, "state_box", Box::uniform(2, -2.0, 10.0));
      Box ub = box_param(params, "input_box", Box::uniform(1, -10.0, 10.0));
      p["state_box"] = xb.to_json();
      p["input_box"] = ub.to_json();
      const double inertia = mass * length * length;
      return Plant(
          to_string(id), 2, 1,
          [=](const Vector& x) {
            Vector f(2);
            f << x(1), gravity / length * std::sin(x(0)) - friction / inertia * x(1);
            return f;
          },
          [inertia](const Vector&) {
            Matrix g(2, 1);
            g << 0.0, 1.0 / inertia;
            return g;
          },
          std::move(xb), std::move(ub), std::move(p));
    }
  }
  throw ValidationError("unknown example id");
}

SampleBatch sample_uniform(const Plant& plant, int channel, double amplitude, int d,
                           std::uint64_t seed, double noise_bound) {
  if (d < 1) throw ValidationError("sample_uniform: d must be >= 1");
  if (channel < 0 || channel > plant.input_dim()) {
    throw DimensionError("sample_uniform: channel out of range");
  }
  if (noise_bound < 0.0) throw ValidationError("sample_uniform: negative noise bound");
  SampleBatch b;
  b.channel = channel;
  b.amplitude = channel == 0 ? 0.0 : amplitude;
  b.input = Vector::Zero(plant.input_dim());
  if (channel > 0) b.input(channel - 1) = amplitude;
  const int n = plant.state_dim();
  b.states.resize(n, d);
  b.derivatives.resize(n, d);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(channel)));
  for (int j = 0; j < d; ++j) {
    const Vector x = rng.uniform_in(plant.state_box());
    Vector xd = plant.vector_field(x, b.input);
    if (noise_bound > 0.0) {
      for (int i = 0; i < n; ++i) xd(i) += rng.uniform(-noise_bound, noise_bound);
    }
    b.states.col(j) = x;
    b.derivatives.col(j) = xd;
  }
  return b;
}

double feasible_amplitude(const Box& input_box, int channel) {
  const double hi = input_box.upper(channel - 1);
  return std::min(1.0, hi);
}

SampleSet collect_samples(const Plant& plant, int d, std::uint64_t seed, double noise_bound) {
  SampleSet s;
  s.n = plant.state_dim();
  s.m = plant.input_dim();
  s.seed = seed;
  s.noise_bound = noise_bound;
  s.state_box = plant.state_box();
  s.input_box = plant.input_box();
  for (int k = 0; k <= s.m; ++k) {
    const double alpha = k == 0 ? 0.0 : feasible_amplitude(plant.input_box(), k);
    s.batches.push_back(sample_uniform(plant, k, alpha, d, seed, noise_bound));
  }
  return s;
}

void write_sample_set(const SampleSet& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json meta = {{"seed", s.seed},
               {"n", s.n},
               {"m", s.m},
               {"noise_bound", s.noise_bound},
               {"state_box", s.state_box.to_json()},
               {"input_box", s.input_box.to_json()}};
  Json batches = Json::array();
  for (const auto& b : s.batches) {
    const std::string file = "samples_u" + std::to_string(b.channel) + ".csv";
    std::ostringstream out;
    for (int i = 0; i < s.n; ++i) out << (i ? "," : "") << "x_" << i + 1;
    for (int i = 0; i < s.n; ++i) out << ",xdot_" << i + 1;
    out << '\n';
    for (int j = 0; j < b.count(); ++j) {
      for (int i = 0; i < s.n; ++i) out << (i ? "," : "") << format_double(b.states(i, j));
      for (int i = 0; i < s.n; ++i) out << ',' << format_double(b.derivatives(i, j));
      out << '\n';
    }
    write_text_file(dir / file, out.str());
    batches.push_back({{"channel", b.channel},
                       {"amplitude", b.amplitude},
                       {"input", vector_to_json(b.input)},
                       {"d", b.count()},
                       {"file", file}});
  }
  meta["batches"] = batches;
  write_json_file(dir / "samples_meta.json", meta);
}

SampleSet read_sample_set(const std::filesystem::path& dir) {
  const Json meta = read_json_file(dir / "samples_meta.json");
  SampleSet s;
  s.seed = meta.at("seed").get<std::uint64_t>();
  s.n = meta.at("n").get<int>();
  s.m = meta.at("m").get<int>();
  s.noise_bound = meta.at("noise_bound").get<double>();
  s.state_box = Box::from_json(meta.at("state_box"));
  s.input_box = Box::from_json(meta.at("input_box"));
  for (const auto& bj : meta.at("batches")) {
    SampleBatch b;
    b.channel = bj.at("channel").get<int>();
    b.amplitude = bj.at("amplitude").get<double>();
    b.input = vector_from_json(bj.at("input"));
    const int d = bj.at("d").get<int>();
    std::istringstream in(read_text_file(dir / bj.at("file").get<std::string>()));
    std::string line;
    std::getline(in, line);  // header
    b.states.resize(s.n, d);
    b.derivatives.resize(s.n, d);
    int j = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (j >= d) throw IoError("sample file has more rows than recorded");
      std::istringstream ls(line);
      std::string field;
      for (int c = 0; c < 2 * s.n; ++c) {
        if (!std::getline(ls, field, ',')) throw IoError("sample row has too few columns");
        const double v = parse_double(field);
        if (c < s.n) {
          b.states(c, j) = v;
        } else {
          b.derivatives(c - s.n, j) = v;
        }
      }
      ++j;
    }
    if (j != d) throw IoError("sample file has fewer rows than recorded");
    s.batches.push_back(std::move(b));
  }
  return s;
}

}  // namespace koopctl
