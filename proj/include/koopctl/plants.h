#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "koopctl/box.h"
#include "koopctl/linalg.h"

namespace koopctl {

enum class ExampleId { kCookedUp, kCookedUpXy, kPendulum };

ExampleId parse_example_id(const std::string& name);
std::string to_string(ExampleId id);

/// Control-affine plant xdot = f(x) + G(x) u.
class Plant {
 public:
  using DriftFn = std::function<Vector(const Vector&)>;
  using InputFn = std::function<Matrix(const Vector&)>;  // n x m

  Plant(std::string name, int n, int m, DriftFn drift, InputFn input, Box state_box,
        Box input_box, Json params = Json::object());

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const Box& state_box() const { return state_box_; }
  const Box& input_box() const { return input_box_; }
  const Json& params() const { return params_; }

  Vector drift(const Vector& x) const;
  Matrix input_matrix(const Vector& x) const;
  Vector vector_field(const Vector& x, const Vector& u) const;

 private:
  std::string name_;
  int n_;
  int m_;
  DriftFn drift_;
  InputFn input_;
  Box state_box_;
  Box input_box_;
  Json params_;
};

/// Example plants. Accepted params: rho, lambda (cooked_up*), mass, length,
/// friction, gravity (pendulum); plus optional state_box / input_box.
Plant make_example(ExampleId id, const Json& params = Json::object());

/// Samples for one constant input ubar = amplitude * e_channel
/// (channel 0 means ubar = 0).
struct SampleBatch {
  int channel = 0;
  double amplitude = 0.0;
  Vector input;
  Matrix states;       // n x d
  Matrix derivatives;  // n x d
  int count() const { return static_cast<int>(states.cols()); }
};

struct SampleSet {
  int n = 0;
  int m = 0;
  std::uint64_t seed = 0;
  double noise_bound = 0.0;
  Box state_box;
  Box input_box;
  std::vector<SampleBatch> batches;  // index = channel
};

/// d uniform states in the state box; derivatives from the plant plus
/// uniform noise on [-noise_bound, noise_bound] per component. The stream
/// seed is derive_seed(seed, channel).
SampleBatch sample_uniform(const Plant& plant, int channel, double amplitude, int d,
                           std::uint64_t seed, double noise_bound = 0.0);

/// Largest alpha <= 1 with alpha * e_i inside the input box.
double feasible_amplitude(const Box& input_box, int channel);

/// Batches for ubar in {0, a_1 e_1, .., a_m e_m}.
SampleSet collect_samples(const Plant& plant, int d, std::uint64_t seed,
                          double noise_bound = 0.0);

/// samples_u<k>.csv per batch plus samples_meta.json.
void write_sample_set(const SampleSet& s, const std::filesystem::path& dir);
SampleSet read_sample_set(const std::filesystem::path& dir);

}  // namespace koopctl
