#pragma once

#include <stdexcept>
#include <vector>

#include "pomcpshield/model.hpp"
#include "pomcpshield/random.hpp"

namespace pomcpshield {

using ProbVector = std::vector<double>;

bool is_prob_vector(const ProbVector& p, double tol = 1e-9);

// Hellinger distance H(P,Q) = (1/sqrt(2)) * sqrt(sum (sqrt(p)-sqrt(q))^2).
double hellinger(const ProbVector& p, const ProbVector& q);

struct ParticleDeprivationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unweighted particle set representing the agent's belief.
class ParticleBelief {
 public:
  ParticleBelief() = default;
  explicit ParticleBelief(std::vector<StateId> particles);

  static ParticleBelief initial(const Model& model, int capacity, RandomStream& rng);

  const std::vector<StateId>& particles() const { return particles_; }
  int size() const { return static_cast<int>(particles_.size()); }
  bool empty() const { return particles_.empty(); }

  StateId sample(RandomStream& rng) const;

  // Empirical marginal of selector `selector` under `model`.
  ProbVector marginal(const Model& model, int selector) const;

  // All selector marginals, in selector order.
  std::vector<ProbVector> marginals(const Model& model) const;

 private:
  std::vector<StateId> particles_;
};

ProbVector marginal_of(const std::vector<StateId>& particles, const Model& model, int selector);

// Monte-Carlo belief update: resample `capacity` particles consistent with
// having seen observation `obs` after taking `action`, by rejection from the
// prior particle set (with replacement). The rejection budget is
// 8 * capacity accepted-or-rejected attempts; if nothing is accepted the
// belief is deemed deprived. A shortfall after an exhausted budget is filled
// by reinvigorating copies of accepted particles.
ParticleBelief belief_update(const ParticleBelief& prior, const Model& model, ActionId action,
                             ObservationId obs, int capacity, RandomStream& rng);

}  // namespace pomcpshield
