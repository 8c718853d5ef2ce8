#include "pomcpshield/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pomcpshield {

bool is_prob_vector(const ProbVector& p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !(v <= 1.0 + tol)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

double hellinger(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("hellinger: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    acc += d * d;
  }
  return std::sqrt(acc) / std::sqrt(2.0);
}

ParticleBelief::ParticleBelief(std::vector<StateId> particles) : particles_(std::move(particles)) {}

ParticleBelief ParticleBelief::initial(const Model& model, int capacity, RandomStream& rng) {
  std::vector<StateId> ps;
  ps.reserve(static_cast<std::size_t>(capacity));
  for (int i = 0; i < capacity; ++i) ps.push_back(model.sample_start(rng));
  return ParticleBelief(std::move(ps));
}

StateId ParticleBelief::sample(RandomStream& rng) const {
  if (particles_.empty()) throw ParticleDeprivationError("sample from empty belief");
  return particles_[rng.next_below(static_cast<std::uint32_t>(particles_.size()))];
}

ProbVector marginal_of(const std::vector<StateId>& particles, const Model& model, int selector) {
  const int k = model.selector_categories(selector);
  ProbVector m(static_cast<std::size_t>(k), 0.0);
  if (particles.empty()) return m;
  for (StateId s : particles) {
    const int c = model.project(selector, s);
    m[static_cast<std::size_t>(c)] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(particles.size());
  for (double& v : m) v *= inv;
  return m;
}

ProbVector ParticleBelief::marginal(const Model& model, int selector) const {
  return marginal_of(particles_, model, selector);
}

std::vector<ProbVector> ParticleBelief::marginals(const Model& model) const {
  std::vector<ProbVector> out;
  out.reserve(static_cast<std::size_t>(model.selector_count()));
  for (int s = 0; s < model.selector_count(); ++s) out.push_back(marginal(model, s));
  return out;
}

ParticleBelief belief_update(const ParticleBelief& prior, const Model& model, ActionId action,
                             ObservationId obs, int capacity, RandomStream& rng) {
  if (prior.empty()) throw ParticleDeprivationError("belief update from empty belief");
  std::vector<StateId> accepted;
  accepted.reserve(static_cast<std::size_t>(capacity));
  const long budget = 8L * capacity;
  long attempts = 0;
  while (static_cast<int>(accepted.size()) < capacity && attempts < budget) {
    ++attempts;
    const StateId s = prior.sample(rng);
    const StepOutcome out = model.step(s, action, rng);
    if (out.terminal) continue;
    if (out.observation == obs) accepted.push_back(out.next_state);
  }
  if (accepted.empty()) {
    throw ParticleDeprivationError("particle deprivation: no particle consistent with observation " +
                                   std::to_string(obs) + " after action " +
                                   model.action_label(action));
  }
  while (static_cast<int>(accepted.size()) < capacity) {
    const StateId base = accepted[rng.next_below(static_cast<std::uint32_t>(accepted.size()))];
    accepted.push_back(model.reinvigorate(base, rng));
  }
  return ParticleBelief(std::move(accepted));
}

}  // namespace pomcpshield
