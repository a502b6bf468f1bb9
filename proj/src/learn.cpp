#include "distbell/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "distbell/metrics.hpp"
#include "distbell/numeric.hpp"

namespace distbell {

namespace {

void softmax_into(std::span<const double> logits, std::span<double> out) {
  double top = logits[0];
  for (double v : logits) top = std::max(top, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
}

}  // namespace

LogitTable::LogitTable(CategoricalSupport support, int n_states, int n_actions)
    : support_(support), n_states_(n_states), n_actions_(n_actions) {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("LogitTable: need at least one state and action");
  rows_.assign(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions),
               std::vector<double>(static_cast<std::size_t>(support_.n_atoms()), 0.0));
}

void LogitTable::probabilities(int x, int a, std::span<double> out) const {
  softmax_into(logits(x, a), out);
}

CategoricalDistribution LogitTable::distribution(int x, int a) const {
  std::vector<double> probs(static_cast<std::size_t>(support_.n_atoms()));
  probabilities(x, a, probs);
  return CategoricalDistribution(support_, std::move(probs));
}

double LogitTable::q_value(int x, int a) const {
  std::vector<double> probs(static_cast<std::size_t>(support_.n_atoms()));
  probabilities(x, a, probs);
  double q = 0.0;
  for (int i = 0; i < support_.n_atoms(); ++i) q += probs[static_cast<std::size_t>(i)] * support_.atom(i);
  return q;
}

double LogitTable::max_abs_logit() const {
  double worst = 0.0;
  for (const auto& row : rows_)
    for (double v : row) worst = std::max(worst, std::abs(v));
  return worst;
}

ValueDistributionTable LogitTable::to_table() const {
  ValueDistributionTable out(n_states_, n_actions_,
                             std::max(std::abs(support_.v_min()), std::abs(support_.v_max())));
  for (int x = 0; x < n_states_; ++x)
    for (int a = 0; a < n_actions_; ++a) out.set(x, a, distribution(x, a).to_discrete());
  return out;
}

TransitionSample draw_transition(const TabularMdp& mdp, int x, int a, Rng& rng) {
  const double r = mdp.reward(x, a).sample(rng);
  const int next = mdp.sample_successor(x, a, rng);
  const double gamma_t = mdp.terminal(next) ? 0.0 : mdp.gamma();
  return TransitionSample{x, a, r, next, gamma_t};
}

void project_into(const CategoricalSupport& support, std::span<const double> target_atoms,
                  std::span<const double> target_masses, std::span<double> out) {
  const int n = support.n_atoms();
  const double v_min = support.v_min();
  const double dz = support.delta_z();
  for (std::size_t j = 0; j < target_atoms.size(); ++j) {
    const double w = target_masses[j];
    if (w == 0.0) continue;
    const double y = support.clamp(target_atoms[j]);
    double b = (y - v_min) / dz;
    b = std::min(std::max(b, 0.0), static_cast<double>(n - 1));
    const int l = static_cast<int>(std::floor(b));
    const int u = static_cast<int>(std::ceil(b));
    if (l == u) {
      // On-grid atom: the whole mass belongs to the single coincident atom.
      out[static_cast<std::size_t>(l)] += w;
    } else {
      out[static_cast<std::size_t>(l)] += w * (static_cast<double>(u) - b);
      out[static_cast<std::size_t>(u)] += w * (b - static_cast<double>(l));
    }
  }
}

CategoricalDistribution project(const CategoricalSupport& support,
                                const DiscreteDistribution& target) {
  std::vector<double> out(static_cast<std::size_t>(support.n_atoms()), 0.0);
  project_into(support, target.atoms(), target.probs(), out);
  return CategoricalDistribution(support, std::move(out));
}

CategoricalDistribution sample_bellman_target(const LogitTable& theta_target, const TabularMdp& mdp,
                                              const TransitionSample& sample,
                                              const TieBreak& tie_break) {
  QTable q(1, mdp.n_actions());
  for (int a = 0; a < mdp.n_actions(); ++a) q.at(0, a) = theta_target.q_value(sample.x_next, a);
  double best = q.at(0, 0);
  for (int a = 1; a < mdp.n_actions(); ++a) best = std::max(best, q.at(0, a));
  std::vector<int> tied;
  for (int a = 0; a < mdp.n_actions(); ++a) {
    if (q.at(0, a) == best) tied.push_back(a);
  }
  const int a_star = tie_break(sample.x_next, tied, nullptr);

  const DiscreteDistribution next = theta_target.distribution(sample.x_next, a_star).to_discrete();
  return project(theta_target.support(), scale_shift(next, sample.gamma_t, sample.r));
}

CategoricalDistribution evaluation_bellman_target(const LogitTable& theta_target,
                                                  const PolicyTable& policy,
                                                  const TransitionSample& sample, Rng& rng) {
  const int a_next = policy.sample_action(sample.x_next, rng);
  const DiscreteDistribution next = theta_target.distribution(sample.x_next, a_next).to_discrete();
  return project(theta_target.support(), scale_shift(next, sample.gamma_t, sample.r));
}

LossGrad ce_loss_and_gradient(const CategoricalDistribution& target,
                              std::span<const double> logits) {
  const int n = target.support().n_atoms();
  if (static_cast<int>(logits.size()) != n)
    throw std::invalid_argument("ce_loss_and_gradient: logits length != n_atoms");
  LossGrad out;
  out.grad.resize(static_cast<std::size_t>(n));
  softmax_into(logits, out.grad);
  NeumaierSum loss;
  for (int i = 0; i < n; ++i) {
    const double m = target.prob(i);
    if (m > 0.0) loss.add(-m * std::log(std::max(out.grad[static_cast<std::size_t>(i)], 1e-300)));
  }
  out.loss = loss.value();
  for (int i = 0; i < n; ++i) out.grad[static_cast<std::size_t>(i)] -= target.prob(i);
  return out;
}

LossGrad wasserstein_loss_and_subgradient(std::span<const double> logits,
                                          const CategoricalSupport& support,
                                          const DiscreteDistribution& target) {
  const int n = support.n_atoms();
  if (static_cast<int>(logits.size()) != n)
    throw std::invalid_argument("wasserstein_loss_and_subgradient: logits length != n_atoms");

  std::vector<double> p(static_cast<std::size_t>(n));
  softmax_into(logits, p);

  // Walk the union of atom positions; between consecutive positions the
  // c.d.f. gap is constant. mark[k] records the signed length accumulated
  // strictly before support atom k; the suffix total - mark[k] is the loss
  // derivative in p_k.
  std::vector<double> mark(static_cast<std::size_t>(n), 0.0);
  NeumaierSum loss;
  double prefix = 0.0;
  double cp = 0.0;
  double cq = 0.0;
  int i = 0;
  int j = 0;
  double prev_pos = 0.0;
  bool have_prev = false;
  while (i < n || j < target.size()) {
    const double zi = i < n ? support.atom(i) : std::numeric_limits<double>::infinity();
    const double yj = j < target.size() ? target.atom(j) : std::numeric_limits<double>::infinity();
    const double pos = std::min(zi, yj);
    if (have_prev && pos > prev_pos) {
      const double gap = cp - cq;
      const double len = pos - prev_pos;
      loss.add(len * std::abs(gap));
      // Gaps at float-noise level count as zero: a segment where the
      // c.d.f.s agree contributes no subgradient.
      if (std::abs(gap) > 1e-12) prefix += gap > 0.0 ? len : -len;
    }
    while (i < n && support.atom(i) == pos) {
      mark[static_cast<std::size_t>(i)] = prefix;
      cp += p[static_cast<std::size_t>(i)];
      ++i;
    }
    while (j < target.size() && target.atom(j) == pos) {
      cq += target.prob(j);
      ++j;
    }
    prev_pos = pos;
    have_prev = true;
  }

  // Chain d(loss)/d(p_k) through the softmax Jacobian.
  double mean_g = 0.0;
  for (int k = 0; k < n; ++k)
    mean_g += (prefix - mark[static_cast<std::size_t>(k)]) * p[static_cast<std::size_t>(k)];
  LossGrad out;
  out.loss = std::max(loss.value(), 0.0);
  out.grad.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double gk = prefix - mark[static_cast<std::size_t>(k)];
    out.grad[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)] * (gk - mean_g);
  }
  return out;
}

CategoricalDistribution bernoulli_target(const LogitTable& theta_target, const TabularMdp& mdp,
                                         const TransitionSample& sample,
                                         const TieBreak& tie_break) {
  const CategoricalSupport& support = theta_target.support();
  if (support.n_atoms() != 2)
    throw std::invalid_argument("bernoulli_target: support must have exactly 2 atoms");

  std::vector<double> q(static_cast<std::size_t>(mdp.n_actions()));
  for (int a = 0; a < mdp.n_actions(); ++a)
    q[static_cast<std::size_t>(a)] = theta_target.q_value(sample.x_next, a);
  double best = q[0];
  for (double v : q) best = std::max(best, v);
  std::vector<int> tied;
  for (int a = 0; a < mdp.n_actions(); ++a) {
    if (q[static_cast<std::size_t>(a)] == best) tied.push_back(a);
  }
  const int a_star = tie_break(sample.x_next, tied, nullptr);

  const double mean = sample.r + sample.gamma_t * q[static_cast<std::size_t>(a_star)];
  const double hi = std::min(std::max((mean - support.v_min()) / support.delta_z(), 0.0), 1.0);
  return CategoricalDistribution(support, {1.0 - hi, hi});
}

namespace {

// Frozen snapshot of the target parameters: softmax rows and expected
// values for every pair, refreshed between sweeps.
struct FrozenTarget {
  int n_atoms = 0;
  std::vector<double> probs;  // [pair * n_atoms + i]
  std::vector<double> q;      // [pair]

  void refresh(const LogitTable& theta) {
    const int n = theta.support().n_atoms();
    n_atoms = n;
    const int pairs = theta.n_states() * theta.n_actions();
    probs.resize(static_cast<std::size_t>(pairs) * static_cast<std::size_t>(n));
    q.resize(static_cast<std::size_t>(pairs));
    for (int x = 0; x < theta.n_states(); ++x) {
      for (int a = 0; a < theta.n_actions(); ++a) {
        const int pair = x * theta.n_actions() + a;
        std::span<double> row(probs.data() + static_cast<std::size_t>(pair) * static_cast<std::size_t>(n),
                              static_cast<std::size_t>(n));
        theta.probabilities(x, a, row);
        double qv = 0.0;
        for (int i = 0; i < n; ++i) qv += row[static_cast<std::size_t>(i)] * theta.support().atom(i);
        q[static_cast<std::size_t>(pair)] = qv;
      }
    }
  }

  std::span<const double> row(int pair) const {
    return {probs.data() + static_cast<std::size_t>(pair) * static_cast<std::size_t>(n_atoms),
            static_cast<std::size_t>(n_atoms)};
  }
};

}  // namespace

TrainResult train(const TabularMdp& mdp, const PolicyTable& policy,
                  const CategoricalSupport& support, const TrainConfig& config,
                  const ValueDistributionTable* oracle) {
  const int n = support.n_atoms();
  const int n_states = mdp.n_states();
  const int n_actions = mdp.n_actions();
  if (config.sweeps < 1) throw std::invalid_argument("train: sweeps must be >= 1");
  if (!(config.step_size > 0.0)) throw std::invalid_argument("train: step_size must be positive");
  if (config.regime == TrainRegime::supervised_target && oracle == nullptr)
    throw std::invalid_argument("train: supervised regime requires an oracle table");
  if (config.loss == TrainLoss::bernoulli && n != 2)
    throw std::invalid_argument("train: bernoulli loss requires a 2-atom support");

  TrainResult result{LogitTable(support, n_states, n_actions), {}};
  LogitTable& theta = result.theta;

  // Supervised targets are fixed for the whole run.
  const bool supervised = config.regime == TrainRegime::supervised_target;
  std::vector<std::vector<double>> fixed_target;  // per pair, CE/Bernoulli mass vector
  if (supervised && config.loss != TrainLoss::wasserstein_p1) {
    fixed_target.resize(static_cast<std::size_t>(mdp.pair_count()));
    for (int x = 0; x < n_states; ++x) {
      for (int a = 0; a < n_actions; ++a) {
        const DiscreteDistribution& target = oracle->at(x, a);
        std::vector<double> m(static_cast<std::size_t>(n), 0.0);
        if (config.loss == TrainLoss::categorical_ce) {
          project_into(support, target.atoms(), target.probs(), m);
        } else {
          const double hi =
              std::min(std::max((target.mean() - support.v_min()) / support.delta_z(), 0.0), 1.0);
          m[0] = 1.0 - hi;
          m[1] = hi;
        }
        fixed_target[static_cast<std::size_t>(mdp.pair_index(x, a))] = std::move(m);
      }
    }
  }

  Rng rng = Rng::child(config.seed, "train");
  FrozenTarget frozen;
  const int refresh = std::max(config.target_refresh_interval, 1);
  const int record_every = config.history_interval > 0
                               ? config.history_interval
                               : std::max(1, config.sweeps / 100);

  std::vector<double> m(static_cast<std::size_t>(n));
  std::vector<double> pcur(static_cast<std::size_t>(n));
  std::vector<double> mixed(static_cast<std::size_t>(n));
  std::vector<double> shifted_atoms(static_cast<std::size_t>(n));

  for (int sweep = 1; sweep <= config.sweeps; ++sweep) {
    if (!supervised && (sweep - 1) % refresh == 0) frozen.refresh(theta);
    const bool record = sweep % record_every == 0 || sweep == config.sweeps;
    NeumaierSum sweep_loss;

    for (int x = 0; x < n_states; ++x) {
      for (int a = 0; a < n_actions; ++a) {
        const int pair = mdp.pair_index(x, a);

        // Build the target mass vector m (CE/Bernoulli) or the raw target
        // law (Wasserstein).
        const DiscreteDistribution* w1_target = nullptr;
        std::optional<DiscreteDistribution> w1_sampled;
        if (supervised) {
          if (config.loss == TrainLoss::wasserstein_p1) {
            w1_target = &oracle->at(x, a);
          } else {
            std::copy(fixed_target[static_cast<std::size_t>(pair)].begin(),
                      fixed_target[static_cast<std::size_t>(pair)].end(), m.begin());
          }
        } else {
          const TransitionSample sample = draw_transition(mdp, x, a, rng);
          // Pick the next action: drawn from the fixed policy for
          // evaluation, or the frozen greedy action for control.
          int a_next;
          if (config.policy_eval) {
            a_next = policy.sample_action(sample.x_next, rng);
          } else {
            a_next = 0;
            double best = frozen.q[static_cast<std::size_t>(mdp.pair_index(sample.x_next, 0))];
            for (int ap = 1; ap < n_actions; ++ap) {
              const double v = frozen.q[static_cast<std::size_t>(mdp.pair_index(sample.x_next, ap))];
              if (v > best) {
                best = v;
                a_next = ap;
              }
            }
          }
          const int tpair = mdp.pair_index(sample.x_next, a_next);
          const auto row = frozen.row(tpair);
          std::copy(row.begin(), row.end(), mixed.begin());
          const double q_next = frozen.q[static_cast<std::size_t>(tpair)];

          for (int i = 0; i < n; ++i)
            shifted_atoms[static_cast<std::size_t>(i)] = sample.r + sample.gamma_t * support.atom(i);

          if (config.loss == TrainLoss::categorical_ce) {
            std::fill(m.begin(), m.end(), 0.0);
            project_into(support, shifted_atoms, mixed, m);
          } else if (config.loss == TrainLoss::bernoulli) {
            const double mean = sample.r + sample.gamma_t * q_next;
            const double hi =
                std::min(std::max((mean - support.v_min()) / support.delta_z(), 0.0), 1.0);
            m[0] = 1.0 - hi;
            m[1] = hi;
          } else {
            // Per-sample Wasserstein target: the Bellman sample taken all
            // the way down to a scalar, with the next-state atom drawn from
            // the frozen row.
            const double q = rng.uniform_open_closed();
            double cum = 0.0;
            int draw = n - 1;
            for (int i = 0; i < n; ++i) {
              cum += mixed[static_cast<std::size_t>(i)];
              if (cum >= q) {
                draw = i;
                break;
              }
            }
            w1_sampled.emplace(DiscreteDistribution::point_mass(
                shifted_atoms[static_cast<std::size_t>(draw)]));
            w1_target = &*w1_sampled;
          }
        }

        // Loss gradient and plain gradient-descent step.
        auto row = theta.logits(x, a);
        if (config.loss == TrainLoss::wasserstein_p1) {
          LossGrad lg = wasserstein_loss_and_subgradient(row, support, *w1_target);
          for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] -= config.step_size * lg.grad[static_cast<std::size_t>(i)];
          if (record) sweep_loss.add(lg.loss);
        } else {
          softmax_into(row, pcur);
          if (record) {
            NeumaierSum ce;
            for (int i = 0; i < n; ++i) {
              if (m[static_cast<std::size_t>(i)] > 0.0)
                ce.add(-m[static_cast<std::size_t>(i)] *
                       std::log(std::max(pcur[static_cast<std::size_t>(i)], 1e-300)));
            }
            sweep_loss.add(ce.value());
          }
          for (int i = 0; i < n; ++i) {
            row[static_cast<std::size_t>(i)] -=
                config.step_size * (pcur[static_cast<std::size_t>(i)] - m[static_cast<std::size_t>(i)]);
          }
        }
      }
    }

    if (theta.max_abs_logit() > config.divergence_limit)
      throw std::runtime_error("train: diverged at sweep " + std::to_string(sweep) +
                               " (|logit| > " + std::to_string(config.divergence_limit) + ")");

    if (record) {
      TrainHistoryRow row{sweep, 0.0, 0.0,
                          sweep_loss.value() / static_cast<double>(mdp.pair_count())};
      if (oracle != nullptr) {
        NeumaierSum mean_d1;
        double max_d1 = 0.0;
        for (int x = 0; x < n_states; ++x) {
          for (int a = 0; a < n_actions; ++a) {
            const double d =
                wasserstein(theta.distribution(x, a).to_discrete(), oracle->at(x, a), 1.0);
            mean_d1.add(d);
            max_d1 = std::max(max_d1, d);
          }
        }
        row.mean_d1 = mean_d1.value() / static_cast<double>(mdp.pair_count());
        row.max_d1 = max_d1;
      } else {
        row.mean_d1 = std::numeric_limits<double>::quiet_NaN();
        row.max_d1 = std::numeric_limits<double>::quiet_NaN();
      }
      result.history.push_back(row);
    }
  }

  return result;
}

}  // namespace distbell
