#include "distbell/json_io.hpp"

#include <ostream>
#include <stdexcept>

namespace distbell {

using nlohmann::json;

json distribution_to_json(const DiscreteDistribution& d) {
  return json{{"atoms", d.atoms()}, {"probs", d.probs()}};
}

DiscreteDistribution distribution_from_json(const json& j) {
  if (!j.contains("atoms") || !j.contains("probs"))
    throw std::invalid_argument("distribution_from_json: need atoms and probs");
  return make_discrete(j.at("atoms").get<std::vector<double>>(),
                       j.at("probs").get<std::vector<double>>());
}

void write_distribution_csv(std::ostream& os, const DiscreteDistribution& d) {
  os << "atom,prob\n";
  for (int i = 0; i < d.size(); ++i) os << d.atom(i) << ',' << d.prob(i) << '\n';
}

json mdp_to_json(const TabularMdp& mdp) {
  json transition = json::array();
  json reward = json::array();
  for (int x = 0; x < mdp.n_states(); ++x) {
    json trow = json::array();
    json rrow = json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      trow.push_back(mdp.transition_row(x, a));
      rrow.push_back(distribution_to_json(mdp.reward(x, a)));
    }
    transition.push_back(std::move(trow));
    reward.push_back(std::move(rrow));
  }
  std::vector<bool> terminal;
  for (int x = 0; x < mdp.n_states(); ++x) terminal.push_back(mdp.terminal(x));
  return json{{"n_states", mdp.n_states()},   {"n_actions", mdp.n_actions()},
              {"gamma", mdp.gamma()},         {"terminal", terminal},
              {"transition", transition},     {"reward", reward}};
}

TabularMdp mdp_from_json(const json& j) {
  const int n_states = j.at("n_states").get<int>();
  const int n_actions = j.at("n_actions").get<int>();
  const double gamma = j.at("gamma").get<double>();
  const auto terminal = j.at("terminal").get<std::vector<bool>>();

  const json& jt = j.at("transition");
  const json& jr = j.at("reward");
  if (static_cast<int>(jt.size()) != n_states || static_cast<int>(jr.size()) != n_states)
    throw std::invalid_argument("mdp_from_json: transition/reward outer size != n_states");

  std::vector<std::vector<double>> transition;
  std::vector<DiscreteDistribution> reward;
  transition.reserve(static_cast<std::size_t>(n_states * n_actions));
  reward.reserve(static_cast<std::size_t>(n_states * n_actions));
  for (int x = 0; x < n_states; ++x) {
    if (static_cast<int>(jt.at(x).size()) != n_actions ||
        static_cast<int>(jr.at(x).size()) != n_actions)
      throw std::invalid_argument("mdp_from_json: per-state table size != n_actions");
    for (int a = 0; a < n_actions; ++a) {
      transition.push_back(jt.at(x).at(a).get<std::vector<double>>());
      reward.push_back(distribution_from_json(jr.at(x).at(a)));
    }
  }
  return TabularMdp(n_states, n_actions, gamma, std::move(transition), std::move(reward),
                    std::vector<bool>(terminal.begin(), terminal.end()));
}

json iteration_report_to_json(const IterationReport& report) {
  return json{{"deltas", report.deltas},
              {"ratios", report.ratios},
              {"iterations", report.iterations},
              {"converged", report.converged},
              {"cycle_detected", report.cycle_detected},
              {"cycle_period", report.cycle_period}};
}

json logit_table_to_json(const LogitTable& theta) {
  json rows = json::array();
  for (int x = 0; x < theta.n_states(); ++x) {
    json per_state = json::array();
    for (int a = 0; a < theta.n_actions(); ++a) {
      const auto row = theta.logits(x, a);
      per_state.push_back(std::vector<double>(row.begin(), row.end()));
    }
    rows.push_back(std::move(per_state));
  }
  return json{{"support",
               {{"v_min", theta.support().v_min()},
                {"v_max", theta.support().v_max()},
                {"n_atoms", theta.support().n_atoms()}}},
              {"n_states", theta.n_states()},
              {"n_actions", theta.n_actions()},
              {"logits", rows}};
}

void write_history_csv(std::ostream& os, const std::vector<TrainHistoryRow>& history) {
  os << "sweep,mean_d1,max_d1,loss\n";
  for (const auto& row : history)
    os << row.sweep << ',' << row.mean_d1 << ',' << row.max_d1 << ',' << row.loss << '\n';
}

}  // namespace distbell
