#pragma once

#include <iosfwd>
#include <json.hpp>

#include "distbell/bellman.hpp"
#include "distbell/learn.hpp"
#include "distbell/mdp.hpp"

namespace distbell {

/// {"atoms": [...], "probs": [...]}
nlohmann::json distribution_to_json(const DiscreteDistribution& d);
DiscreteDistribution distribution_from_json(const nlohmann::json& j);

/// One "atom,prob" row per atom, after a header line.
void write_distribution_csv(std::ostream& os, const DiscreteDistribution& d);

/// {"n_states":.., "n_actions":.., "gamma":.., "terminal":[...],
///  "transition":[[[p,...]...]...], "reward":[[{atoms,probs}...]...]}
nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

nlohmann::json iteration_report_to_json(const IterationReport& report);

nlohmann::json logit_table_to_json(const LogitTable& theta);

/// "sweep,mean_d1,max_d1,loss" rows.
void write_history_csv(std::ostream& os, const std::vector<TrainHistoryRow>& history);

}  // namespace distbell
