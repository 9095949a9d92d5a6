#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "teamsem/eval_esof.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/model.hpp"
#include "teamsem/syntax.hpp"

namespace teamsem {

using Rng = std::mt19937_64;

/// Independent stream for trial `index` of a run seeded with `seed`.
Rng trial_rng(std::uint64_t seed, std::uint64_t index);

/// Between 1 and max_rows distinct rows over vars with weights in
/// (1/den)Z for a random den in [1, max_denominator] (rows may collapse
/// when den is small).
ProbabilisticTeam random_team(Rng& rng, const VarList& vars, int domain_size, std::size_t max_rows,
                              int max_denominator);

/// Random unary relation "R" on A (used by the random formulas).
Structure random_structure(Rng& rng, int domain_size);

/// Quantifier-free formula over vars built from =, !=, R, ~R, approx and
/// cindep atoms with and/or up to the given depth.
FormulaPtr random_qf_formula(Rng& rng, const VarList& vars, int depth);

/// Like random_qf_formula but also introduces quantifiers over fresh
/// variables ("q0", "q1", ...) up to max_quantifiers.
FormulaPtr random_formula(Rng& rng, const VarList& vars, int depth, int max_quantifiers);

/// The team's distribution as a function of arity |X.vars()| over A
/// (arguments in X.vars() order).
Distribution team_distribution(const ProbabilisticTeam& X);

/// A plus the team's distribution under the name f.
Structure with_team_function(Structure A, const ProbabilisticTeam& X, const std::string& f = "f");

struct RoundtripOptions {
  int trials = 100;
  int domain = 2;
  std::size_t rows = 4;
  int resolution = 4;
  int max_vars = 3;
  int depth = 2;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  std::uint64_t esof_node_budget = 2'000'000;
};

struct RoundtripTrial {
  int index = 0;
  std::string formula;
  std::string team;
  VerdictKind prob = VerdictKind::Unknown;
  VerdictKind esof = VerdictKind::Unknown;
  std::string error;  // nonempty when a side refused the input
};

struct RoundtripReport {
  std::vector<RoundtripTrial> trials;
  int both_decided = 0;
  int agreements = 0;
  int disagreements = 0;
  int prob_unknown = 0;
  int esof_unknown = 0;
  int errors = 0;
  double seconds = 0;

  double unknown_rate() const;
};

/// Evaluates random quantifier-free formulas on random teams both directly
/// and through to_esof, comparing verdicts wherever both sides decide.
RoundtripReport run_roundtrip(const RoundtripOptions& opts);

/// Runs body(i) for i in [0, n) on a pool of threads.
void parallel_for(int n, unsigned threads, const std::function<void(int)>& body);

}  // namespace teamsem
