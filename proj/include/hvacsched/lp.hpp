#pragma once

#include <limits>
#include <string>
#include <vector>

// Dense linear programming: two-phase tableau simplex with Bland's rule,
// plus best-first branch-and-bound over designated 0/1 variables. Sized
// for instances of a few hundred variables where sparsity buys nothing.

namespace hvacsched {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

enum class Rel { le, eq, ge };

enum class LpStatus { optimal, infeasible, unbounded };

std::string lp_status_name(LpStatus s);

// minimize c.x subject to a[i].x rel[i] b[i] and lo <= x <= hi.
// Empty lo/hi default to 0 and +inf per variable.
struct LpProblem {
  std::vector<double> c;
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<Rel> rel;
  std::vector<double> lo;
  std::vector<double> hi;

  int n_vars() const { return static_cast<int>(c.size()); }
  int n_rows() const { return static_cast<int>(a.size()); }
  void add_row(std::vector<double> coef, Rel r, double rhs);
  void validate() const;
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

LpSolution solve_lp(const LpProblem& p);

struct BnbOptions {
  std::vector<int> binaries;
  double gap = 1e-6;
  int max_nodes = 100000;
};

// One solved relaxation: which binaries were fixed (-1 free) and the
// relaxation value (+inf infeasible, -inf unbounded).
struct BnbNode {
  std::vector<signed char> fix;
  double bound = 0.0;
};

struct BnbResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  bool proven = false;  // incumbent within gap of the best open bound
  double bound = 0.0;   // best lower bound at termination
  int nodes = 0;        // LP relaxations solved
  std::vector<BnbNode> node_log;
};

// Best-first search, branching on the binary fractional value closest to
// one half; nodes are bounded by their LP relaxation. Returns the proven
// optimum unless the node budget runs out, in which case the incumbent
// is returned with proven = false and the outstanding bound reported.
BnbResult solve_bnb(const LpProblem& p, const BnbOptions& opt);

}  // namespace hvacsched
