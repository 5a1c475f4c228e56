#include "hvacsched/lp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <utility>

namespace hvacsched {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr double kIntTol = 1e-7;
constexpr double kRatioTie = 1e-12;

// Equality tableau with nonnegative rhs; columns are shifted structural
// variables, then slacks, then artificials; the rhs sits past the last
// column. The objective row carries reduced costs with -(value) in its
// rhs slot.
struct Tableau {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<double>> t;
  std::vector<double> obj;
  std::vector<int> basis;

  static void eliminate(std::vector<double>& row,
                        const std::vector<double>& prow, int pc) {
    const double f = row[pc];
    if (f == 0.0) return;
    const int n = static_cast<int>(row.size());
    for (int j = 0; j < n; ++j) row[j] -= f * prow[j];
    row[pc] = 0.0;
  }

  // Returns the column that left the basis.
  int pivot(int pr, int pc) {
    std::vector<double>& prow = t[pr];
    const double inv = 1.0 / prow[pc];
    for (double& v : prow) v *= inv;
    prow[pc] = 1.0;
    for (int i = 0; i < rows; ++i) {
      if (i != pr) eliminate(t[i], prow, pc);
    }
    eliminate(obj, prow, pc);
    const int left = basis[pr];
    basis[pr] = pc;
    return left;
  }
};

enum class RunStatus { reached_optimum, unbounded };

// Bland's rule: the lowest eligible column enters; among ratio ties the
// row whose basic variable has the lowest index leaves. Columns at or
// past ban_from may not re-enter once they leave the basis.
RunStatus run_simplex(Tableau& tb, std::vector<char>& can_enter,
                      int ban_from) {
  const long budget = 200 + 50L * (tb.rows + tb.cols);
  for (long iter = 0;; ++iter) {
    if (iter > budget) {
      throw std::runtime_error("simplex pivot budget exhausted");
    }
    int pc = -1;
    for (int j = 0; j < tb.cols; ++j) {
      if (can_enter[j] && tb.obj[j] < -kPivotTol) {
        pc = j;
        break;
      }
    }
    if (pc < 0) return RunStatus::reached_optimum;

    int pr = -1;
    double best = 0.0;
    for (int i = 0; i < tb.rows; ++i) {
      const double aij = tb.t[i][pc];
      if (aij <= kPivotTol) continue;
      const double ratio = tb.t[i][tb.cols] / aij;
      if (pr < 0 || ratio < best - kRatioTie) {
        pr = i;
        best = ratio;
      } else if (ratio <= best + kRatioTie && tb.basis[i] < tb.basis[pr]) {
        pr = i;
        best = std::min(best, ratio);
      }
    }
    if (pr < 0) return RunStatus::unbounded;

    const int left = tb.pivot(pr, pc);
    if (left >= ban_from) can_enter[left] = 0;
  }
}

struct NormRow {
  std::vector<double> a;
  double b = 0.0;
  Rel r = Rel::le;
};

}  // namespace

std::string lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

void LpProblem::add_row(std::vector<double> coef, Rel r, double rhs) {
  a.push_back(std::move(coef));
  rel.push_back(r);
  b.push_back(rhs);
}

void LpProblem::validate() const {
  const std::size_t n = c.size();
  if (a.size() != b.size() || a.size() != rel.size()) {
    throw std::invalid_argument("constraint arrays disagree on row count");
  }
  for (const std::vector<double>& row : a) {
    if (row.size() != n) {
      throw std::invalid_argument("constraint row width does not match c");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite constraint coefficient");
      }
    }
  }
  for (double v : c) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite objective");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite rhs");
  }
  if (!lo.empty() && lo.size() != n) {
    throw std::invalid_argument("lower bound count does not match c");
  }
  if (!hi.empty() && hi.size() != n) {
    throw std::invalid_argument("upper bound count does not match c");
  }
  for (double v : lo) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("lower bounds must be finite");
    }
  }
  for (double v : hi) {
    if (std::isnan(v) || v == -kLpInf) {
      throw std::invalid_argument("upper bounds must be finite or +inf");
    }
  }
}

LpSolution solve_lp(const LpProblem& p) {
  p.validate();
  const int n = p.n_vars();
  LpSolution out;

  std::vector<double> lo(n, 0.0);
  std::vector<double> hi(n, kLpInf);
  if (!p.lo.empty()) lo = p.lo;
  if (!p.hi.empty()) hi = p.hi;
  for (int j = 0; j < n; ++j) {
    if (lo[j] > hi[j] + 1e-12) return out;
  }

  // Shift every variable by its lower bound and drop the fixed ones.
  std::vector<int> free_of;
  std::vector<int> cmap(n, -1);
  for (int j = 0; j < n; ++j) {
    if (hi[j] - lo[j] > 1e-12) {
      cmap[j] = static_cast<int>(free_of.size());
      free_of.push_back(j);
    }
  }
  const int nf = static_cast<int>(free_of.size());

  std::vector<NormRow> rows;
  rows.reserve(p.a.size() + free_of.size());
  for (int i = 0; i < p.n_rows(); ++i) {
    NormRow r;
    r.a.assign(nf, 0.0);
    r.r = p.rel[i];
    double shift = 0.0;
    for (int j = 0; j < n; ++j) {
      shift += p.a[i][j] * lo[j];
      if (cmap[j] >= 0) r.a[cmap[j]] = p.a[i][j];
    }
    r.b = p.b[i] - shift;
    rows.push_back(std::move(r));
  }
  for (int k = 0; k < nf; ++k) {
    const int j = free_of[k];
    if (hi[j] == kLpInf) continue;
    NormRow r;
    r.a.assign(nf, 0.0);
    r.a[k] = 1.0;
    r.b = hi[j] - lo[j];
    r.r = Rel::le;
    rows.push_back(std::move(r));
  }

  int n_slack = 0;
  int n_art = 0;
  for (NormRow& r : rows) {
    if (r.b < 0.0) {
      for (double& v : r.a) v = -v;
      r.b = -r.b;
      if (r.r == Rel::le) {
        r.r = Rel::ge;
      } else if (r.r == Rel::ge) {
        r.r = Rel::le;
      }
    }
    if (r.r == Rel::ge && r.b == 0.0) {
      for (double& v : r.a) v = -v;
      r.r = Rel::le;
    }
    if (r.r != Rel::eq) ++n_slack;
    if (r.r != Rel::le) ++n_art;
  }

  Tableau tb;
  tb.rows = static_cast<int>(rows.size());
  const int art_start = nf + n_slack;
  tb.cols = art_start + n_art;
  tb.t.assign(tb.rows, std::vector<double>(tb.cols + 1, 0.0));
  tb.basis.assign(tb.rows, -1);
  int si = nf;
  int ai = art_start;
  for (int i = 0; i < tb.rows; ++i) {
    std::vector<double>& row = tb.t[i];
    const NormRow& r = rows[i];
    std::copy(r.a.begin(), r.a.end(), row.begin());
    row[tb.cols] = r.b;
    switch (r.r) {
      case Rel::le:
        row[si] = 1.0;
        tb.basis[i] = si++;
        break;
      case Rel::ge:
        row[si++] = -1.0;
        row[ai] = 1.0;
        tb.basis[i] = ai++;
        break;
      case Rel::eq:
        row[ai] = 1.0;
        tb.basis[i] = ai++;
        break;
    }
  }

  tb.obj.assign(tb.cols + 1, 0.0);
  for (int j = art_start; j < tb.cols; ++j) tb.obj[j] = 1.0;
  for (int i = 0; i < tb.rows; ++i) {
    if (tb.basis[i] >= art_start) {
      Tableau::eliminate(tb.obj, tb.t[i], tb.basis[i]);
    }
  }

  std::vector<char> can_enter(tb.cols, 1);
  if (run_simplex(tb, can_enter, art_start) == RunStatus::unbounded) {
    throw std::runtime_error("feasibility phase reported unbounded");
  }
  if (-tb.obj[tb.cols] > kFeasTol) return out;

  // Pivot leftover artificials out; a row with no real pivot is redundant.
  std::vector<char> drop(tb.rows, 0);
  for (int i = 0; i < tb.rows; ++i) {
    if (tb.basis[i] < art_start) continue;
    int pc = -1;
    for (int j = 0; j < art_start; ++j) {
      if (std::fabs(tb.t[i][j]) > kPivotTol) {
        pc = j;
        break;
      }
    }
    if (pc >= 0) {
      tb.pivot(i, pc);
    } else {
      drop[i] = 1;
    }
  }
  {
    int w = 0;
    for (int i = 0; i < tb.rows; ++i) {
      if (drop[i]) continue;
      std::vector<double>& row = tb.t[i];
      row[art_start] = row[tb.cols];
      row.resize(art_start + 1);
      if (w != i) {
        tb.t[w] = std::move(row);
        tb.basis[w] = tb.basis[i];
      }
      ++w;
    }
    tb.rows = w;
    tb.t.resize(w);
    tb.basis.resize(w);
    tb.cols = art_start;
  }

  tb.obj.assign(tb.cols + 1, 0.0);
  for (int k = 0; k < nf; ++k) tb.obj[k] = p.c[free_of[k]];
  for (int i = 0; i < tb.rows; ++i) {
    const int bj = tb.basis[i];
    const double cb = bj < nf ? p.c[free_of[bj]] : 0.0;
    if (cb == 0.0) continue;
    for (int j = 0; j <= tb.cols; ++j) tb.obj[j] -= cb * tb.t[i][j];
    tb.obj[bj] = 0.0;
  }

  can_enter.assign(tb.cols, 1);
  if (run_simplex(tb, can_enter, tb.cols) == RunStatus::unbounded) {
    out.status = LpStatus::unbounded;
    return out;
  }

  out.x = lo;
  for (int i = 0; i < tb.rows; ++i) {
    const int bj = tb.basis[i];
    if (bj < nf) out.x[free_of[bj]] += std::max(0.0, tb.t[i][tb.cols]);
  }
  out.objective = 0.0;
  for (int j = 0; j < n; ++j) out.objective += p.c[j] * out.x[j];
  out.status = LpStatus::optimal;
  return out;
}

namespace {

struct QueueNode {
  double bound = 0.0;
  long seq = 0;
  int branch_var = -1;
  std::vector<signed char> fix;
};

// Lowest bound first; among equal bounds the newest node, so plateaus of
// equal-bound nodes are dived through instead of swept breadth-first.
struct QueueOrder {
  bool operator()(const QueueNode& a, const QueueNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq < b.seq;
  }
};

}  // namespace

BnbResult solve_bnb(const LpProblem& p, const BnbOptions& opt) {
  p.validate();
  const int n = p.n_vars();
  const int nb = static_cast<int>(opt.binaries.size());
  for (int j : opt.binaries) {
    if (j < 0 || j >= n) {
      throw std::invalid_argument("binary index out of range");
    }
  }
  {
    std::vector<int> sorted = opt.binaries;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("duplicate binary index");
    }
  }
  if (opt.max_nodes < 1) {
    throw std::invalid_argument("node budget must be at least 1");
  }

  BnbResult res;
  double inc_obj = kLpInf;
  std::vector<double> inc_x;
  bool have_inc = false;
  bool budget_hit = false;
  bool leaf_unbounded = false;
  double open_floor = kLpInf;

  std::priority_queue<QueueNode, std::vector<QueueNode>, QueueOrder> open;
  long seq = 0;

  const auto relax = [&](const std::vector<signed char>& fix) {
    LpProblem q = p;
    if (q.lo.empty()) q.lo.assign(n, 0.0);
    if (q.hi.empty()) q.hi.assign(n, kLpInf);
    for (int k = 0; k < nb; ++k) {
      if (fix[k] < 0) continue;
      q.lo[opt.binaries[k]] = fix[k];
      q.hi[opt.binaries[k]] = fix[k];
    }
    return solve_lp(q);
  };

  // Solves one node; pushes it when it still needs branching. Returns
  // false only for an unbounded leaf, which settles the whole search.
  const auto visit = [&](std::vector<signed char> fix,
                         double parent_bound) -> bool {
    if (res.nodes >= opt.max_nodes) {
      budget_hit = true;
      open_floor = std::min(open_floor, parent_bound);
      return true;
    }
    const LpSolution s = relax(fix);
    ++res.nodes;
    bool leaf = true;
    for (int k = 0; k < nb; ++k) {
      if (fix[k] < 0) leaf = false;
    }
    double bound = kLpInf;
    if (s.status == LpStatus::optimal) bound = s.objective;
    if (s.status == LpStatus::unbounded) bound = -kLpInf;
    res.node_log.push_back({fix, bound});

    if (s.status == LpStatus::infeasible) return true;
    if (s.status == LpStatus::unbounded) {
      if (leaf) {
        leaf_unbounded = true;
        return false;
      }
      int first_free = 0;
      while (fix[first_free] >= 0) ++first_free;
      open.push({-kLpInf, seq++, first_free, std::move(fix)});
      return true;
    }

    int frac_k = -1;
    double frac_score = kIntTol;
    for (int k = 0; k < nb; ++k) {
      if (fix[k] >= 0) continue;
      const double v = s.x[opt.binaries[k]];
      const double d = std::min(std::fabs(v), std::fabs(1.0 - v));
      if (d > frac_score) {
        frac_score = d;
        frac_k = k;
      }
    }
    if (frac_k < 0) {
      if (s.objective < inc_obj) {
        inc_obj = s.objective;
        inc_x = s.x;
        have_inc = true;
      }
      return true;
    }
    if (have_inc && s.objective >= inc_obj - 1e-12) return true;
    open.push({s.objective, seq++, frac_k, std::move(fix)});
    return true;
  };

  bool keep_going = visit(std::vector<signed char>(nb, -1), -kLpInf);
  while (keep_going && !open.empty() && !budget_hit) {
    QueueNode node = open.top();
    open.pop();
    if (have_inc && node.bound >= inc_obj - opt.gap) {
      open_floor = std::min(open_floor, node.bound);
      break;
    }
    for (int v = 0; v <= 1 && keep_going; ++v) {
      std::vector<signed char> fix = node.fix;
      fix[node.branch_var] = static_cast<signed char>(v);
      keep_going = visit(std::move(fix), node.bound);
    }
  }

  if (leaf_unbounded) {
    res.status = LpStatus::unbounded;
    res.proven = true;
    res.bound = -kLpInf;
    return res;
  }

  while (!open.empty()) {
    open_floor = std::min(open_floor, open.top().bound);
    open.pop();
  }
  if (have_inc) {
    res.status = LpStatus::optimal;
    res.objective = inc_obj;
    res.x = std::move(inc_x);
    res.bound = std::min(open_floor, inc_obj);
    res.proven = !budget_hit;
  } else {
    res.status = LpStatus::infeasible;
    res.bound = open_floor;
    res.proven = !budget_hit;
  }
  return res;
}

}  // namespace hvacsched
