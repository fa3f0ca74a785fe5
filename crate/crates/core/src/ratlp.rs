//! Exact rational linear programming by dense two-phase simplex.
//!
//! Instances are tiny (tens of variables and constraints), so a dense
//! `BigRational` tableau with Bland's anti-cycling rule is the whole story.
//! Every answer carries a certificate: a primal witness plus optimality duals,
//! or Farkas multipliers when infeasible.

use num::{BigRational, One, Signed, Zero};
use thiserror::Error;

pub type Rat = BigRational;

/// Rational from an integer pair, for tests and small literals.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub rel: Relation,
    pub bound: Rat,
}

/// Maximize `objective . x` over free variables subject to `constraints`.
#[derive(Debug, Clone)]
pub struct LpInstance {
    pub num_vars: usize,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub enum LpResult {
    Optimal {
        optimum: Rat,
        /// Values of the original (free) variables.
        primal: Vec<Rat>,
        /// One multiplier per constraint, oriented so each constraint reads
        /// `g.x <= h` (a `>=` row is negated): duals are nonnegative on
        /// inequality rows, sum of `dual_i * g_i = objective`, and
        /// `sum dual_i * h_i = optimum`.
        dual: Vec<Rat>,
    },
    Infeasible {
        /// One multiplier per constraint, oriented so each constraint reads
        /// `g.x >= h` (a `<=` row is negated): multipliers are nonnegative on
        /// inequality rows, `sum farkas_i * g_i = 0`, and
        /// `sum farkas_i * h_i > 0` -- the combination `0 >= positive`.
        farkas: Vec<Rat>,
    },
    Unbounded,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("instance exceeds size budget ({vars} vars x {cons} constraints)")]
    SizeExceeded { vars: usize, cons: usize },
    #[error("constraint {0} has wrong coefficient count")]
    DimensionMismatch(usize),
    #[error("pivot ceiling exceeded")]
    PivotCeiling,
}

pub const MAX_VARS: usize = 64;
pub const MAX_CONSTRAINTS: usize = 256;
const PIVOT_CEILING: usize = 1_000_000;

struct Tableau {
    /// rows x (cols + 1); last entry of each row is the rhs.
    rows: Vec<Vec<Rat>>,
    /// reduced-cost row, same width as rows.
    obj: Vec<Rat>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let factor = other[col].clone();
            for (v, p) in other.iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * p;
            }
        }
        if !self.obj[col].is_zero() {
            let factor = self.obj[col].clone();
            for (v, p) in self.obj.iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * p;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs simplex to optimality with Bland's rule, minimizing the current
    /// objective. `allowed` filters which columns may enter the basis.
    /// Returns Ok(false) when an unbounded ray is found.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<bool, LpError> {
        loop {
            if self.pivots > PIVOT_CEILING {
                return Err(LpError::PivotCeiling);
            }
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..self.cols).find(|&j| allowed(j) && self.obj[j].is_negative());
            let Some(col) = entering else {
                return Ok(true);
            };
            // Lowest-index basic variable among minimal ratios.
            let mut best: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][col].is_positive() {
                    let ratio = &self.rows[r][self.cols] / &self.rows[r][col];
                    let better = match &best {
                        None => true,
                        Some((br, bratio)) => {
                            ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                        }
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Ok(false),
            }
        }
    }

    fn objective_value(&self) -> Rat {
        -self.obj[self.cols].clone()
    }
}

/// Solves the instance with exact arithmetic. Deterministic.
pub fn solve_lp(instance: &LpInstance) -> Result<LpResult, LpError> {
    let n = instance.num_vars;
    let m = instance.constraints.len();
    if n > MAX_VARS || m > MAX_CONSTRAINTS {
        return Err(LpError::SizeExceeded { vars: n, cons: m });
    }
    if instance.objective.len() != n {
        return Err(LpError::DimensionMismatch(usize::MAX));
    }
    for (i, c) in instance.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::DimensionMismatch(i));
        }
    }

    // Standard form: free x_j split as p_j - q_j; one slack/surplus per
    // inequality; one artificial per row. Rows normalized to rhs >= 0.
    // Columns: [p_0..p_{n-1}, q_0..q_{n-1}, slacks..., artificials...].
    let num_slacks = instance
        .constraints
        .iter()
        .filter(|c| c.rel != Relation::Eq)
        .count();
    let cols = 2 * n + num_slacks + m;
    let art_base = 2 * n + num_slacks;

    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut row_sign: Vec<Rat> = Vec::with_capacity(m);
    let mut slack_idx = 0usize;
    for (i, c) in instance.constraints.iter().enumerate() {
        let sign = if c.bound.is_negative() { -Rat::one() } else { Rat::one() };
        let mut row = vec![Rat::zero(); cols + 1];
        for (j, a) in c.coeffs.iter().enumerate() {
            let v = &sign * a;
            row[j] = v.clone();
            row[n + j] = -v;
        }
        row[cols] = &sign * &c.bound;
        if c.rel != Relation::Eq {
            // Normalized relation after the sign flip.
            let normalized_ge = (c.rel == Relation::Ge) == sign.is_one();
            row[2 * n + slack_idx] = if normalized_ge { -Rat::one() } else { Rat::one() };
            slack_idx += 1;
        }
        row[art_base + i] = Rat::one();
        rows.push(row);
        row_sign.push(sign);
    }

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![Rat::zero(); cols + 1];
    for j in art_base..art_base + m {
        obj[j] = Rat::one();
    }
    // Reduce: artificials are basic, so subtract each row from the cost row.
    for row in &rows {
        for (v, r) in obj.iter_mut().zip(row.iter()) {
            *v -= r;
        }
    }
    let mut t = Tableau {
        rows,
        obj,
        basis: (art_base..art_base + m).collect(),
        cols,
        pivots: 0,
    };
    t.optimize(&|_| true)?;

    if t.objective_value().is_positive() {
        // Phase-1 duals y'_i = 1 - reduced_cost(artificial_i) give the Farkas ray.
        let mut farkas = Vec::with_capacity(m);
        for i in 0..m {
            let y = Rat::one() - &t.obj[art_base + i];
            // Map to the ">=" orientation of the original row.
            let lam = match instance.constraints[i].rel {
                Relation::Le => -&row_sign[i] * &y,
                Relation::Ge | Relation::Eq => &row_sign[i] * &y,
            };
            farkas.push(lam);
        }
        return Ok(LpResult::Infeasible { farkas });
    }

    // Phase 2: minimize -objective; artificials may not re-enter.
    let mut obj = vec![Rat::zero(); cols + 1];
    for j in 0..n {
        obj[j] = -instance.objective[j].clone();
        obj[n + j] = instance.objective[j].clone();
    }
    // Reduce against the current basis.
    for (r, &b) in t.basis.iter().enumerate() {
        if !obj[b].is_zero() {
            let factor = obj[b].clone();
            for (v, p) in obj.iter_mut().zip(t.rows[r].iter()) {
                *v -= &factor * p;
            }
        }
    }
    t.obj = obj;
    t.pivots = 0;
    let bounded = t.optimize(&|j| j < art_base)?;
    if !bounded {
        return Ok(LpResult::Unbounded);
    }

    let mut primal = vec![Rat::zero(); 2 * n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < 2 * n {
            primal[b] = t.rows[r][cols].clone();
        }
    }
    let primal: Vec<Rat> = (0..n).map(|j| &primal[j] - &primal[n + j]).collect();
    let optimum = -t.objective_value();

    // Phase-2 duals from the artificial reduced costs: y'_i = -rc(artificial_i),
    // z_i = -y'_i, then orient per-row to the "<=" convention.
    let mut dual = Vec::with_capacity(m);
    for i in 0..m {
        let z = t.obj[art_base + i].clone();
        let y = match instance.constraints[i].rel {
            Relation::Le | Relation::Eq => &z * &row_sign[i],
            Relation::Ge => -(&z * &row_sign[i]),
        };
        dual.push(y);
    }

    Ok(LpResult::Optimal { optimum, primal, dual })
}

/// Exact certificate check: primal feasibility and objective for Optimal
/// results (plus dual validity), Farkas validity for Infeasible ones.
pub fn check_solution(instance: &LpInstance, result: &LpResult) -> bool {
    match result {
        LpResult::Optimal { optimum, primal, dual } => {
            if primal.len() != instance.num_vars || dual.len() != instance.constraints.len() {
                return false;
            }
            for c in &instance.constraints {
                let lhs: Rat = c.coeffs.iter().zip(primal).map(|(a, x)| a * x).sum();
                let ok = match c.rel {
                    Relation::Ge => lhs >= c.bound,
                    Relation::Le => lhs <= c.bound,
                    Relation::Eq => lhs == c.bound,
                };
                if !ok {
                    return false;
                }
            }
            let obj: Rat = instance.objective.iter().zip(primal).map(|(c, x)| c * x).sum();
            if obj != *optimum {
                return false;
            }
            // Dual: orient rows as g.x <= h; need y >= 0 on inequalities,
            // y.G = objective, y.h = optimum.
            let mut combo = vec![Rat::zero(); instance.num_vars];
            let mut bound = Rat::zero();
            for (y, c) in dual.iter().zip(&instance.constraints) {
                let sign = match c.rel {
                    Relation::Le => Rat::one(),
                    Relation::Ge => -Rat::one(),
                    Relation::Eq => Rat::one(),
                };
                if c.rel != Relation::Eq && y.is_negative() {
                    return false;
                }
                for (acc, a) in combo.iter_mut().zip(&c.coeffs) {
                    *acc += y * &(&sign * a);
                }
                bound += y * &(&sign * &c.bound);
            }
            combo == instance.objective && bound == *optimum
        }
        LpResult::Infeasible { farkas } => {
            if farkas.len() != instance.constraints.len() {
                return false;
            }
            // Orient rows as g.x >= h; need lambda >= 0 on inequalities,
            // lambda.G = 0, lambda.h > 0.
            let mut combo = vec![Rat::zero(); instance.num_vars];
            let mut bound = Rat::zero();
            for (lam, c) in farkas.iter().zip(&instance.constraints) {
                let sign = match c.rel {
                    Relation::Ge | Relation::Eq => Rat::one(),
                    Relation::Le => -Rat::one(),
                };
                if c.rel != Relation::Eq && lam.is_negative() {
                    return false;
                }
                for (acc, a) in combo.iter_mut().zip(&c.coeffs) {
                    *acc += lam * &(&sign * a);
                }
                bound += lam * &(&sign * &c.bound);
            }
            combo.iter().all(Rat::is_zero) && bound.is_positive()
        }
        LpResult::Unbounded => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coeffs: Vec<Rat>, bound: Rat) -> Constraint {
        Constraint { coeffs, rel: Relation::Ge, bound }
    }
    fn le(coeffs: Vec<Rat>, bound: Rat) -> Constraint {
        Constraint { coeffs, rel: Relation::Le, bound }
    }

    #[test]
    fn simple_bounded_max() {
        let inst = LpInstance {
            num_vars: 1,
            objective: vec![rat(1, 1)],
            constraints: vec![le(vec![rat(1, 1)], rat(3, 7))],
        };
        let res = solve_lp(&inst).unwrap();
        match &res {
            LpResult::Optimal { optimum, .. } => assert_eq!(*optimum, rat(3, 7)),
            other => panic!("expected optimal, got {other:?}"),
        }
        assert!(check_solution(&inst, &res));
    }

    #[test]
    fn infeasible_with_farkas() {
        let inst = LpInstance {
            num_vars: 1,
            objective: vec![rat(1, 1)],
            constraints: vec![ge(vec![rat(1, 1)], rat(1, 1)), le(vec![rat(1, 1)], rat(0, 1))],
        };
        let res = solve_lp(&inst).unwrap();
        match &res {
            LpResult::Infeasible { farkas } => {
                assert!(farkas.iter().all(|f| !f.is_negative()));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(check_solution(&inst, &res));
    }

    #[test]
    fn config5_reduced_slack_lp() {
        // max t s.t. t <= s-1, t <= 2-2s, 0 <= s <= 3. Optimum 0 at s = 1.
        let inst = LpInstance {
            num_vars: 2, // [t, s]
            objective: vec![rat(1, 1), rat(0, 1)],
            constraints: vec![
                le(vec![rat(1, 1), rat(-1, 1)], rat(-1, 1)),
                le(vec![rat(1, 1), rat(2, 1)], rat(2, 1)),
                ge(vec![rat(0, 1), rat(1, 1)], rat(0, 1)),
                le(vec![rat(0, 1), rat(1, 1)], rat(3, 1)),
            ],
        };
        let res = solve_lp(&inst).unwrap();
        match &res {
            LpResult::Optimal { optimum, primal, .. } => {
                assert_eq!(*optimum, rat(0, 1));
                assert_eq!(primal[1], rat(1, 1));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
        assert!(check_solution(&inst, &res));
    }

    #[test]
    fn unbounded() {
        let inst = LpInstance {
            num_vars: 1,
            objective: vec![rat(1, 1)],
            constraints: vec![ge(vec![rat(1, 1)], rat(0, 1))],
        };
        assert!(matches!(solve_lp(&inst).unwrap(), LpResult::Unbounded));
    }

    #[test]
    fn equality_constraints() {
        let inst = LpInstance {
            num_vars: 2,
            objective: vec![rat(1, 1), rat(1, 1)],
            constraints: vec![
                Constraint {
                    coeffs: vec![rat(1, 1), rat(1, 1)],
                    rel: Relation::Eq,
                    bound: rat(5, 2),
                },
                le(vec![rat(1, 1), rat(0, 1)], rat(1, 1)),
            ],
        };
        let res = solve_lp(&inst).unwrap();
        match &res {
            LpResult::Optimal { optimum, .. } => assert_eq!(*optimum, rat(5, 2)),
            other => panic!("expected optimal, got {other:?}"),
        }
        assert!(check_solution(&inst, &res));
    }

    #[test]
    fn tampered_results_fail_check() {
        let inst = LpInstance {
            num_vars: 1,
            objective: vec![rat(1, 1)],
            constraints: vec![le(vec![rat(1, 1)], rat(3, 7))],
        };
        let res = solve_lp(&inst).unwrap();
        if let LpResult::Optimal { optimum, primal, dual } = res {
            let bad = LpResult::Optimal {
                optimum: optimum + rat(1, 1000),
                primal,
                dual,
            };
            assert!(!check_solution(&inst, &bad));
        } else {
            panic!("expected optimal");
        }
        // Farkas with a negative multiplier must fail.
        let inf = LpInstance {
            num_vars: 1,
            objective: vec![rat(1, 1)],
            constraints: vec![ge(vec![rat(1, 1)], rat(1, 1)), le(vec![rat(1, 1)], rat(0, 1))],
        };
        let bad = LpResult::Infeasible { farkas: vec![rat(-1, 1), rat(1, 1)] };
        assert!(!check_solution(&inf, &bad));
        let zero = LpResult::Infeasible { farkas: vec![rat(0, 1), rat(0, 1)] };
        assert!(!check_solution(&inf, &zero));
    }
}
