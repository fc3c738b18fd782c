//! Linear programming: a dense two-phase simplex for general programs and a
//! network simplex for uncapacitated min-cost flow.

mod network;
mod simplex;

pub use network::{FlowSolution, MinCostFlow, TreeHint, TreeLink};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("iteration limit {limit} reached after {iterations} pivots (basis {basis:?})")]
    IterationLimit { limit: usize, iterations: usize, basis: Vec<usize> },

    #[error("malformed program: {0}")]
    Malformed(String),

    #[error("program is {0:?}")]
    NotOptimal(LpStatus),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` entries.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `opt c·x` subject to row relations, with `x >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; empty unless optimal.
    pub x: Vec<f64>,
    /// Objective value in the program's own sense; NaN unless optimal.
    pub objective: f64,
    pub iterations: usize,
    /// Final basis as tableau column indices, one per retained row.
    pub basis: Vec<usize>,
}

impl LpSolution {
    /// Converts non-optimal outcomes into an error.
    pub fn into_optimal(self) -> Result<Self, LpError> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            s => Err(LpError::NotOptimal(s)),
        }
    }
}

/// Solver tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    /// Smallest magnitude accepted as a pivot element.
    pub pivot: f64,
    /// Reduced-cost threshold for optimality.
    pub cost: f64,
    /// Residual allowed on phase-one infeasibility.
    pub feasibility: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { pivot: 1e-10, cost: 1e-11, feasibility: 1e-9 }
    }
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        Self { sense, objective, constraints: Vec::new() }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { terms, relation, rhs });
        self
    }

    /// Dense-row convenience for small programs.
    pub fn add_dense(&mut self, row: &[f64], relation: Relation, rhs: f64) -> &mut Self {
        let terms = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        self.add_constraint(terms, relation, rhs)
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::Malformed(format!("objective coefficient {j} is not finite")));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has a non-finite right-hand side")));
            }
            for &(j, v) in &c.terms {
                if j >= self.num_vars() {
                    return Err(LpError::Malformed(format!("row {i} references variable {j}")));
                }
                if !v.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Row activity `a_i · x`.
    pub fn activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row].terms.iter().map(|&(j, v)| v * x[j]).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        for (i, c) in self.constraints.iter().enumerate() {
            let a = self.activity(i, x);
            let viol = match c.relation {
                Relation::Le => a - c.rhs,
                Relation::Ge => c.rhs - a,
                Relation::Eq => (a - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// The dual program, written as a minimisation over nonnegative
    /// variables with the same optimal value as `self`.
    ///
    /// Each `<=` row contributes one variable `y = -u`, each `>=` row one
    /// variable `u`, each `=` row the pair `u+ - u-`.
    pub fn dual(&self) -> LinearProgram {
        // Work with min c'x; a maximisation is min over -c.
        let flip = if self.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let n = self.num_vars();
        let mut cols: Vec<(usize, f64, f64)> = Vec::new(); // (row, sign, rhs)
        for (i, c) in self.constraints.iter().enumerate() {
            match c.relation {
                Relation::Ge => cols.push((i, 1.0, c.rhs)),
                Relation::Le => cols.push((i, -1.0, c.rhs)),
                Relation::Eq => {
                    cols.push((i, 1.0, c.rhs));
                    cols.push((i, -1.0, c.rhs));
                }
            }
        }
        // For a minimisation the dual is max Σ b_i y_i s.t. A^T y <= c. A
        // maximisation is min over -c, whose dual value is the negated
        // optimum; minimising the negated dual objective restores the sign.
        let objective: Vec<f64> = cols
            .iter()
            .map(|&(_, s, b)| if self.sense == Sense::Maximize { -s * b } else { s * b })
            .collect();
        let sense = if self.sense == Sense::Maximize { Sense::Minimize } else { Sense::Maximize };
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (k, &(i, s, _)) in cols.iter().enumerate() {
            for &(j, v) in &self.constraints[i].terms {
                rows[j].push((k, s * v));
            }
        }
        let mut dual = LinearProgram::new(sense, objective);
        for (j, terms) in rows.into_iter().enumerate() {
            dual.add_constraint(terms, Relation::Le, flip * self.objective[j]);
        }
        dual
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(Tolerance::default())
    }

    pub fn solve_with(&self, tol: Tolerance) -> Result<LpSolution, LpError> {
        self.validate()?;
        simplex::solve(self, tol)
    }
}
