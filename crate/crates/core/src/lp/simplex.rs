//! Dense two-phase tableau simplex with Bland's rule.

use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense, Tolerance};

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    /// Phase-two reduced costs; the last entry holds minus the objective.
    z2: Vec<f64>,
    /// Phase-one reduced costs.
    z1: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    limit: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[r * w + col];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.data[r * w + col] = 1.0;
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        let eliminate = |row: &mut [f64]| {
            let f = row[col];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[col] = 0.0;
            }
        };
        for i in (0..self.rows).filter(|&i| i != r) {
            eliminate(&mut self.data[i * w..(i + 1) * w]);
        }
        eliminate(&mut self.z1);
        eliminate(&mut self.z2);
        self.basis[r] = col;
        self.iterations += 1;
    }

    /// Runs simplex iterations on `z1` (phase one) or `z2` over columns `< allowed`.
    fn optimise(&mut self, phase_one: bool, allowed: usize, tol: Tolerance) -> Result<Outcome, LpError> {
        loop {
            let z = if phase_one { &self.z1 } else { &self.z2 };
            let Some(col) = (0..allowed).find(|&j| z[j] < -tol.cost) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > tol.pivot {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let slack = 1e-12 * (1.0 + br.abs());
                            if ratio < br - slack || (ratio <= br + slack && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit {
                    limit: self.limit,
                    iterations: self.iterations,
                    basis: self.basis.clone(),
                });
            }
            self.pivot(r, col);
        }
    }

    fn drop_rows(&mut self, keep: &[bool]) {
        let w = self.width;
        let mut data = Vec::with_capacity(self.data.len());
        let mut basis = Vec::with_capacity(self.basis.len());
        for i in (0..self.rows).filter(|&i| keep[i]) {
            data.extend_from_slice(&self.data[i * w..(i + 1) * w]);
            basis.push(self.basis[i]);
        }
        self.rows = basis.len();
        self.data = data;
        self.basis = basis;
    }
}

pub(super) fn solve(lp: &LinearProgram, tol: Tolerance) -> Result<LpSolution, LpError> {
    let width = lp.num_vars() + 2 * lp.constraints().len() + 1;
    solve_with_limit(lp, tol, 50 * (lp.constraints().len() + width) + 1000)
}

fn solve_with_limit(lp: &LinearProgram, tol: Tolerance, limit: usize) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    let cons = lp.constraints();
    let m = cons.len();

    // Normalise to nonnegative right-hand sides.
    let normalised: Vec<(f64, Relation)> = cons
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (-1.0, rel)
            } else {
                (1.0, c.relation)
            }
        })
        .collect();
    let n_slack = normalised.iter().filter(|(_, r)| *r != Relation::Eq).count();
    let n_art = normalised.iter().filter(|(_, r)| *r != Relation::Le).count();
    let art_start = n + n_slack;
    let width = art_start + n_art + 1;

    let mut data = vec![0.0; m * width];
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, art_start);
    for (i, (c, &(s, rel))) in cons.iter().zip(&normalised).enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        for &(j, v) in &c.terms {
            row[j] += s * v;
        }
        row[width - 1] = s * c.rhs;
        match rel {
            Relation::Le => {
                row[next_slack] = 1.0;
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
    }

    let sign = if lp.sense() == Sense::Maximize { -1.0 } else { 1.0 };
    let mut z2 = vec![0.0; width];
    for (j, &c) in lp.objective().iter().enumerate() {
        z2[j] = sign * c;
    }
    let mut z1 = vec![0.0; width];
    for (i, &b) in basis.iter().enumerate() {
        if b >= art_start {
            for (z, v) in z1.iter_mut().zip(&data[i * width..(i + 1) * width]) {
                *z -= v;
            }
        }
    }
    for z in &mut z1[art_start..width - 1] {
        *z += 1.0;
    }

    let mut t = Tableau { rows: m, width, data, z2, z1, basis, iterations: 0, limit };

    let not_optimal = |status, t: &Tableau| LpSolution {
        status,
        x: Vec::new(),
        objective: f64::NAN,
        iterations: t.iterations,
        basis: t.basis.clone(),
    };

    if n_art > 0 {
        // Phase one cannot be unbounded: its objective is bounded below by 0.
        t.optimise(true, width - 1, tol)?;
        let scale = cons.iter().map(|c| c.rhs.abs()).fold(1.0, f64::max);
        if -t.z1[width - 1] > tol.feasibility * scale {
            return Ok(not_optimal(LpStatus::Infeasible, &t));
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut keep = vec![true; t.rows];
        for i in 0..t.rows {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| t.at(i, j).abs() > tol.pivot) {
                    Some(j) => t.pivot(i, j),
                    None => keep[i] = false,
                }
            }
        }
        if keep.iter().any(|k| !k) {
            t.drop_rows(&keep);
        }
    }

    match t.optimise(false, art_start, tol)? {
        Outcome::Unbounded => return Ok(not_optimal(LpStatus::Unbounded, &t)),
        Outcome::Optimal => {}
    }

    let mut x = vec![0.0; n];
    for i in 0..t.rows {
        let b = t.basis[i];
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.evaluate(&x),
        x,
        iterations: t.iterations,
        basis: t.basis.clone(),
    })
}
