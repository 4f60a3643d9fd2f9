//! Log-barrier interior-point solver for small dense convex QCQPs over a
//! complex vector.
//!
//! The problem is solved in the real embedding `x = [Re z; Im z]`, where a
//! Hermitian quadratic form `z^H A z` becomes `x^T Ā x`.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, RMatrix, RVector};

/// `z^H A z + 2 Re(z^H b) ≤ r`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub a: CMatrix,
    pub b: CVector,
    pub r: f64,
}

impl QuadConstraint {
    pub fn value(&self, z: &CVector) -> f64 {
        quad_form(&self.a, z) + 2.0 * z.dotc(&self.b).re
    }

    /// `r − value(z)`; positive means strictly satisfied.
    pub fn slack(&self, z: &CVector) -> f64 {
        self.r - self.value(z)
    }
}

/// Minimize `z^H A0 z − 2 Re(b0^H z) + c0` subject to quadratic constraints
/// and, optionally, `|z_j| ≤ 1` for every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpProblem {
    pub a0: CMatrix,
    pub b0: CVector,
    pub c0: f64,
    pub constraints: Vec<QuadConstraint>,
    pub unit_box: bool,
}

pub(crate) fn quad_form(a: &CMatrix, z: &CVector) -> f64 {
    z.dotc(&(a * z)).re
}

impl QcqpProblem {
    pub fn dim(&self) -> usize {
        self.b0.len()
    }

    pub fn objective(&self, z: &CVector) -> f64 {
        quad_form(&self.a0, z) - 2.0 * self.b0.dotc(z).re + self.c0
    }

    /// Smallest slack over all constraints (box included); `+inf` when there
    /// are none.
    pub fn min_slack(&self, z: &CVector) -> f64 {
        let mut s = self.constraints.iter().map(|c| c.slack(z)).fold(f64::INFINITY, f64::min);
        if self.unit_box {
            s = z.iter().map(|v| 1.0 - v.norm_sqr()).fold(s, f64::min);
        }
        s
    }

    pub fn is_strictly_feasible(&self, z: &CVector) -> bool {
        self.min_slack(z) > 0.0
    }

    /// Largest constraint violation (0 when feasible).
    pub fn max_violation(&self, z: &CVector) -> f64 {
        (-self.min_slack(z)).max(0.0)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.a0.shape() != (n, n) {
            return Err(Error::Dimension(format!("objective matrix {:?} for dimension {n}", self.a0.shape())));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.a.shape() != (n, n) || c.b.len() != n {
                return Err(Error::Dimension(format!("constraint {i}: matrix {:?}, vector {}", c.a.shape(), c.b.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSettings {
    pub t0: f64,
    pub mu: f64,
    pub newton_tol: f64,
    pub outer_tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self { t0: 1.0, mu: 10.0, newton_tol: 1e-9, outer_tol: 1e-8, max_newton: 100, max_outer: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub z: CVector,
    pub objective: f64,
    /// Multipliers of the general constraints, in order.
    pub multipliers: Vec<f64>,
    /// Multipliers of the box constraints (empty without a box).
    pub box_multipliers: Vec<f64>,
    /// Relative stationarity of the Lagrangian.
    pub stationarity: f64,
    /// Duality gap bound `m / t`.
    pub gap: f64,
    pub kkt_residual: f64,
    pub newton_steps: usize,
}

/// Real-embedded data of one problem.
struct Embedded {
    n: usize,
    p0: RMatrix,
    q0: RVector,
    cons: Vec<(RMatrix, RVector, f64)>,
    unit_box: bool,
}

impl Embedded {
    fn new(p: &QcqpProblem) -> Self {
        Self {
            n: p.dim(),
            p0: linalg::real_embedding(&linalg::hermitian_part(&p.a0)),
            q0: linalg::to_real(&p.b0),
            cons: p
                .constraints
                .iter()
                .map(|c| (linalg::real_embedding(&linalg::hermitian_part(&c.a)), linalg::to_real(&c.b), c.r))
                .collect(),
            unit_box: p.unit_box,
        }
    }

    fn num_constraints(&self) -> usize {
        self.cons.len() + if self.unit_box { self.n } else { 0 }
    }

    fn objective(&self, x: &RVector) -> f64 {
        x.dot(&(&self.p0 * x)) - 2.0 * self.q0.dot(x)
    }

    fn slacks(&self, x: &RVector) -> (Vec<f64>, Vec<f64>) {
        let gen = self.cons.iter().map(|(p, q, r)| r - x.dot(&(p * x)) - 2.0 * q.dot(x)).collect();
        let bx = if self.unit_box {
            (0..self.n).map(|j| 1.0 - x[j] * x[j] - x[j + self.n] * x[j + self.n]).collect()
        } else {
            Vec::new()
        };
        (gen, bx)
    }

    /// Every slack exceeds `margin` relative to the size of its terms.
    fn is_interior(&self, x: &RVector, margin: f64) -> bool {
        let (s, sb) = self.slacks(x);
        s.iter().zip(&self.cons).all(|(si, (_, _, r))| *si > margin * (r.abs() + (r - si).abs()))
            && sb.iter().all(|v| *v > margin)
    }

    fn barrier_value(&self, t: f64, x: &RVector) -> Option<f64> {
        let (s, sb) = self.slacks(x);
        if s.iter().chain(&sb).any(|v| !(*v > 0.0)) {
            return None;
        }
        Some(t * self.objective(x) - s.iter().chain(&sb).map(|v| v.ln()).sum::<f64>())
    }

    fn objective_grad(&self, x: &RVector) -> RVector {
        (&self.p0 * x - &self.q0) * 2.0
    }

    fn constraint_grads(&self, x: &RVector) -> Vec<RVector> {
        self.cons.iter().map(|(p, q, _)| (p * x + q) * 2.0).collect()
    }

    /// Gradient and Hessian of the barrier function at a strictly feasible x.
    fn newton_system(&self, t: f64, x: &RVector) -> (RVector, RMatrix) {
        let (s, sb) = self.slacks(x);
        let mut g = self.objective_grad(x) * t;
        let mut h = &self.p0 * (2.0 * t);
        for ((p, _, _), (gi, si)) in self.cons.iter().zip(self.constraint_grads(x).iter().zip(&s)) {
            g += gi / *si;
            h += p * (2.0 / si);
            h.ger(1.0 / (si * si), gi, gi, 1.0);
        }
        let n = self.n;
        for (j, sj) in sb.iter().enumerate() {
            let (a, b) = (j, j + n);
            let (xa, xb) = (x[a], x[b]);
            g[a] += 2.0 * xa / sj;
            g[b] += 2.0 * xb / sj;
            let inv2 = 1.0 / (sj * sj);
            h[(a, a)] += 2.0 / sj + 4.0 * xa * xa * inv2;
            h[(b, b)] += 2.0 / sj + 4.0 * xb * xb * inv2;
            h[(a, b)] += 4.0 * xa * xb * inv2;
            h[(b, a)] += 4.0 * xa * xb * inv2;
        }
        (g, h)
    }
}

fn solve_spd(h: &RMatrix, rhs: &RVector) -> Result<RVector> {
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += reg;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok(ch.solve(rhs));
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    Err(Error::Numerical("barrier Newton system is not positive definite".into()))
}

/// Runs the barrier method from the first strictly feasible candidate among
/// `start` and the origin.
pub fn solve_qcqp_barrier(p: &QcqpProblem, start: Option<&CVector>, settings: &BarrierSettings) -> Result<QcqpSolution> {
    p.validate()?;
    let n = p.dim();
    let emb = Embedded::new(p);
    let m = emb.num_constraints();
    // A warm start within rounding of the boundary stalls the Newton line
    // search, so it must keep a relative margin; failing that, a slightly
    // shrunk copy or the origin is used.
    let warm: Vec<RVector> = start
        .filter(|z| z.len() == n)
        .map(|z| {
            let x = linalg::to_real(z);
            vec![x.clone(), x * (1.0 - 1e-6)]
        })
        .unwrap_or_default();
    let mut x = warm
        .into_iter()
        .find(|x| emb.is_interior(x, 1e-12))
        .or_else(|| Some(RVector::zeros(2 * n)).filter(|x| emb.barrier_value(1.0, x).is_some()))
        .ok_or_else(|| Error::Infeasible("no strictly feasible starting point for the barrier method".into()))?;

    if m == 0 {
        let z = linalg::pinv_psd(&p.a0, linalg::RANK_TOL)? * &p.b0;
        return Ok(finish(p, &emb, z, 1.0, 0));
    }

    let mut t = settings.t0;
    let mut newton_steps = 0;
    for _outer in 0..settings.max_outer {
        let mut phi = emb
            .barrier_value(t, &x)
            .ok_or_else(|| Error::Numerical(format!("barrier iterate left the interior at t = {t:e}")))?;
        for _ in 0..settings.max_newton {
            let (g, h) = emb.newton_system(t, &x);
            let dx = solve_spd(&h, &(-&g))?;
            let decrement = -g.dot(&dx);
            if !decrement.is_finite() {
                return Err(Error::Numerical(format!("barrier Newton decrement not finite at t = {t:e}")));
            }
            if decrement / 2.0 <= settings.newton_tol {
                break;
            }
            newton_steps += 1;
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let cand = &x + &dx * step;
                if let Some(v) = emb.barrier_value(t, &cand) {
                    // Rounding slack: near the center the predicted decrease
                    // falls below the resolution of φ.
                    if v <= phi - 0.25 * step * decrement + 1e-13 * phi.abs() {
                        x = cand;
                        phi = v;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                // Round-off floor: no representable decrease along the
                // Newton direction.
                break;
            }
        }
        if m as f64 / t < settings.outer_tol {
            break;
        }
        t *= settings.mu;
    }
    Ok(finish(p, &emb, linalg::from_real(&x), t, newton_steps))
}

fn finish(p: &QcqpProblem, emb: &Embedded, z: CVector, t: f64, newton_steps: usize) -> QcqpSolution {
    let x = linalg::to_real(&z);
    let (s, sb) = emb.slacks(&x);
    let m = emb.num_constraints();
    let multipliers: Vec<f64> = s.iter().map(|si| 1.0 / (t * si)).collect();
    let box_multipliers: Vec<f64> = sb.iter().map(|si| 1.0 / (t * si)).collect();

    let g0 = emb.objective_grad(&x);
    let mut lag = g0.clone();
    let mut scale = 1.0 + g0.norm();
    for (gi, li) in emb.constraint_grads(&x).iter().zip(&multipliers) {
        lag += gi * *li;
        scale += li * gi.norm();
    }
    for (j, lj) in box_multipliers.iter().enumerate() {
        let n = emb.n;
        lag[j] += 2.0 * lj * x[j];
        lag[j + n] += 2.0 * lj * x[j + n];
        scale += 2.0 * lj * (x[j] * x[j] + x[j + n] * x[j + n]).sqrt();
    }
    let stationarity = lag.norm() / scale;
    let gap = if m == 0 { 0.0 } else { m as f64 / t };
    let kkt_residual = stationarity.max(gap).max(p.max_violation(&z));
    QcqpSolution {
        objective: p.objective(&z),
        z,
        multipliers,
        box_multipliers,
        stationarity,
        gap,
        kkt_residual,
        newton_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, linalg::c(v, 0.0))
    }

    #[test]
    fn one_dimensional_hand_kkt() {
        // minimize z^2 - 2z subject to z^2 <= 0.25
        let p = QcqpProblem {
            a0: scalar(1.0),
            b0: CVector::from_element(1, linalg::c(1.0, 0.0)),
            c0: 0.0,
            constraints: vec![QuadConstraint { a: scalar(1.0), b: CVector::zeros(1), r: 0.25 }],
            unit_box: false,
        };
        let sol = solve_qcqp_barrier(&p, None, &BarrierSettings::default()).unwrap();
        assert!((sol.z[0] - linalg::c(0.5, 0.0)).norm() < 1e-7, "{}", sol.z[0]);
        // stationarity 2z - 2 + 2 λ z = 0 at z = 1/2 gives λ = 1
        assert!((sol.multipliers[0] - 1.0).abs() < 1e-5);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn slack_constraints_give_unconstrained_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a0 = random_psd(&mut rng, 4, 4) + CMatrix::identity(4, 4);
        let b0 = random_vector(&mut rng, 4);
        let p = QcqpProblem {
            a0: a0.clone(),
            b0: b0.clone(),
            c0: 1.0,
            constraints: vec![QuadConstraint { a: CMatrix::identity(4, 4), b: CVector::zeros(4), r: 1e6 }],
            unit_box: false,
        };
        let sol = solve_qcqp_barrier(&p, None, &BarrierSettings::default()).unwrap();
        let want = linalg::pinv_psd(&a0, 1e-10).unwrap() * &b0;
        assert!((&sol.z - &want).norm() < 1e-6);

        let free = QcqpProblem { constraints: vec![], ..p };
        let sol = solve_qcqp_barrier(&free, None, &BarrierSettings::default()).unwrap();
        assert!((&sol.z - &want).norm() < 1e-10);
    }

    #[test]
    fn box_only_problem_projects_onto_disk() {
        // minimize |z - 2|^2 over |z| <= 1: optimum z = 1
        let p = QcqpProblem {
            a0: scalar(1.0),
            b0: CVector::from_element(1, linalg::c(2.0, 0.0)),
            c0: 4.0,
            constraints: vec![],
            unit_box: true,
        };
        let sol = solve_qcqp_barrier(&p, None, &BarrierSettings::default()).unwrap();
        assert!((sol.z[0] - linalg::c(1.0, 0.0)).norm() < 1e-7);
        assert!(sol.objective - 1.0 < 1e-7);
    }

    #[test]
    fn infeasible_start_is_reported() {
        let p = QcqpProblem {
            a0: scalar(1.0),
            b0: CVector::zeros(1),
            c0: 0.0,
            constraints: vec![QuadConstraint { a: scalar(1.0), b: CVector::zeros(1), r: -1.0 }],
            unit_box: false,
        };
        assert!(matches!(solve_qcqp_barrier(&p, None, &BarrierSettings::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn solution_is_feasible_and_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let n = 6;
            let a0 = random_psd(&mut rng, n, 3);
            let b0 = random_vector(&mut rng, n).scale(3.0);
            let cons = (0..2)
                .map(|_| QuadConstraint { a: random_psd(&mut rng, n, n), b: random_vector(&mut rng, n).scale(0.1), r: 1.0 })
                .collect();
            let p = QcqpProblem { a0, b0, c0: 0.0, constraints: cons, unit_box: false };
            let sol = solve_qcqp_barrier(&p, None, &BarrierSettings::default()).unwrap();
            assert!(p.max_violation(&sol.z) <= 1e-8);
            assert!(sol.stationarity <= 1e-6, "stationarity {}", sol.stationarity);
            assert!(sol.kkt_residual <= 1e-6);
        }
    }
    #[test]
    fn warm_starts_on_the_boundary_still_reach_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 5;
        let a = random_psd(&mut rng, n, n) + CMatrix::identity(n, n);
        let p = QcqpProblem {
            a0: random_psd(&mut rng, n, 2),
            b0: random_vector(&mut rng, n).scale(10.0),
            c0: 0.0,
            constraints: vec![QuadConstraint { a: a.clone(), b: CVector::zeros(n), r: 1.0 }],
            unit_box: false,
        };
        let reference = solve_qcqp_barrier(&p, None, &BarrierSettings::default()).unwrap();
        for k in 0..200 {
            let v = random_vector(&mut rng, n);
            let on_edge = v.unscale(quad_form(&a, &v).sqrt());
            let z = on_edge.scale(1.0 + (k % 9) as f64 * 1e-17 - 4e-17);
            let sol = solve_qcqp_barrier(&p, Some(&z), &BarrierSettings::default()).unwrap();
            assert!(p.max_violation(&sol.z) <= 1e-8);
            assert!((sol.objective - reference.objective).abs() <= 1e-6 * reference.objective.abs().max(1.0));
        }
    }
}
