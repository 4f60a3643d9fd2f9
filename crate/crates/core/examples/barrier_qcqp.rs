//! Solves a small complex QCQP with the log-barrier method and prints the
//! multipliers and KKT residual.

use irs_cr::convex::barrier::{solve_qcqp_barrier, BarrierSettings, QcqpProblem, QuadConstraint};
use irs_cr::linalg::{CMatrix, CVector};
use num_complex::Complex64;

fn main() -> irs_cr::Result<()> {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    // Minimize ‖z − (2, 1+i)‖² over the unit ball, also keeping |z_0|² ≤ 0.25.
    let target = CVector::from_vec(vec![z(2.0, 0.0), z(1.0, 1.0)]);
    let problem = QcqpProblem {
        a0: CMatrix::identity(2, 2),
        b0: target.clone(),
        c0: target.norm_squared(),
        constraints: vec![
            QuadConstraint { a: CMatrix::identity(2, 2), b: CVector::zeros(2), r: 1.0 },
            QuadConstraint {
                a: CMatrix::from_diagonal(&CVector::from_vec(vec![z(1.0, 0.0), z(0.0, 0.0)])),
                b: CVector::zeros(2),
                r: 0.25,
            },
        ],
        unit_box: false,
    };
    let sol = solve_qcqp_barrier(&problem, None, &BarrierSettings::default())?;
    println!("z = [{:.6}, {:.6}]", sol.z[0], sol.z[1]);
    println!("objective {:.9}", sol.objective);
    println!("multipliers {:?}", sol.multipliers);
    println!("slacks {:?}", problem.constraints.iter().map(|c| c.slack(&sol.z)).collect::<Vec<_>>());
    println!("KKT residual {:.2e}, gap bound {:.2e}, {} Newton steps", sol.kkt_residual, sol.gap, sol.newton_steps);
    Ok(())
}
