use rayon::prelude::*;

use super::system::LinearOperator;

// Fixed reduction blocks: partial sums are combined in block order, so the
// result does not depend on how many threads ran.
const BLOCK: usize = 4096;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partials: Vec<f64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(BLOCK)
        .zip(x.par_chunks(BLOCK))
        .for_each(|(y, x)| y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x));
}

/// Result of a conjugate-gradient run.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
    /// Relative residual before the first iteration and after each one.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Conjugate gradient for a symmetric positive definite operator, starting from `initial`.
///
/// Stops once the relative residual drops to `tolerance` or after `max_iters`
/// iterations, whichever comes first. A zero right-hand side returns zero.
pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    initial: &[f64],
    tolerance: f64,
    max_iters: usize,
) -> CgOutcome {
    let n = op.dim();
    assert_eq!(rhs.len(), n, "right-hand side has wrong length");
    assert_eq!(initial.len(), n, "initial guess has wrong length");

    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
            converged: true,
        };
    }

    let mut x = initial.to_vec();
    let mut ap = vec![0.0; n];
    op.apply(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut history = vec![rr.sqrt() / b_norm];
    let mut iterations = 0;

    while history[iterations] > tolerance && iterations < max_iters {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            // breakdown: the operator is not positive definite along p
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        p.par_chunks_mut(BLOCK)
            .zip(r.par_chunks(BLOCK))
            .for_each(|(p, r)| p.iter_mut().zip(r).for_each(|(p, r)| *p = r + beta * *p));
        iterations += 1;
        history.push(rr.sqrt() / b_norm);
    }

    let residual = history[iterations];
    CgOutcome {
        solution: x,
        iterations,
        residual,
        history,
        converged: residual <= tolerance,
    }
}
