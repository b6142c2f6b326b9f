//! Thin wrappers over `argmin` for the scalar and simplex searches used by the
//! CM steps.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::brent::{BrentOpt, BrentRoot};
use argmin::solver::neldermead::NelderMead;

/// Simplex searches stop once the spread of vertex values falls below this.
pub(crate) const SIMPLEX_SD_TOL: f64 = 1e-5;

struct Scalar<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Scalar<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> Result<f64, ArgminError> {
        Ok((self.0)(*x))
    }
}

struct Simplex<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Simplex<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, ArgminError> {
        let v = (self.0)(x);
        // the simplex ordering needs a total order; treat NaN as infeasible
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Maximizes `f` on `[lo, hi]` by Brent's method. Returns `(argmax, max)`.
pub(crate) fn maximize_bounded(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let neg = Scalar(|x: f64| {
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    });
    let solver = BrentOpt::new(lo, hi).set_tolerance(1.5e-8, 1e-11);
    match Executor::new(neg, solver).configure(|s| s.max_iters(200)).run() {
        Ok(res) => {
            let st = res.state();
            let x = st.get_best_param().copied().unwrap_or(0.5 * (lo + hi));
            (x, -st.get_best_cost())
        }
        Err(_) => {
            let x = 0.5 * (lo + hi);
            (x, f(x))
        }
    }
}

/// Root of `h` on `[lo, hi]`; `h(lo)` and `h(hi)` must differ in sign.
pub(crate) fn find_root(h: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let solver = BrentRoot::new(lo, hi, tol);
    let res = Executor::new(Scalar(h), solver)
        .configure(|s| s.max_iters(200))
        .run()
        .ok()?;
    res.state().get_best_param().copied()
}

/// Maximizes `f` by Nelder–Mead from `start`, with an axis-aligned initial
/// simplex of edge `step`. The returned point is never worse than `start`.
pub(crate) fn nelder_mead_max(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64, max_iter: u64) -> (Vec<f64>, f64) {
    let f0 = f(start);
    let mut vertices = vec![start.to_vec()];
    for j in 0..start.len() {
        let mut v = start.to_vec();
        v[j] += step;
        vertices.push(v);
    }
    let neg = Simplex(|x: &[f64]| -f(x));
    let best = NelderMead::new(vertices)
        .with_sd_tolerance(SIMPLEX_SD_TOL)
        .ok()
        .and_then(|solver| Executor::new(neg, solver).configure(|s| s.max_iters(max_iter)).run().ok())
        .and_then(|res| {
            let st = res.state();
            st.get_best_param().cloned().map(|p| (p, -st.get_best_cost()))
        });
    match best {
        Some((p, v)) if v >= f0 => (p, v),
        _ => (start.to_vec(), f0),
    }
}
