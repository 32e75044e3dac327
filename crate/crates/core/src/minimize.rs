//! Constrained minimization of the discrete energy subject to Dirichlet
//! boundary values: gradient descent with Armijo backtracking as the
//! baseline, with a Polak-Ribiere conjugate-gradient accelerator behind
//! the same interface. Descent monotonicity is part of the contract.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::energy::{energy, energy_gradient};
use crate::error::{Error, Result};
use crate::grid::{Domain, VectorField};
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GradientDescent,
    ConjugateGradient,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Convergence threshold on the max-norm of the raw discrete
    /// gradient (which carries the h^n cell factor).
    pub grad_tol: f64,
    pub initial_step: f64,
    /// Backtracking factor in (0, 1).
    pub shrink: f64,
    /// Sufficient-decrease constant in (0, 1).
    pub c1: f64,
    pub method: Method,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 200_000,
            grad_tol: 1e-8,
            initial_step: 1.0,
            shrink: 0.5,
            c1: 1e-4,
            method: Method::ConjugateGradient,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("grad_tol must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument("shrink must be in (0,1)".into()));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::InvalidArgument("c1 must be in (0,1)".into()));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidArgument(
                "initial_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// Line search failed after 60 halvings; best iterate returned.
    Stalled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_energy: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Nonincreasing record of accepted energies; kept out of JSON
    /// reports (exportable separately as CSV).
    #[serde(skip)]
    pub energy_history: Vec<f64>,
}

/// Initial iterate policy.
pub enum Init {
    Field(VectorField),
    /// Solve the W == 0 problem first and start from that.
    HarmonicExtension,
    Constant(Vec<f64>),
}

/// Minimize J subject to v = g on the boundary. The returned field carries
/// g bit-exactly (interior updates never touch boundary nodes).
pub fn minimize(
    domain: &Arc<Domain>,
    g: &dyn Fn(&[f64]) -> Vec<f64>,
    w: &Potential,
    init: Init,
    opts: &SolveOptions,
) -> Result<(VectorField, SolveStats)> {
    opts.validate()?;
    let m = w.m();
    let mut v = match init {
        Init::Field(f) => {
            if f.m() != m {
                return Err(Error::InvalidArgument(
                    "init field dimension mismatch".into(),
                ));
            }
            f
        }
        Init::Constant(c) => VectorField::constant(domain.clone(), m, &c),
        Init::HarmonicExtension => {
            let start = VectorField::constant(domain.clone(), m, w.a());
            let laplace = Potential::zero(m);
            let mut lap_opts = *opts;
            lap_opts.grad_tol = opts.grad_tol.max(1e-10);
            let (f, _) = descend(domain, g, &laplace, start, &lap_opts)?;
            f
        }
    };
    v.set_boundary(g);
    descend(domain, g, w, v, opts)
}

fn descend(
    domain: &Arc<Domain>,
    g: &dyn Fn(&[f64]) -> Vec<f64>,
    w: &Potential,
    mut v: VectorField,
    opts: &SolveOptions,
) -> Result<(VectorField, SolveStats)> {
    v.set_boundary(g);
    v.check_finite()?;
    let _ = domain;

    let mut e = energy(&v, w)?.total;
    if !e.is_finite() {
        return Err(Error::Diverged { iter: 0 });
    }
    let mut history = vec![e];
    let mut grad = energy_gradient(&v, w)?;
    let mut dir: Vec<f64> = grad.values().iter().map(|x| -x).collect();
    let mut prev_grad: Vec<f64> = grad.values().to_vec();
    let mut step = opts.initial_step;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        let gnorm = max_abs(grad.values());
        if gnorm <= opts.grad_tol {
            termination = Termination::Converged;
            break;
        }
        iterations = iter + 1;

        // descent direction: steepest or PR+ conjugate gradient
        if opts.method == Method::ConjugateGradient && iter > 0 {
            let gg_prev: f64 = prev_grad.iter().map(|x| x * x).sum();
            let mut beta = 0.0;
            if gg_prev > 0.0 {
                let num: f64 = grad
                    .values()
                    .iter()
                    .zip(&prev_grad)
                    .map(|(gn, gp)| gn * (gn - gp))
                    .sum();
                beta = (num / gg_prev).max(0.0);
            }
            for (d, gcur) in dir.iter_mut().zip(grad.values()) {
                *d = -gcur + beta * *d;
            }
        } else {
            for (d, gcur) in dir.iter_mut().zip(grad.values()) {
                *d = -gcur;
            }
        }
        let mut slope: f64 = dir.iter().zip(grad.values()).map(|(d, gc)| d * gc).sum();
        if slope >= 0.0 {
            // not a descent direction; reset to steepest descent
            for (d, gcur) in dir.iter_mut().zip(grad.values()) {
                *d = -gcur;
            }
            slope = -grad.values().iter().map(|x| x * x).sum::<f64>();
        }

        // Armijo backtracking, at most 60 halvings
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = v.clone();
            for (c, d) in cand.values_mut().iter_mut().zip(&dir) {
                *c += t * d;
            }
            let ec = energy(&cand, w)?.total;
            if !ec.is_finite() {
                return Err(Error::Diverged { iter });
            }
            if ec <= e + opts.c1 * t * slope {
                v = cand;
                e = ec;
                accepted = true;
                break;
            }
            t *= opts.shrink;
        }
        if !accepted {
            termination = Termination::Stalled;
            break;
        }
        step = (t * 2.0).min(opts.initial_step.max(1.0));
        history.push(e);
        prev_grad.copy_from_slice(grad.values());
        grad = energy_gradient(&v, w)?;
    }

    if termination == Termination::MaxIters && max_abs(grad.values()) <= opts.grad_tol {
        termination = Termination::Converged;
    }
    let stats = SolveStats {
        iterations,
        final_grad_norm: max_abs(grad.values()),
        final_energy: e,
        converged: termination == Termination::Converged,
        termination,
        energy_history: history,
    };
    Ok((v, stats))
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_box_domain;
    use crate::potential::{make_double_well_1d, make_quadratic};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_1d_matches_cosh_solution() {
        // u'' = 2u, u(0) = u(1) = 0.1 -> u(x) = 0.1 cosh(sqrt2(x-1/2))/cosh(sqrt2/2)
        let d = build_box_domain(1, &[1.0], 1.0 / 64.0).unwrap();
        let w = make_quadratic(vec![0.0], 1.0);
        let (u, stats) = minimize(
            &d,
            &|_x| vec![0.1],
            &w,
            Init::HarmonicExtension,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(stats.converged);
        let s2 = 2.0_f64.sqrt();
        let center = 0.1 / (0.5 * s2).cosh();
        let mid = u.get(32)[0];
        assert!((mid - center).abs() <= 2e-3, "mid {mid} vs {center}");
        let max_int = d
            .interior_nodes()
            .iter()
            .map(|&i| u.get(i)[0].abs())
            .fold(0.0_f64, f64::max);
        assert!(max_int <= 0.1 + 1e-9);
    }

    #[test]
    fn boundary_data_preserved_bit_exact() {
        let d = build_box_domain(1, &[1.0], 1.0 / 32.0).unwrap();
        let w = make_double_well_1d();
        let g = |x: &[f64]| vec![1.2 + 0.01 * x[0]];
        let (u, _) = minimize(
            &d,
            &g,
            &w,
            Init::Constant(vec![1.0]),
            &SolveOptions::default(),
        )
        .unwrap();
        for &idx in d.boundary_nodes() {
            assert_eq!(u.get(idx)[0], g(&d.coords(idx))[0]);
        }
    }

    #[test]
    fn trivial_boundary_at_well_stays_at_well() {
        let d = build_box_domain(2, &[1.0, 1.0], 0.125).unwrap();
        let w = make_double_well_1d();
        let (u, stats) = minimize(
            &d,
            &|_x| vec![1.0],
            &w,
            Init::Constant(vec![1.0]),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(stats.converged);
        assert!(stats.iterations <= 1);
        assert_eq!(stats.final_energy, 0.0);
        for idx in d.in_set_nodes() {
            assert_eq!(u.get(idx)[0], 1.0);
        }
    }

    #[test]
    fn max_iters_one_still_decreases_energy() {
        let d = build_box_domain(1, &[1.0], 1.0 / 32.0).unwrap();
        let w = make_double_well_1d();
        let mut opts = SolveOptions::default();
        opts.max_iters = 1;
        let init = VectorField::constant(d.clone(), 1, &[0.3]);
        let e_init = crate::energy::energy(
            &{
                let mut f = init.clone();
                f.set_boundary(|_| vec![1.2]);
                f
            },
            &w,
        )
        .unwrap()
        .total;
        let (u, stats) = minimize(&d, &|_x| vec![1.2], &w, Init::Field(init), &opts).unwrap();
        assert!(!stats.converged);
        assert!(crate::energy::energy(&u, &w).unwrap().total <= e_init);
    }

    #[test]
    fn energy_history_monotone() {
        let d = build_box_domain(1, &[1.0], 1.0 / 64.0).unwrap();
        let w = make_double_well_1d();
        for method in [Method::GradientDescent, Method::ConjugateGradient] {
            let mut opts = SolveOptions::default();
            opts.method = method;
            opts.max_iters = 2000;
            let (_, stats) =
                minimize(&d, &|_x| vec![1.18], &w, Init::Constant(vec![0.9]), &opts).unwrap();
            for k in 1..stats.energy_history.len() {
                assert!(stats.energy_history[k] <= stats.energy_history[k - 1]);
            }
        }
    }

    #[test]
    fn stationarity_spot_check() {
        let d = build_box_domain(1, &[1.0], 1.0 / 64.0).unwrap();
        let w = make_double_well_1d();
        let (u, stats) = minimize(
            &d,
            &|_x| vec![1.15],
            &w,
            Init::HarmonicExtension,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(stats.converged);
        let e0 = crate::energy::energy(&u, &w).unwrap().total;
        let scale = u.values().iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let mut pert = u.clone();
            for &idx in d.interior_nodes() {
                let delta: f64 = rng.gen_range(-1.0..1.0);
                let cur = pert.get(idx)[0];
                pert.set(idx, &[cur + 1e-4 * scale * delta]);
            }
            let e1 = crate::energy::energy(&pert, &w).unwrap().total;
            assert!(
                e1 >= e0 - 1e-12,
                "perturbation lowered energy: {e0} -> {e1}"
            );
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let mut o = SolveOptions::default();
        o.shrink = 1.5;
        assert!(o.validate().is_err());
        let mut o = SolveOptions::default();
        o.max_iters = 0;
        assert!(o.validate().is_err());
    }
}
