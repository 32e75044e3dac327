//! Multi-well energy densities W: R^m -> R with gradient/Hessian access and
//! numerical checks of the radial-monotonicity and punctured-ball
//! positivity hypotheses.
//!
//! The checks are sampling-based: a passing report is evidence, not proof,
//! and carries its sample counts so callers can demand density.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dist, norm};

/// Roundoff slack for the "nondecreasing along rays" check.
pub const TOL_MONO: f64 = 1e-10;
/// A polished local minimum of W below this value counts as a zero.
pub const TOL_POS: f64 = 1e-8;

type EvalFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Energy density W with its zero `a` and radial-monotonicity radius `r0`.
pub struct Potential {
    m: usize,
    a: Vec<f64>,
    r0: f64,
    name: String,
    eval: EvalFn,
    grad: GradFn,
    /// Row-major m*m Hessian; None falls back to finite differences of grad.
    hess: Option<HessFn>,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("a", &self.a)
            .field("r0", &self.r0)
            .finish()
    }
}

impl Potential {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        a: Vec<f64>,
        r0: f64,
        eval: EvalFn,
        grad: GradFn,
        hess: Option<HessFn>,
    ) -> Self {
        assert_eq!(a.len(), m);
        assert!(r0 > 0.0);
        Potential {
            m,
            a,
            r0,
            name: name.into(),
            eval,
            grad,
            hess,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    pub fn grad(&self, u: &[f64]) -> Vec<f64> {
        (self.grad)(u)
    }

    pub fn has_analytic_hess(&self) -> bool {
        self.hess.is_some()
    }

    /// Analytic Hessian when supplied, otherwise central differences of
    /// grad at step 1e-4.
    pub fn hess(&self, u: &[f64]) -> Vec<f64> {
        match &self.hess {
            Some(h) => h(u),
            None => hess_fd_fallback(self, u, 1e-4),
        }
    }

    /// W ≡ 0, used for the harmonic-extension start.
    pub fn zero(m: usize) -> Self {
        Potential::new(
            "zero",
            m,
            vec![0.0; m],
            1.0,
            Box::new(|_| 0.0),
            Box::new(move |_| vec![0.0; m]),
            Some(Box::new(move |_| vec![0.0; m * m])),
        )
    }
}

/// W(u) = (1 - u^2)^2 with a = 1, r0 = 0.5.
pub fn make_double_well_1d() -> Potential {
    Potential::new(
        "double_well_1d",
        1,
        vec![1.0],
        0.5,
        Box::new(|u: &[f64]| {
            let s = 1.0 - u[0] * u[0];
            s * s
        }),
        Box::new(|u: &[f64]| vec![-4.0 * u[0] * (1.0 - u[0] * u[0])]),
        Some(Box::new(|u: &[f64]| vec![12.0 * u[0] * u[0] - 4.0])),
    )
}

/// W(u) = prod_i |u - a_i|^2 over the given wells; `a` is the first well.
pub fn make_product_well(wells: Vec<Vec<f64>>, r0: f64) -> Potential {
    assert!(!wells.is_empty());
    let m = wells[0].len();
    assert!(wells.iter().all(|w| w.len() == m));
    let a = wells[0].clone();
    let eval_wells = wells.clone();
    let grad_wells = wells.clone();
    let hess_wells = wells.clone();
    Potential::new(
        "product_well",
        m,
        a,
        r0,
        Box::new(move |u: &[f64]| {
            eval_wells
                .iter()
                .map(|w| {
                    let d = dist(u, w);
                    d * d
                })
                .product()
        }),
        Box::new(move |u: &[f64]| {
            let k = grad_wells.len();
            let f: Vec<f64> = grad_wells
                .iter()
                .map(|w| {
                    let d = dist(u, w);
                    d * d
                })
                .collect();
            let mut g = vec![0.0; m];
            for i in 0..k {
                let mut prod_others = 1.0;
                for j in 0..k {
                    if j != i {
                        prod_others *= f[j];
                    }
                }
                for c in 0..m {
                    g[c] += 2.0 * (u[c] - grad_wells[i][c]) * prod_others;
                }
            }
            g
        }),
        Some(Box::new(move |u: &[f64]| {
            // H = sum_i 2I prod_{j!=i} f_j
            //   + sum_i sum_{k!=i} prod_{j!=i,k} f_j * grad f_i (grad f_k)^T
            let nw = hess_wells.len();
            let f: Vec<f64> = hess_wells
                .iter()
                .map(|w| {
                    let d = dist(u, w);
                    d * d
                })
                .collect();
            let gf: Vec<Vec<f64>> = hess_wells
                .iter()
                .map(|w| (0..m).map(|c| 2.0 * (u[c] - w[c])).collect())
                .collect();
            let mut h = vec![0.0; m * m];
            for i in 0..nw {
                let mut prod_others = 1.0;
                for j in 0..nw {
                    if j != i {
                        prod_others *= f[j];
                    }
                }
                for c in 0..m {
                    h[c * m + c] += 2.0 * prod_others;
                }
                for k in 0..nw {
                    if k == i {
                        continue;
                    }
                    let mut prod_rest = 1.0;
                    for j in 0..nw {
                        if j != i && j != k {
                            prod_rest *= f[j];
                        }
                    }
                    for r in 0..m {
                        for c in 0..m {
                            h[r * m + c] += prod_rest * gf[i][r] * gf[k][c];
                        }
                    }
                }
            }
            h
        })),
    )
}

/// Three wells at the cube roots of unity in R^2; a = (1, 0), default r0 = 0.2.
pub fn make_triple_well_2d() -> Potential {
    make_triple_well_2d_with_r0(0.2)
}

pub fn make_triple_well_2d_with_r0(r0: f64) -> Potential {
    let s = 3.0_f64.sqrt() / 2.0;
    let mut p = make_product_well(vec![vec![1.0, 0.0], vec![-0.5, s], vec![-0.5, -s]], r0);
    p.name = "triple_well_2d".into();
    p
}

/// W(u) = |u - a|^2.
pub fn make_quadratic(a: Vec<f64>, r0: f64) -> Potential {
    let m = a.len();
    let a_eval = a.clone();
    let a_grad = a.clone();
    Potential::new(
        "quadratic",
        m,
        a,
        r0,
        Box::new(move |u: &[f64]| {
            let d = dist(u, &a_eval);
            d * d
        }),
        Box::new(move |u: &[f64]| (0..m).map(|c| 2.0 * (u[c] - a_grad[c])).collect()),
        Some(Box::new(move |_u: &[f64]| {
            let mut h = vec![0.0; m * m];
            for c in 0..m {
                h[c * m + c] = 2.0;
            }
            h
        })),
    )
}

/// Symmetrized central-difference Hessian of grad.
pub fn hess_fd_fallback(w: &Potential, u: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0);
    let m = w.m();
    let mut raw = vec![0.0; m * m];
    for j in 0..m {
        let mut up = u.to_vec();
        up[j] += h;
        let mut dn = u.to_vec();
        dn[j] -= h;
        let gp = w.grad(&up);
        let gn = w.grad(&dn);
        for i in 0..m {
            raw[i * m + j] = (gp[i] - gn[i]) / (2.0 * h);
        }
    }
    let mut sym = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            sym[i * m + j] = 0.5 * (raw[i * m + j] + raw[j * m + i]);
        }
    }
    sym
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub passed: bool,
    /// Largest negative sampled radial derivative, as a magnitude (0 if none).
    pub worst_violation: f64,
    pub witness_dir: Vec<f64>,
    pub witness_radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositivityCheck {
    pub passed: bool,
    pub worst_violation: f64,
    /// Point in the punctured ball where W comes closest to (or reaches) zero.
    pub witness: Vec<f64>,
    pub witness_value: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub radial_monotone: Option<MonotonicityCheck>,
    pub positive_on_punctured_ball: Option<PositivityCheck>,
    pub n_dirs: usize,
    pub n_radii: usize,
    pub n_samples: usize,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.radial_monotone.as_ref().is_some_and(|c| c.passed)
            && self
                .positive_on_punctured_ball
                .as_ref()
                .is_some_and(|c| c.passed)
    }
}

/// Quasi-uniform directions on S^{m-1}: signs for m = 1, equispaced angles
/// for m = 2, a fixed-seed sample for m >= 3.
pub fn sample_directions(m: usize, n_dirs: usize) -> Vec<Vec<f64>> {
    match m {
        1 => {
            let mut dirs = vec![vec![1.0]];
            if n_dirs > 1 {
                dirs.push(vec![-1.0]);
            }
            dirs
        }
        2 => (0..n_dirs)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n_dirs as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1f5);
            (0..n_dirs)
                .map(|_| {
                    loop {
                        let v: Vec<f64> = (0..m)
                            .map(|_| {
                                // Box-Muller normal deviate
                                let u1: f64 = rng.gen_range(1e-12..1.0);
                                let u2: f64 = rng.gen_range(0.0..1.0);
                                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                            })
                            .collect();
                        let nv = norm(&v);
                        if nv > 1e-8 {
                            return v.iter().map(|x| x / nv).collect();
                        }
                    }
                })
                .collect()
        }
    }
}

/// Sample d/dr W(a + r nu) = grad(a + r nu) . nu on a direction/radius grid
/// over (0, r0] and flag any derivative below -TOL_MONO.
pub fn check_radial_monotonicity(
    w: &Potential,
    n_dirs: usize,
    n_radii: usize,
) -> Result<HypothesisReport> {
    if n_dirs < 1 || n_radii < 2 {
        return Err(Error::InvalidArgument(
            "need n_dirs >= 1 and n_radii >= 2".into(),
        ));
    }
    let dirs = sample_directions(w.m(), n_dirs);
    let mut worst = f64::INFINITY;
    let mut witness_dir = dirs[0].clone();
    let mut witness_radius = 0.0;
    for nu in &dirs {
        for k in 1..=n_radii {
            let r = w.r0() * k as f64 / n_radii as f64;
            let p: Vec<f64> = (0..w.m()).map(|c| w.a()[c] + r * nu[c]).collect();
            let g = w.grad(&p);
            let deriv: f64 = g.iter().zip(nu).map(|(a, b)| a * b).sum();
            if deriv < worst {
                worst = deriv;
                witness_dir = nu.clone();
                witness_radius = r;
            }
        }
    }
    Ok(HypothesisReport {
        radial_monotone: Some(MonotonicityCheck {
            passed: worst >= -TOL_MONO,
            worst_violation: (-worst).max(0.0),
            witness_dir,
            witness_radius,
        }),
        positive_on_punctured_ball: None,
        n_dirs: dirs.len(),
        n_radii,
        n_samples: 0,
    })
}

/// Sample W on the punctured ball 0 < |u - a| < 2 r0 and polish the lowest
/// samples by projected descent, so isolated foreign zeros are found even
/// when no raw sample lands on them. The inner exclusion radius is
/// 0.01 r0; zeros of W closer to `a` than that are attributed to `a`.
pub fn check_positivity_punctured(w: &Potential, n_samples: usize) -> Result<HypothesisReport> {
    if n_samples < 1 {
        return Err(Error::InvalidArgument("need n_samples >= 1".into()));
    }
    let m = w.m();
    let r_outer = 2.0 * w.r0() * (1.0 - 1e-12);
    let r_inner = 0.01 * w.r0();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let nu = random_unit(&mut rng, m);
        let t: f64 = rng.gen_range(0.0f64..1.0).powf(1.0 / m as f64);
        let r = r_inner + (r_outer - r_inner) * t;
        let p: Vec<f64> = (0..m).map(|c| w.a()[c] + r * nu[c]).collect();
        samples.push((w.eval(&p), p));
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let polish_starts = samples.len().min(20);
    let mut best_val = f64::INFINITY;
    let mut best_point = samples[0].1.clone();
    for (_, p) in samples.iter().take(polish_starts) {
        let q = polish_min(w, p, r_inner, r_outer);
        let v = w.eval(&q);
        if v < best_val {
            best_val = v;
            best_point = q;
        }
    }
    Ok(HypothesisReport {
        radial_monotone: None,
        positive_on_punctured_ball: Some(PositivityCheck {
            passed: best_val > TOL_POS,
            worst_violation: (TOL_POS - best_val).max(0.0),
            witness: best_point,
            witness_value: best_val,
        }),
        n_dirs: 0,
        n_radii: 0,
        n_samples,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let nv = norm(&v);
        if nv > 1e-8 {
            return v.iter().map(|x| x / nv).collect();
        }
    }
}

/// Projected gradient descent on the annulus r_inner <= |u - a| <= r_outer.
fn polish_min(w: &Potential, start: &[f64], r_inner: f64, r_outer: f64) -> Vec<f64> {
    let m = w.m();
    let project = |p: &[f64]| -> Vec<f64> {
        let d: Vec<f64> = (0..m).map(|c| p[c] - w.a()[c]).collect();
        let t = norm(&d);
        if t < 1e-300 {
            return (0..m)
                .map(|c| w.a()[c] + if c == 0 { r_inner } else { 0.0 })
                .collect();
        }
        let clamped = t.clamp(r_inner, r_outer);
        (0..m).map(|c| w.a()[c] + clamped * d[c] / t).collect()
    };
    let mut x = project(start);
    let mut fx = w.eval(&x);
    let mut step = 0.1 * w.r0();
    for _ in 0..300 {
        let g = w.grad(&x);
        let gn = norm(&g);
        if gn < 1e-14 {
            break;
        }
        let mut accepted = false;
        let mut s = step;
        for _ in 0..40 {
            let cand: Vec<f64> = (0..m).map(|c| x[c] - s * g[c] / gn).collect();
            let cand = project(&cand);
            let fc = w.eval(&cand);
            if fc < fx {
                x = cand;
                fx = fc;
                step = s * 2.0;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Both hypothesis checks in one report.
pub fn check_hypotheses(
    w: &Potential,
    n_dirs: usize,
    n_radii: usize,
    n_samples: usize,
) -> Result<HypothesisReport> {
    let mono = check_radial_monotonicity(w, n_dirs, n_radii)?;
    let pos = check_positivity_punctured(w, n_samples)?;
    Ok(HypothesisReport {
        radial_monotone: mono.radial_monotone,
        positive_on_punctured_ball: pos.positive_on_punctured_ball,
        n_dirs: mono.n_dirs,
        n_radii: mono.n_radii,
        n_samples: pos.n_samples,
    })
}
