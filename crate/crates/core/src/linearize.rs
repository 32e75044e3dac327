//! Segment-averaged Hessians Q(x) = int_0^1 hess W(a + t(u - a)) dt and
//! the algebraic identities grad W(u) = Q (u - a) (when grad W(a) = 0) and
//! grad W(u) - grad W(v) = Qbar (u - v). Gauss-Legendre quadrature along
//! the segment, default 8 nodes.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Domain, VectorField};
use crate::potential::Potential;

/// Per-node symmetric m x m matrices on a domain.
#[derive(Clone, Debug)]
pub struct MatrixField {
    domain: Arc<Domain>,
    m: usize,
    mats: Vec<f64>,
    max_op_norm: f64,
}

impl MatrixField {
    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mat(&self, idx: usize) -> &[f64] {
        let mm = self.m * self.m;
        &self.mats[idx * mm..(idx + 1) * mm]
    }

    /// Max over in-set nodes of the spectral norm.
    pub fn max_op_norm(&self) -> f64 {
        self.max_op_norm
    }
}

/// Nodes and weights of n-point Gauss-Legendre quadrature on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Newton iteration on Legendre polynomials over [-1, 1]
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // map to [0, 1], ascending node order
    let mut pairs: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (p0 - x * p1) / (1.0 - x * x);
    (p1, d)
}

/// Spectral norm of a symmetric m x m matrix.
pub fn sym_op_norm(mat: &[f64], m: usize) -> f64 {
    match m {
        1 => mat[0].abs(),
        2 => {
            let (a, b, c) = (mat[0], mat[1], mat[3]);
            let t = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (t + d).abs().max((t - d).abs())
        }
        _ => {
            // power iteration; adequate for the small m used here
            let mut v = vec![1.0 / (m as f64).sqrt(); m];
            let mut lambda = 0.0;
            for _ in 0..200 {
                let mut av = vec![0.0; m];
                for i in 0..m {
                    for j in 0..m {
                        av[i] += mat[i * m + j] * v[j];
                    }
                }
                let nv = av.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nv == 0.0 {
                    return 0.0;
                }
                lambda = nv;
                for i in 0..m {
                    v[i] = av[i] / nv;
                }
            }
            lambda
        }
    }
}

fn assemble_along(
    domain: &Arc<Domain>,
    m: usize,
    w: &Potential,
    quad_nodes: usize,
    endpoint: impl Fn(usize, f64) -> Vec<f64>,
) -> Result<MatrixField> {
    if quad_nodes < 1 {
        return Err(Error::InvalidArgument("quad_nodes must be >= 1".into()));
    }
    let (ts, ws) = gauss_legendre_unit(quad_nodes);
    let mm = m * m;
    let mut mats = vec![0.0; domain.num_nodes() * mm];
    let mut max_norm = 0.0_f64;
    for idx in domain.in_set_nodes() {
        let mut acc = vec![0.0; mm];
        for (&t, &wt) in ts.iter().zip(&ws) {
            let p = endpoint(idx, t);
            let h = w.hess(&p);
            for k in 0..mm {
                acc[k] += wt * h[k];
            }
        }
        // symmetrize; the integrand is symmetric up to roundoff/fd error
        for i in 0..m {
            for j in (i + 1)..m {
                let s = 0.5 * (acc[i * m + j] + acc[j * m + i]);
                acc[i * m + j] = s;
                acc[j * m + i] = s;
            }
        }
        max_norm = max_norm.max(sym_op_norm(&acc, m));
        mats[idx * mm..(idx + 1) * mm].copy_from_slice(&acc);
    }
    Ok(MatrixField {
        domain: domain.clone(),
        m,
        mats,
        max_op_norm: max_norm,
    })
}

/// Q(x) = int_0^1 hess W(a + t (u(x) - a)) dt per node.
pub fn assemble_q(
    u: &VectorField,
    a: &[f64],
    w: &Potential,
    quad_nodes: usize,
) -> Result<MatrixField> {
    if u.m() != w.m() || a.len() != w.m() {
        return Err(Error::InvalidArgument(
            "dimension mismatch in assemble_q".into(),
        ));
    }
    let m = u.m();
    let domain = u.domain().clone();
    let a = a.to_vec();
    let u = u.clone();
    assemble_along(&domain, m, w, quad_nodes, move |idx, t| {
        let p = u.get(idx);
        (0..m).map(|c| a[c] + t * (p[c] - a[c])).collect()
    })
}

/// Qbar(x) = int_0^1 hess W(v(x) + t (u(x) - v(x))) dt per node.
pub fn assemble_q_segment(
    u: &VectorField,
    v: &VectorField,
    w: &Potential,
    quad_nodes: usize,
) -> Result<MatrixField> {
    if !u.same_layout(v) || u.m() != w.m() {
        return Err(Error::InvalidArgument(
            "assemble_q_segment needs matching fields".into(),
        ));
    }
    let m = u.m();
    let domain = u.domain().clone();
    let u = u.clone();
    let v = v.clone();
    assemble_along(&domain, m, w, quad_nodes, move |idx, t| {
        let pu = u.get(idx);
        let pv = v.get(idx);
        (0..m).map(|c| pv[c] + t * (pu[c] - pv[c])).collect()
    })
}

/// Max over nodes of |grad W(u) - Q (u - a)|.
pub fn residual_fundamental(u: &VectorField, a: &[f64], w: &Potential, q: &MatrixField) -> f64 {
    let m = u.m();
    let mut worst = 0.0_f64;
    for idx in u.domain().in_set_nodes() {
        let p = u.get(idx);
        let g = w.grad(p);
        let mat = q.mat(idx);
        let mut r2 = 0.0;
        for i in 0..m {
            let mut qd = 0.0;
            for j in 0..m {
                qd += mat[i * m + j] * (p[j] - a[j]);
            }
            let d = g[i] - qd;
            r2 += d * d;
        }
        worst = worst.max(r2.sqrt());
    }
    worst
}

/// Max over nodes of |grad W(u) - grad W(v) - Qbar (u - v)|.
pub fn residual_segment(u: &VectorField, v: &VectorField, w: &Potential, q: &MatrixField) -> f64 {
    let m = u.m();
    let mut worst = 0.0_f64;
    for idx in u.domain().in_set_nodes() {
        let pu = u.get(idx);
        let pv = v.get(idx);
        let gu = w.grad(pu);
        let gv = w.grad(pv);
        let mat = q.mat(idx);
        let mut r2 = 0.0;
        for i in 0..m {
            let mut qd = 0.0;
            for j in 0..m {
                qd += mat[i * m + j] * (pu[j] - pv[j]);
            }
            let d = gu[i] - gv[i] - qd;
            r2 += d * d;
        }
        worst = worst.max(r2.sqrt());
    }
    worst
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
    fn gauss_legendre_integrates_polynomials() {
        // n-point rule is exact through degree 2n-1
        let (ts, ws) = gauss_legendre_unit(4);
        for deg in 0..8 {
            let approx: f64 = ts.iter().zip(&ws).map(|(&t, &w)| w * t.powi(deg)).sum();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((approx - exact).abs() <= 1e-14, "degree {deg}");
        }
        let (_, w1) = gauss_legendre_unit(1);
        assert!((w1[0] - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn quadratic_q_is_constant_hessian() {
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let a = vec![0.3, -0.1];
        let w = make_quadratic(a.clone(), 1.0);
        let u = VectorField::from_fn(d, 2, |x| vec![x[0], 1.0 - x[0]]);
        let q = assemble_q(&u, &a, &w, 2).unwrap();
        for idx in u.domain().in_set_nodes() {
            let m = q.mat(idx);
            assert!((m[0] - 2.0).abs() <= 1e-14);
            assert!((m[3] - 2.0).abs() <= 1e-14);
            assert!(m[1].abs() <= 1e-14);
        }
        assert!((q.max_op_norm() - 2.0).abs() <= 1e-12);
        assert!(residual_fundamental(&u, &a, &w, &q) <= 1e-12);
    }

    #[test]
    fn degenerate_segment_gives_pointwise_hessian() {
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let w = make_double_well_1d();
        let u = VectorField::constant(d, 1, &[1.0]);
        let q = assemble_q(&u, &[1.0], &w, 4).unwrap();
        for idx in u.domain().in_set_nodes() {
            assert!((q.mat(idx)[0] - 8.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn double_well_matches_brute_force_quadrature() {
        // Q at u = 0.6, a = 1: int_0^1 W''(1 - 0.4 t) dt vs 10^6-point trapezoid
        let d = build_box_domain(1, &[1.0], 0.5).unwrap();
        let w = make_double_well_1d();
        let u = VectorField::constant(d, 1, &[0.6]);
        let q = assemble_q(&u, &[1.0], &w, 8).unwrap();
        let n = 1_000_000usize;
        let mut acc = 0.0;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let x = 1.0 - 0.4 * t;
            let val = 12.0 * x * x - 4.0;
            let wt = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += wt * val;
        }
        acc /= n as f64;
        assert!(
            (q.mat(0)[0] - acc).abs() <= 1e-10,
            "{} vs {}",
            q.mat(0)[0],
            acc
        );
    }

    #[test]
    fn fundamental_residual_double_well_random_fields() {
        let d = build_box_domain(1, &[1.0], 1.0 / 16.0).unwrap();
        let w = make_double_well_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let u = VectorField::from_fn(d.clone(), 1, |_| vec![rng.gen_range(-1.5..2.0)]);
            let q = assemble_q(&u, &[1.0], &w, 8).unwrap();
            let res = residual_fundamental(&u, &[1.0], &w, &q);
            assert!(res <= 1e-10, "residual {res}");
        }
    }

    #[test]
    fn segment_residual_quadratic_exact() {
        let d = build_box_domain(1, &[1.0], 0.125).unwrap();
        let w = make_quadratic(vec![0.0, 0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let u = VectorField::from_fn(d.clone(), 2, |_| {
            vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
        });
        let v = VectorField::from_fn(d.clone(), 2, |_| {
            vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
        });
        let q = assemble_q_segment(&u, &v, &w, 2).unwrap();
        assert!(residual_segment(&u, &v, &w, &q) <= 1e-12);
    }

    #[test]
    fn segment_matches_pointwise_hessian_when_equal() {
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let w = make_double_well_1d();
        let u = VectorField::constant(d, 1, &[0.4]);
        let q = assemble_q_segment(&u, &u, &w, 4).unwrap();
        let h = w.hess(&[0.4]);
        assert!((q.mat(0)[0] - h[0]).abs() <= 1e-12);
    }

    #[test]
    fn segment_residual_double_well_pairs() {
        let d = build_box_domain(1, &[1.0], 1.0 / 16.0).unwrap();
        let w = make_double_well_1d();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let u = VectorField::from_fn(d.clone(), 1, |_| vec![rng.gen_range(-1.5..2.0)]);
            let v = VectorField::from_fn(d.clone(), 1, |_| vec![rng.gen_range(-1.5..2.0)]);
            let q = assemble_q_segment(&u, &v, &w, 8).unwrap();
            assert!(residual_segment(&u, &v, &w, &q) <= 1e-10);
        }
    }

    #[test]
    fn boundedness_by_segment_hessian_norm() {
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let w = make_double_well_1d();
        let u = VectorField::from_fn(d.clone(), 1, |x| vec![1.0 + x[0]]);
        let q = assemble_q(&u, &[1.0], &w, 8).unwrap();
        // bound by the max Hessian norm over the sampled segments
        let mut seg_max = 0.0_f64;
        for idx in u.domain().in_set_nodes() {
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                let p = 1.0 + t * (u.get(idx)[0] - 1.0);
                seg_max = seg_max.max(w.hess(&[p])[0].abs());
            }
        }
        assert!(q.max_op_norm() <= seg_max + 1e-12);
        assert!(q.max_op_norm().is_finite());
    }

    #[test]
    fn residual_nonincreasing_in_quad_nodes() {
        // non-polynomial smooth potential: W = cosh(u - 1) - 1 shifted well
        let w = crate::potential::Potential::new(
            "cosh_well",
            1,
            vec![1.0],
            0.5,
            Box::new(|u: &[f64]| (u[0] - 1.0).cosh() - 1.0),
            Box::new(|u: &[f64]| vec![(u[0] - 1.0).sinh()]),
            Some(Box::new(|u: &[f64]| vec![(u[0] - 1.0).cosh()])),
        );
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let u = VectorField::from_fn(d, 1, |x| vec![1.0 + 2.0 * x[0]]);
        let mut prev = f64::INFINITY;
        for qn in [2usize, 4, 8, 16] {
            let q = assemble_q(&u, &[1.0], &w, qn).unwrap();
            let res = residual_fundamental(&u, &[1.0], &w, &q);
            assert!(res <= prev + 1e-13, "qn {qn}: {res} > {prev}");
            prev = res;
        }
    }
}
