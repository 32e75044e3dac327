//! Discrete energy J(v) = sum over links of 1/2 |dv|^2/h^2 * h^n
//!                       + sum over nodes of W(v) * weight * h^n,
//! its exact gradient with respect to interior node values, and the
//! Euler-Lagrange residual.
//!
//! The Dirichlet term is a sum over links (forward differences), node
//! weights are 1 in the interior and 1/2 on the boundary. Both fields in
//! any energy comparison go through the same loops in the same order, so
//! inequalities between energies are meaningful at machine precision.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{NodeClass, VectorField};
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
}

pub fn energy(v: &VectorField, w: &Potential) -> Result<EnergyBreakdown> {
    v.check_finite()?;
    let dom = v.domain();
    let m = v.m();
    let h2 = dom.h() * dom.h();
    let cell = dom.cell();

    let mut dirichlet = 0.0;
    for &(i, j) in dom.links() {
        let vi = v.get(i);
        let vj = v.get(j);
        let mut d2 = 0.0;
        for c in 0..m {
            let d = vi[c] - vj[c];
            d2 += d * d;
        }
        dirichlet += 0.5 * d2 / h2 * cell;
    }

    let mut potential = 0.0;
    for idx in dom.in_set_nodes() {
        potential += w.eval(v.get(idx)) * dom.node_weight(idx) * cell;
    }

    Ok(EnergyBreakdown {
        dirichlet,
        potential,
        total: dirichlet + potential,
    })
}

/// Exact gradient of the discrete functional with respect to interior node
/// values; boundary components are zero.
pub fn energy_gradient(v: &VectorField, w: &Potential) -> Result<VectorField> {
    v.check_finite()?;
    let dom = v.domain().clone();
    let m = v.m();
    let h2 = dom.h() * dom.h();
    let cell = dom.cell();

    let mut grad = VectorField::zeros(dom.clone(), m);
    for &(i, j) in dom.links() {
        let vi = v.get(i).to_vec();
        let vj = v.get(j).to_vec();
        for c in 0..m {
            let d = (vi[c] - vj[c]) / h2 * cell;
            if dom.class(i) == NodeClass::Interior {
                grad.values_mut()[i * m + c] += d;
            }
            if dom.class(j) == NodeClass::Interior {
                grad.values_mut()[j * m + c] -= d;
            }
        }
    }
    for &idx in dom.interior_nodes() {
        let gw = w.grad(v.get(idx));
        for c in 0..m {
            grad.values_mut()[idx * m + c] += gw[c] * cell;
        }
    }
    Ok(grad)
}

/// Max over interior nodes of |lap_h v - grad W(v)| with the standard
/// (2n+1)-point Laplacian.
pub fn el_residual(v: &VectorField, w: &Potential) -> Result<f64> {
    v.check_finite()?;
    let dom = v.domain();
    let m = v.m();
    let h2 = dom.h() * dom.h();

    let mut worst = 0.0_f64;
    for &idx in dom.interior_nodes() {
        let vi = v.get(idx);
        let mut lap = vec![0.0; m];
        for nb in dom.neighbors(idx) {
            let vn = v.get(nb);
            for c in 0..m {
                lap[c] += (vn[c] - vi[c]) / h2;
            }
        }
        let gw = w.grad(vi);
        let mut r2 = 0.0;
        for c in 0..m {
            let d = lap[c] - gw[c];
            r2 += d * d;
        }
        worst = worst.max(r2.sqrt());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_box_domain;
    use crate::potential::{make_double_well_1d, make_quadratic, Potential};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randomize_interior(v: &mut VectorField, rng: &mut ChaCha8Rng, scale: f64) {
        let m = v.m();
        for &idx in v.domain().interior_nodes().to_vec().iter() {
            let vals: Vec<f64> = (0..m).map(|_| rng.gen_range(-scale..scale)).collect();
            v.set(idx, &vals);
        }
    }

    #[test]
    fn constant_at_well_has_zero_energy() {
        let d = build_box_domain(2, &[1.0, 1.0], 0.25).unwrap();
        let w = make_double_well_1d();
        let v = VectorField::constant(d, 1, &[1.0]);
        let e = energy(&v, &w).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn two_link_hand_sum() {
        // nodes (0, 1, 2) on [0,1] at h = 0.5, W == 0:
        // each link contributes 1/2 * (1/0.5)^2 * 0.5 = 1.0
        let d = build_box_domain(1, &[1.0], 0.5).unwrap();
        let w = Potential::zero(1);
        let mut v = VectorField::zeros(d.clone(), 1);
        for idx in 0..3 {
            v.set(idx, &[idx as f64]);
        }
        let e = energy(&v, &w).unwrap();
        assert_eq!(e.dirichlet, 2.0);
        assert_eq!(e.potential, 0.0);
        assert_eq!(e.total, 2.0);
    }

    #[test]
    fn zero_field_zero_potential_term() {
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let w = make_quadratic(vec![0.0], 1.0);
        let v = VectorField::zeros(d, 1);
        let e = energy(&v, &w).unwrap();
        assert_eq!(e.potential, 0.0);
    }

    #[test]
    fn nan_input_rejected() {
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let mut v = VectorField::zeros(d, 1);
        v.set(2, &[f64::NAN]);
        assert!(energy(&v, &make_double_well_1d()).is_err());
        assert!(energy_gradient(&v, &make_double_well_1d()).is_err());
    }

    #[test]
    fn gradient_zero_at_well() {
        let d = build_box_domain(2, &[1.0, 1.0], 0.25).unwrap();
        let w = make_double_well_1d();
        let v = VectorField::constant(d, 1, &[1.0]);
        let g = energy_gradient(&v, &w).unwrap();
        assert!(g.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cases: Vec<(std::sync::Arc<crate::grid::Domain>, usize)> = vec![
            (build_box_domain(1, &[1.0], 1.0 / 16.0).unwrap(), 1),
            (build_box_domain(2, &[1.0, 1.0], 1.0 / 8.0).unwrap(), 2),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (d, m) in cases {
            let w = if m == 1 {
                make_double_well_1d()
            } else {
                crate::potential::make_triple_well_2d()
            };
            for _ in 0..20 {
                let mut v = VectorField::constant(d.clone(), m, w.a());
                randomize_interior(&mut v, &mut rng, 1.0);
                let g = energy_gradient(&v, &w).unwrap();
                let mut dir = VectorField::zeros(d.clone(), m);
                randomize_interior(&mut dir, &mut rng, 1.0);
                let eps = 1e-6;
                let mut vp = v.clone();
                let mut vn = v.clone();
                for k in 0..v.values().len() {
                    vp.values_mut()[k] += eps * dir.values()[k];
                    vn.values_mut()[k] -= eps * dir.values()[k];
                }
                let fd =
                    (energy(&vp, &w).unwrap().total - energy(&vn, &w).unwrap().total) / (2.0 * eps);
                let ip: f64 = g
                    .values()
                    .iter()
                    .zip(dir.values())
                    .map(|(a, b)| a * b)
                    .sum();
                let scale = fd.abs().max(ip.abs()).max(1e-8);
                assert!((fd - ip).abs() / scale <= 1e-5, "fd {fd} vs <g,w> {ip}");
            }
        }
    }

    #[test]
    fn gradient_matches_tridiagonal_form() {
        // quadratic W, 1-d, 3 interior nodes: grad_i = h*(-(v_{i-1}-2v_i+v_{i+1})/h^2 + 2 v_i)
        let d = build_box_domain(1, &[1.0], 0.25).unwrap();
        let w = make_quadratic(vec![0.0], 1.0);
        let mut v = VectorField::zeros(d.clone(), 1);
        let vals = [0.1, -0.4, 0.7, 0.2, -0.3];
        for (idx, &x) in vals.iter().enumerate() {
            v.set(idx, &[x]);
        }
        let g = energy_gradient(&v, &w).unwrap();
        let h = 0.25;
        for i in 1..4 {
            let lap = (vals[i - 1] - 2.0 * vals[i] + vals[i + 1]) / (h * h);
            let expect = h * (-lap + 2.0 * vals[i]);
            assert!((g.get(i)[0] - expect).abs() <= 1e-14);
        }
        assert_eq!(g.get(0)[0], 0.0);
        assert_eq!(g.get(4)[0], 0.0);
    }

    #[test]
    fn translation_leaves_dirichlet_term() {
        let d = build_box_domain(1, &[1.0], 0.125).unwrap();
        let w = make_quadratic(vec![0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v = VectorField::zeros(d.clone(), 1);
        randomize_interior(&mut v, &mut rng, 1.0);
        let e0 = energy(&v, &w).unwrap();
        for k in 0..v.values().len() {
            v.values_mut()[k] += 0.37;
        }
        // outside nodes hold zeros but the box has none
        let e1 = energy(&v, &w).unwrap();
        assert!((e0.dirichlet - e1.dirichlet).abs() <= 1e-12);
        assert!(e1.potential != e0.potential);
    }

    #[test]
    fn el_residual_zero_at_well() {
        let d = build_box_domain(1, &[1.0], 0.125).unwrap();
        let w = make_double_well_1d();
        let v = VectorField::constant(d, 1, &[1.0]);
        assert_eq!(el_residual(&v, &w).unwrap(), 0.0);
    }

    #[test]
    fn el_residual_cosh_refinement() {
        // u'' = 2u with unit boundary values: u(x) = cosh(sqrt2 (x-1/2)) / cosh(sqrt2/2)
        let w = make_quadratic(vec![0.0], 1.0);
        let s2 = 2.0_f64.sqrt();
        let exact = |x: f64| ((x - 0.5) * s2).cosh() / (0.5 * s2).cosh();
        let mut residuals = Vec::new();
        for k in [16usize, 32, 64] {
            let d = build_box_domain(1, &[1.0], 1.0 / k as f64).unwrap();
            let v = VectorField::from_fn(d, 1, |x| vec![exact(x[0])]);
            residuals.push(el_residual(&v, &w).unwrap());
        }
        // O(h^2): each halving should cut the residual by about 4
        assert!(residuals[1] < residuals[0] / 3.0);
        assert!(residuals[2] < residuals[1] / 3.0);
    }
}
