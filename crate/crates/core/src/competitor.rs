//! The cutoff competitor u~ (truncation of rho through the piecewise-linear
//! auxiliary function alpha) and the band competitor u^ = a + r nu, with
//! the energy-comparison report.
//!
//! The pointwise map behind u~ is 1-Lipschitz, so link differences can only
//! shrink and the discrete Dirichlet term of u~ is bounded by that of u
//! term by term; under radial monotonicity with r < r0/2 the potential
//! term shrinks nodewise as well. The comparison in the report therefore
//! holds exactly, not up to tolerance.

use serde::{Deserialize, Serialize};

use crate::decompose::split_energy;
use crate::energy::{energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{dist, VectorField};
use crate::potential::Potential;

/// Piecewise-linear cutoff: 1 up to r, down to 0 linearly on [r, 2r].
pub fn alpha(tau: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("alpha needs r > 0".into()));
    }
    Ok(if tau <= r {
        1.0
    } else if tau >= 2.0 * r {
        0.0
    } else {
        (2.0 * r - tau) / r
    })
}

/// psi(tau) = min(tau, r) * alpha(tau): tau on [0, r], 2r - tau on [r, 2r],
/// 0 beyond.
pub fn truncation_profile(tau: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(
            "truncation_profile needs r > 0".into(),
        ));
    }
    if tau < 0.0 {
        return Err(Error::InvalidArgument(
            "truncation_profile needs tau >= 0".into(),
        ));
    }
    Ok(tau.min(r) * alpha(tau, r)?)
}

/// The pointwise competitor map T(p) = a + psi(|p - a|) (p - a)/|p - a|,
/// with T(a) = a. Points inside the ball of radius r are returned
/// bit-identically.
pub fn truncate_point(p: &[f64], a: &[f64], r: f64) -> Vec<f64> {
    let t = dist(p, a);
    if t <= r {
        return p.to_vec();
    }
    if t >= 2.0 * r {
        return a.to_vec();
    }
    // psi(t) = 2r - t on this band
    let scale = (2.0 * r - t) / t;
    (0..p.len()).map(|c| a[c] + scale * (p[c] - a[c])).collect()
}

/// u~ nodewise: a + psi(rho) nu on A+, a on A0 and where rho >= 2r.
/// Boundary nodes go through the same rule.
pub fn build_u_tilde(u: &VectorField, a: &[f64], r: f64) -> Result<VectorField> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("build_u_tilde needs r > 0".into()));
    }
    let dom = u.domain().clone();
    let mut out = VectorField::zeros(dom.clone(), u.m());
    for idx in dom.in_set_nodes() {
        out.set(idx, &truncate_point(u.get(idx), a, r));
    }
    Ok(out)
}

/// u^ = a + r nu; requires rho >= r at every in-set node so nu is defined
/// and |u^ - a| = r is consistent with the boundary.
pub fn build_u_hat(u: &VectorField, a: &[f64], r: f64) -> Result<VectorField> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("build_u_hat needs r > 0".into()));
    }
    let dom = u.domain().clone();
    let m = u.m();
    let mut out = VectorField::zeros(dom.clone(), m);
    for idx in dom.in_set_nodes() {
        let p = u.get(idx);
        let t = dist(p, a);
        if t < r {
            return Err(Error::Precondition(format!(
                "build_u_hat needs rho >= r everywhere; node {idx} has rho = {t} < r = {r}"
            )));
        }
        if t == r {
            out.set(idx, p);
        } else {
            let v: Vec<f64> = (0..m).map(|c| a[c] + r * (p[c] - a[c]) / t).collect();
            out.set(idx, &v);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TermwiseComparison {
    pub rho_dirichlet: bool,
    pub angular: bool,
    pub potential: bool,
}

impl TermwiseComparison {
    pub fn all(&self) -> bool {
        self.rho_dirichlet && self.angular && self.potential
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompetitorReport {
    /// u = u~ on all boundary nodes, bit-exact.
    pub boundary_equal: bool,
    /// max over in-set nodes of |u~ - a|.
    pub sup_bound: f64,
    pub energy_u: EnergyBreakdown,
    pub energy_tilde: EnergyBreakdown,
    pub termwise: TermwiseComparison,
    /// J(u~) <= J(u), same quadrature and summation order for both.
    pub energy_decreased: bool,
}

pub fn verify_competitor(
    u: &VectorField,
    a: &[f64],
    r: f64,
    w: &Potential,
) -> Result<CompetitorReport> {
    let tilde = build_u_tilde(u, a, r)?;
    let dom = u.domain();

    let mut boundary_equal = true;
    for &idx in dom.boundary_nodes() {
        if u.get(idx) != tilde.get(idx) {
            boundary_equal = false;
            break;
        }
    }
    let mut sup_bound = 0.0_f64;
    for idx in dom.in_set_nodes() {
        sup_bound = sup_bound.max(dist(tilde.get(idx), a));
    }

    let energy_u = energy(u, w)?;
    let energy_tilde = energy(&tilde, w)?;
    let split_u = split_energy(u, a, w, 0.0)?;
    let split_tilde = split_energy(&tilde, a, w, 0.0)?;

    Ok(CompetitorReport {
        boundary_equal,
        sup_bound,
        energy_u,
        energy_tilde,
        termwise: TermwiseComparison {
            rho_dirichlet: split_tilde.rho_dirichlet <= split_u.rho_dirichlet,
            angular: split_tilde.angular <= split_u.angular,
            potential: split_tilde.potential <= split_u.potential,
        },
        energy_decreased: energy_tilde.total <= energy_u.total,
    })
}

/// Fraction of in-set nodes where |u - v| <= tol.
pub fn coincidence_measure(u: &VectorField, v: &VectorField, tol: f64) -> Result<f64> {
    if !u.same_layout(v) {
        return Err(Error::InvalidArgument(
            "coincidence_measure needs fields on the same domain".into(),
        ));
    }
    let dom = u.domain();
    let mut hits = 0usize;
    let mut total = 0usize;
    for idx in dom.in_set_nodes() {
        total += 1;
        if dist(u.get(idx), v.get(idx)) <= tol {
            hits += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofCase {
    /// max rho <= r: the maximum principle is satisfied.
    AllWithinR,
    /// r <= rho <= 2r everywhere: the u^ branch.
    BandR2r,
    /// rho >= r everywhere and somewhere > 2r: the zero-set branch.
    Exceeds2r,
    /// Some rho < r and some rho > r: the coincidence-set branch.
    Mixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseTrace {
    pub case: ProofCase,
    pub rho_min: f64,
    pub rho_max: f64,
    pub argmin_node: usize,
    pub argmax_node: usize,
}

/// Classify u against the thresholds r and 2r over interior nodes.
/// Relative slack 1e-12 absorbs roundoff at the thresholds; ties go to the
/// lower case.
pub fn trace_proof_cases(u: &VectorField, a: &[f64], r: f64) -> CaseTrace {
    let dom = u.domain();
    let mut rho_min = f64::INFINITY;
    let mut rho_max = -1.0;
    let mut argmin = 0;
    let mut argmax = 0;
    for &idx in dom.interior_nodes() {
        let t = dist(u.get(idx), a);
        if t < rho_min {
            rho_min = t;
            argmin = idx;
        }
        if t > rho_max {
            rho_max = t;
            argmax = idx;
        }
    }
    let slack = 1.0 + 1e-12;
    let case = if rho_max <= r * slack {
        ProofCase::AllWithinR
    } else if rho_min * slack >= r {
        if rho_max <= 2.0 * r * slack {
            ProofCase::BandR2r
        } else {
            ProofCase::Exceeds2r
        }
    } else {
        ProofCase::Mixed
    };
    CaseTrace {
        case,
        rho_min,
        rho_max,
        argmin_node: argmin,
        argmax_node: argmax,
    }
}
