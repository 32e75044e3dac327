//! End-to-end experiments: hypothesis checks, multi-start minimization,
//! maximum-principle verification, competitor and linearization
//! diagnostics, all driven by a JSON config and emitted as a JSON report.
//!
//! Reports are deterministic functions of (config, seed): summation order
//! is fixed everywhere and all randomness flows from the config seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

use crate::competitor::{trace_proof_cases, verify_competitor, CaseTrace, CompetitorReport};
use crate::decompose::{split_consistency, split_energy, SplitEnergy};
use crate::energy::{el_residual, energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{build_box_domain, load_masked_domain, read_field_csv_path, Domain, VectorField};
use crate::linearize::{assemble_q, assemble_q_segment, residual_fundamental, residual_segment};
use crate::minimize::{minimize, Init, SolveOptions, SolveStats};
use crate::potential::{
    check_hypotheses, make_double_well_1d, make_product_well, make_quadratic,
    make_triple_well_2d_with_r0, HypothesisReport, Potential,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialConfig {
    /// "double_well_1d", "triple_well_2d", or "quadratic".
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Well positions for product-well potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wells: Option<Vec<Vec<f64>>>,
}

pub fn build_potential(cfg: &PotentialConfig) -> Result<Potential> {
    match cfg.name.as_str() {
        "double_well_1d" => {
            if cfg.wells.is_some() || cfg.a.is_some() {
                return Err(Error::Config(
                    "double_well_1d supports only the r0 override".into(),
                ));
            }
            let mut p = make_double_well_1d();
            if let Some(r0) = cfg.r0 {
                p = Potential::new(
                    "double_well_1d",
                    1,
                    vec![1.0],
                    r0,
                    Box::new(|u: &[f64]| {
                        let s = 1.0 - u[0] * u[0];
                        s * s
                    }),
                    Box::new(|u: &[f64]| vec![-4.0 * u[0] * (1.0 - u[0] * u[0])]),
                    Some(Box::new(|u: &[f64]| vec![12.0 * u[0] * u[0] - 4.0])),
                );
            }
            Ok(p)
        }
        "triple_well_2d" => {
            let r0 = cfg.r0.unwrap_or(0.2);
            if let Some(wells) = &cfg.wells {
                Ok(make_product_well(wells.clone(), r0))
            } else {
                Ok(make_triple_well_2d_with_r0(r0))
            }
        }
        "quadratic" => {
            let a = cfg.a.clone().unwrap_or_else(|| vec![0.0]);
            Ok(make_quadratic(a, cfg.r0.unwrap_or(1.0)))
        }
        other => Err(Error::Config(format!("unknown potential {other:?}"))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainConfig {
    Box { extents: Vec<f64>, h: f64 },
    Mask { path: String, h: f64 },
}

impl DomainConfig {
    pub fn h(&self) -> f64 {
        match self {
            DomainConfig::Box { h, .. } | DomainConfig::Mask { h, .. } => *h,
        }
    }

    pub fn with_h(&self, new_h: f64) -> DomainConfig {
        let mut out = self.clone();
        match &mut out {
            DomainConfig::Box { h, .. } | DomainConfig::Mask { h, .. } => *h = new_h,
        }
        out
    }

    pub fn build(&self) -> Result<Arc<Domain>> {
        match self {
            DomainConfig::Box { extents, h } => {
                let n = extents.len();
                build_box_domain(n, extents, *h)
            }
            DomainConfig::Mask { path, h } => load_masked_domain(Path::new(path), *h),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryConfig {
    /// g == value everywhere on the boundary.
    Constant { value: Vec<f64> },
    /// g(x) = a + radius * (cos x0, sin x0) for m = 2; a + radius for m = 1.
    Ring { radius: f64 },
    /// Boundary values read off a field CSV on the same grid.
    Tabulated { path: String },
}

pub struct BoundaryData {
    g: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl BoundaryData {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.g)(x)
    }
}

pub fn build_boundary(cfg: &BoundaryConfig, w: &Potential) -> Result<BoundaryData> {
    let m = w.m();
    match cfg {
        BoundaryConfig::Constant { value } => {
            if value.len() != m {
                return Err(Error::Config(format!(
                    "boundary value has dimension {}, potential needs {m}",
                    value.len()
                )));
            }
            let v = value.clone();
            Ok(BoundaryData {
                g: Box::new(move |_x| v.clone()),
            })
        }
        BoundaryConfig::Ring { radius } => {
            let r = *radius;
            let a = w.a().to_vec();
            match m {
                1 => Ok(BoundaryData {
                    g: Box::new(move |_x| vec![a[0] + r]),
                }),
                2 => Ok(BoundaryData {
                    g: Box::new(move |x| vec![a[0] + r * x[0].cos(), a[1] + r * x[0].sin()]),
                }),
                _ => Err(Error::Config("ring boundary supports m in {1,2}".into())),
            }
        }
        BoundaryConfig::Tabulated { path } => {
            let field = read_field_csv_path(Path::new(path))?;
            if field.m() != m {
                return Err(Error::Config(
                    "tabulated boundary dimension mismatch".into(),
                ));
            }
            let dom = field.domain().clone();
            let h = dom.h();
            Ok(BoundaryData {
                g: Box::new(move |x| {
                    let mi: Vec<usize> = x.iter().map(|&c| (c / h).round() as usize).collect();
                    field.get(dom.linear_index(&mi)).to_vec()
                }),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub potential: PotentialConfig,
    pub domain: DomainConfig,
    pub boundary: BoundaryConfig,
    /// The radius in the maximum-principle statement; theorem regime
    /// requires r < r0/2.
    pub r: f64,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default = "default_starts")]
    pub n_starts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Accept configs outside the theorem regime (r >= r0/2 or failing
    /// hypothesis checks) instead of rejecting them.
    #[serde(default)]
    pub out_of_regime: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_csv_path: Option<String>,
}

fn default_starts() -> usize {
    3
}

impl ExperimentConfig {
    pub fn validate(&self, w: &Potential) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::Config("r must be positive".into()));
        }
        if self.n_starts < 1 {
            return Err(Error::Config("n_starts must be >= 1".into()));
        }
        if self.r >= w.r0() / 2.0 && !self.out_of_regime {
            return Err(Error::Config(format!(
                "r = {} is outside the theorem regime r < r0/2 = {}; set out_of_regime to run anyway",
                self.r,
                w.r0() / 2.0
            )));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn from_json_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxPrincipleCheck {
    pub holds: bool,
    /// True when the boundary precondition |u - a| <= r on the boundary
    /// failed; a vacuous check never counts as a pass.
    pub vacuous: bool,
    pub worst_node: usize,
    pub worst_value: f64,
    pub tol_mp: f64,
}

/// Interior check of |u - a| <= r + tol_mp with the argmax witness.
pub fn verify_max_principle(u: &VectorField, a: &[f64], r: f64, tol_mp: f64) -> MaxPrincipleCheck {
    let dom = u.domain();
    let vacuous = u.boundary_radius(a) > r + 1e-12;
    let mut worst_node = 0;
    let mut worst_value = 0.0_f64;
    for &idx in dom.interior_nodes() {
        let t = crate::grid::dist(u.get(idx), a);
        if t > worst_value {
            worst_value = t;
            worst_node = idx;
        }
    }
    MaxPrincipleCheck {
        holds: !vacuous && worst_value <= r + tol_mp,
        vacuous,
        worst_node,
        worst_value,
        tol_mp,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StartRecord {
    pub label: String,
    pub stats: SolveStats,
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub max_op_norm: f64,
    pub residual_fundamental: f64,
    pub residual_segment_u_tilde: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub grid_shape: Vec<usize>,
    pub h: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub hypotheses: HypothesisReport,
    pub hypothesis_failed: bool,
    pub in_theorem_regime: bool,
    pub starts: Vec<StartRecord>,
    /// Index into starts of the lowest-energy solve.
    pub chosen_start: usize,
    pub minimizer_energy: EnergyBreakdown,
    pub boundary_radius: f64,
    pub interior_radius: f64,
    pub max_principle: MaxPrincipleCheck,
    pub el_residual: f64,
    pub competitor: CompetitorReport,
    pub split: SplitEnergy,
    pub split_gap: f64,
    pub linearization: LinearizationReport,
    pub proof_case: CaseTrace,
    /// The operational caveat: "minimizer" means best of multi-start,
    /// stationary to tolerance; global optimality is not certified.
    pub minimizer_caveat: String,
}

/// Discretization allowance for the interior bound: 2h(1 + max |grad W|
/// over the solution's sampled range).
pub fn tol_mp_for(u: &VectorField, w: &Potential, h: f64) -> f64 {
    let mut worst = 0.0_f64;
    for idx in u.domain().in_set_nodes() {
        worst = worst.max(crate::grid::norm(&w.grad(u.get(idx))));
    }
    2.0 * h * (1.0 + worst)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let w = build_potential(&cfg.potential)?;
    cfg.validate(&w)?;
    let domain = cfg.domain.build()?;
    let boundary = build_boundary(&cfg.boundary, &w)?;
    let g = |x: &[f64]| boundary.eval(x);

    let hypotheses = check_hypotheses(&w, 64, 50, 2000)?;
    let hypothesis_failed = !hypotheses.all_passed();
    let in_theorem_regime = cfg.r < w.r0() / 2.0 && !hypothesis_failed;

    // multi-start: harmonic extension, then seeded random starts in the
    // ball of radius r around a
    let mut starts: Vec<StartRecord> = Vec::new();
    let mut fields: Vec<Option<VectorField>> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for s in 0..cfg.n_starts {
        let (label, init) = if s == 0 {
            ("harmonic_extension".to_string(), Init::HarmonicExtension)
        } else {
            let mut f = VectorField::constant(domain.clone(), w.m(), w.a());
            for &idx in domain.interior_nodes() {
                let mut v = w.a().to_vec();
                for c in 0..w.m() {
                    v[c] += cfg.r * rng.gen_range(-1.0..1.0);
                }
                f.set(idx, &v);
            }
            (format!("random_{s}"), Init::Field(f))
        };
        match minimize(&domain, &g, &w, init, &cfg.solver) {
            Ok((u, stats)) => {
                starts.push(StartRecord {
                    label,
                    energy: stats.final_energy,
                    stats,
                });
                fields.push(Some(u));
            }
            Err(Error::Diverged { iter }) => {
                // record the failure and continue with the remaining starts
                starts.push(StartRecord {
                    label,
                    energy: f64::MAX,
                    stats: SolveStats {
                        iterations: iter,
                        final_grad_norm: f64::MAX,
                        final_energy: f64::MAX,
                        converged: false,
                        termination: crate::minimize::Termination::Stalled,
                        energy_history: Vec::new(),
                    },
                });
                fields.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let chosen_start = starts
        .iter()
        .enumerate()
        .filter(|(i, _)| fields[*i].is_some())
        .min_by(|a, b| a.1.energy.partial_cmp(&b.1.energy).unwrap())
        .map(|(i, _)| i)
        .ok_or(Error::Diverged { iter: 0 })?;
    let u = fields[chosen_start].take().unwrap();

    let minimizer_energy = energy(&u, &w)?;
    let boundary_radius = u.boundary_radius(w.a());
    let tol_mp = tol_mp_for(&u, &w, domain.h());
    let max_principle = verify_max_principle(&u, w.a(), cfg.r, tol_mp);
    let interior_radius = max_principle.worst_value;

    let competitor = verify_competitor(&u, w.a(), cfg.r, &w)?;
    let split = split_energy(&u, w.a(), &w, crate::decompose::default_eps_zero(&u, w.a()))?;
    let split_gap = split_consistency(&u, w.a(), &w)?;

    let q = assemble_q(&u, w.a(), &w, 8)?;
    let res_fund = residual_fundamental(&u, w.a(), &w, &q);
    let tilde = crate::competitor::build_u_tilde(&u, w.a(), cfg.r)?;
    let q_seg = assemble_q_segment(&u, &tilde, &w, 8)?;
    let res_seg = residual_segment(&u, &tilde, &w, &q_seg);

    let proof_case = trace_proof_cases(&u, w.a(), cfg.r);
    let el = el_residual(&u, &w)?;

    if let Some(path) = &cfg.field_csv_path {
        crate::grid::write_field_csv_path(&u, Path::new(path))?;
    }

    let report = ExperimentReport {
        provenance: Provenance {
            config: cfg.clone(),
            seed: cfg.seed,
            grid_shape: domain.shape().to_vec(),
            h: domain.h(),
            n_interior: domain.interior_nodes().len(),
            n_boundary: domain.boundary_nodes().len(),
        },
        hypotheses,
        hypothesis_failed,
        in_theorem_regime,
        starts,
        chosen_start,
        minimizer_energy,
        boundary_radius,
        interior_radius,
        max_principle,
        el_residual: el,
        competitor,
        split,
        split_gap,
        linearization: LinearizationReport {
            max_op_norm: q.max_op_norm(),
            residual_fundamental: res_fund,
            residual_segment_u_tilde: res_seg,
        },
        proof_case,
        minimizer_caveat:
            "minimizer means: lowest-energy iterate over the configured multi-start, \
             stationary to grad_tol; global optimality is not certified"
                .to_string(),
    };
    if let Some(path) = &cfg.report_path {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

/// Same experiment across a list of grid spacings.
pub fn run_sweep(cfg: &ExperimentConfig, h_list: &[f64]) -> Result<Vec<ExperimentReport>> {
    let mut out = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mut c = cfg.clone();
        c.domain = cfg.domain.with_h(h);
        c.report_path = None;
        c.field_csv_path = None;
        out.push(run_experiment(&c)?);
    }
    Ok(out)
}
