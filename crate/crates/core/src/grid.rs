//! Masked uniform grids in 1-d and 2-d with interior/boundary node
//! classification, plus vector and scalar fields attached to them.
//!
//! The domain A is represented by its in-set nodes. An in-set node whose
//! axis neighbors are all in-set is interior; in-set nodes touching the
//! outside (or the array edge) form the boundary, which is where Dirichlet
//! data lives. Node ordering is row-major (first axis fastest) and every
//! assembly loop in the crate iterates in that fixed order, so sums are
//! bit-reproducible.

use std::fmt;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Outside,
}

/// A bounded grid domain: uniform spacing `h`, per-node classification.
#[derive(Clone, Debug)]
pub struct Domain {
    n: usize,
    h: f64,
    shape: Vec<usize>,
    mask: Vec<NodeClass>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Pairs of adjacent in-set nodes, ordered (axis-0 links first, then
    /// axis-1, each in node order). The link order is the summation order
    /// of every Dirichlet-type term.
    links: Vec<(usize, usize)>,
}

impl Domain {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn num_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn class(&self, idx: usize) -> NodeClass {
        self.mask[idx]
    }

    pub fn in_set(&self, idx: usize) -> bool {
        self.mask[idx] != NodeClass::Outside
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    /// In-set nodes in index order.
    pub fn in_set_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(|&i| self.in_set(i))
    }

    pub fn num_in_set(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    /// Trapezoidal-flavor node weight: 1 for interior, 1/2 for boundary.
    pub fn node_weight(&self, idx: usize) -> f64 {
        match self.mask[idx] {
            NodeClass::Interior => 1.0,
            NodeClass::Boundary => 0.5,
            NodeClass::Outside => 0.0,
        }
    }

    /// Cell volume h^n.
    pub fn cell(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        match self.n {
            1 => vec![idx],
            2 => vec![idx % self.shape[0], idx / self.shape[0]],
            _ => unreachable!("only n in {{1,2}} is constructed"),
        }
    }

    pub fn linear_index(&self, mi: &[usize]) -> usize {
        match self.n {
            1 => mi[0],
            2 => mi[1] * self.shape[0] + mi[0],
            _ => unreachable!(),
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .map(|&i| i as f64 * self.h)
            .collect()
    }

    /// Axis neighbors of a node that lie inside the array, in fixed order
    /// (-x, +x, -y, +y).
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let mi = self.multi_index(idx);
        let mut out = Vec::with_capacity(2 * self.n);
        for axis in 0..self.n {
            if mi[axis] > 0 {
                let mut lo = mi.clone();
                lo[axis] -= 1;
                out.push(self.linear_index(&lo));
            }
            if mi[axis] + 1 < self.shape[axis] {
                let mut hi = mi.clone();
                hi[axis] += 1;
                out.push(self.linear_index(&hi));
            }
        }
        out
    }

    /// True if the node sits on the array edge along some axis.
    fn on_array_edge(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.n).any(|a| mi[a] == 0 || mi[a] + 1 == self.shape[a])
    }

    fn classify_and_finish(
        n: usize,
        h: f64,
        shape: Vec<usize>,
        in_set: Vec<bool>,
    ) -> Result<Domain> {
        let num = in_set.len();
        let mut dom = Domain {
            n,
            h,
            shape,
            mask: vec![NodeClass::Outside; num],
            interior: Vec::new(),
            boundary: Vec::new(),
            links: Vec::new(),
        };
        // classify: in-set nodes adjacent to out-of-set (or the array edge)
        // are boundary, the rest interior
        for idx in 0..num {
            if !in_set[idx] {
                continue;
            }
            let edge = dom.on_array_edge(idx);
            let touches_out = dom.neighbors(idx).iter().any(|&nb| !in_set[nb]);
            dom.mask[idx] = if edge || touches_out {
                NodeClass::Boundary
            } else {
                NodeClass::Interior
            };
        }
        for idx in 0..num {
            match dom.mask[idx] {
                NodeClass::Interior => dom.interior.push(idx),
                NodeClass::Boundary => dom.boundary.push(idx),
                NodeClass::Outside => {}
            }
        }
        if dom.interior.is_empty() {
            return Err(Error::InvalidArgument(
                "domain has no interior nodes".into(),
            ));
        }
        // interior must be 1-connected under axis adjacency: flood fill
        let components = dom.interior_components();
        if components != 1 {
            return Err(Error::DomainNotConnected { components });
        }
        // links between adjacent in-set nodes, axis 0 then axis 1
        for axis in 0..n {
            for idx in 0..num {
                if !in_set[idx] {
                    continue;
                }
                let mi = dom.multi_index(idx);
                if mi[axis] + 1 < dom.shape[axis] {
                    let mut hi = mi.clone();
                    hi[axis] += 1;
                    let j = dom.linear_index(&hi);
                    if in_set[j] {
                        dom.links.push((idx, j));
                    }
                }
            }
        }
        Ok(dom)
    }

    fn interior_components(&self) -> usize {
        let mut seen = vec![false; self.num_nodes()];
        let mut components = 0;
        for &start in &self.interior {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(idx) = stack.pop() {
                for nb in self.neighbors(idx) {
                    if self.mask[nb] == NodeClass::Interior && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        components
    }
}

/// Rectangle/interval domain covering `[0, extent]` per axis.
pub fn build_box_domain(n: usize, extents: &[f64], h: f64) -> Result<Arc<Domain>> {
    if !(n == 1 || n == 2) {
        return Err(Error::InvalidArgument(format!("n must be 1 or 2, got {n}")));
    }
    if extents.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} extents, got {}",
            extents.len()
        )));
    }
    if !(h > 0.0) || extents.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument(
            "h and extents must be positive".into(),
        ));
    }
    let mut shape = Vec::with_capacity(n);
    for &e in extents {
        let count = (e / h + 1e-9).floor() as usize + 1;
        if count < 3 {
            return Err(Error::InvalidArgument(format!(
                "axis with extent {e} at h={h} has {count} nodes, need at least 3"
            )));
        }
        shape.push(count);
    }
    let num: usize = shape.iter().product();
    let in_set = vec![true; num];
    Ok(Arc::new(Domain::classify_and_finish(n, h, shape, in_set)?))
}

/// Domain from an explicit in-set mask (row-major, first axis fastest).
pub fn build_masked_domain(mask: &[bool], shape: &[usize], h: f64) -> Result<Arc<Domain>> {
    let n = shape.len();
    if !(n == 1 || n == 2) {
        return Err(Error::InvalidArgument(format!("n must be 1 or 2, got {n}")));
    }
    if mask.is_empty() || mask.len() != shape.iter().product::<usize>() {
        return Err(Error::InvalidArgument("mask/shape size mismatch".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("h must be positive".into()));
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::InvalidArgument("mask selects no nodes".into()));
    }
    Ok(Arc::new(Domain::classify_and_finish(
        n,
        h,
        shape.to_vec(),
        mask.to_vec(),
    )?))
}

/// Parse a plain-text mask: one row of 0/1 characters per line.
/// The first line is the row with the highest second index.
pub fn parse_mask_text(text: &str) -> Result<(Vec<bool>, Vec<usize>)> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty mask file".into()));
    }
    let nx = rows[0].len();
    if rows.iter().any(|r| r.len() != nx) {
        return Err(Error::InvalidArgument("ragged mask rows".into()));
    }
    let ny = rows.len();
    let mut mask = vec![false; nx * ny];
    for (row_idx, row) in rows.iter().enumerate() {
        let j = ny - 1 - row_idx;
        for (i, c) in row.chars().enumerate() {
            mask[j * nx + i] = match c {
                '1' => true,
                '0' => false,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "mask character {other:?} is not 0/1"
                    )))
                }
            };
        }
    }
    Ok((mask, vec![nx, ny]))
}

pub fn load_masked_domain(path: &Path, h: f64) -> Result<Arc<Domain>> {
    let text = std::fs::read_to_string(path)?;
    let (mask, shape) = parse_mask_text(&text)?;
    build_masked_domain(&mask, &shape, h)
}

/// Vector-valued field in R^m on the in-set nodes of a domain.
#[derive(Clone)]
pub struct VectorField {
    domain: Arc<Domain>,
    m: usize,
    values: Vec<f64>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("m", &self.m)
            .field("nodes", &self.domain.num_nodes())
            .finish()
    }
}

impl VectorField {
    pub fn constant(domain: Arc<Domain>, m: usize, value: &[f64]) -> Self {
        assert_eq!(value.len(), m);
        let num = domain.num_nodes();
        let mut values = vec![0.0; num * m];
        for idx in 0..num {
            if domain.in_set(idx) {
                values[idx * m..(idx + 1) * m].copy_from_slice(value);
            }
        }
        VectorField { domain, m, values }
    }

    pub fn zeros(domain: Arc<Domain>, m: usize) -> Self {
        let num = domain.num_nodes();
        VectorField {
            domain,
            m,
            values: vec![0.0; num * m],
        }
    }

    /// Fill every in-set node from a function of the node coordinates.
    pub fn from_fn(domain: Arc<Domain>, m: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut field = Self::zeros(domain.clone(), m);
        for idx in domain.in_set_nodes() {
            let v = f(&domain.coords(idx));
            assert_eq!(v.len(), m);
            field.set(idx, &v);
        }
        field
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    pub fn set(&mut self, idx: usize, v: &[f64]) {
        self.values[idx * self.m..(idx + 1) * self.m].copy_from_slice(v);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_layout(&self, other: &VectorField) -> bool {
        self.m == other.m && Arc::ptr_eq(&self.domain, &other.domain)
            || (self.m == other.m
                && self.domain.shape() == other.domain.shape()
                && self.domain.h() == other.domain.h())
    }

    pub fn check_finite(&self) -> Result<()> {
        for idx in self.domain.in_set_nodes() {
            if self.get(idx).iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidField);
            }
        }
        Ok(())
    }

    /// Replace boundary node values by g(position); interior untouched.
    pub fn set_boundary(&mut self, g: impl Fn(&[f64]) -> Vec<f64>) {
        let domain = self.domain.clone();
        for &idx in domain.boundary_nodes() {
            let v = g(&domain.coords(idx));
            assert_eq!(v.len(), self.m);
            self.set(idx, &v);
        }
    }

    /// Max over boundary nodes of |value - a|.
    pub fn boundary_radius(&self, a: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for &idx in self.domain.boundary_nodes() {
            worst = worst.max(dist(self.get(idx), a));
        }
        worst
    }
}

/// Scalar field on the same node layout; houses rho and W(u) samples.
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: Arc<Domain>) -> Self {
        let num = domain.num_nodes();
        ScalarField {
            domain,
            values: vec![0.0; num],
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// CSV dump: index per axis, coordinates, value components.
pub fn write_field_csv<W: Write>(field: &VectorField, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let dom = field.domain();
    let n = dom.n();
    let m = field.m();
    let mut header: Vec<String> = (0..n).map(|a| format!("i{a}")).collect();
    header.extend((0..n).map(|a| format!("x{a}")));
    header.extend((0..m).map(|c| format!("v{c}")));
    writeln!(w, "{}", header.join(","))?;
    for idx in dom.in_set_nodes() {
        let mi = dom.multi_index(idx);
        let xs = dom.coords(idx);
        let mut cols: Vec<String> = mi.iter().map(|i| i.to_string()).collect();
        cols.extend(xs.iter().map(|x| format!("{x:.17e}")));
        cols.extend(field.get(idx).iter().map(|v| format!("{v:.17e}")));
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

pub fn write_field_csv_path(field: &VectorField, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_field_csv(field, f)
}

/// Rebuild a field (and its masked domain) from a CSV produced by
/// [`write_field_csv`]. Grid spacing is inferred from the coordinates.
pub fn read_field_csv<R: std::io::Read>(input: R) -> Result<VectorField> {
    let reader = std::io::BufReader::new(input);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty field csv".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.iter().filter(|c| c.starts_with('i')).count();
    let m = cols.iter().filter(|c| c.starts_with('v')).count();
    if !(n == 1 || n == 2) || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "bad field csv header: {header}"
        )));
    }
    let mut rows: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 * n + m {
            return Err(Error::InvalidArgument(format!("bad field csv row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number {s:?}")))
        };
        let mi: Vec<usize> = parts[..n]
            .iter()
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad index {s:?}")))
            })
            .collect::<Result<_>>()?;
        let xs: Vec<f64> = parts[n..2 * n]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_>>()?;
        let vs: Vec<f64> = parts[2 * n..]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_>>()?;
        rows.push((mi, xs, vs));
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("field csv has no data rows".into()));
    }
    let mut shape = vec![0usize; n];
    for (mi, _, _) in &rows {
        for a in 0..n {
            shape[a] = shape[a].max(mi[a] + 1);
        }
    }
    // infer h from the first row with a nonzero index
    let mut h = 0.0;
    for (mi, xs, _) in &rows {
        for a in 0..n {
            if mi[a] > 0 {
                h = xs[a] / mi[a] as f64;
                break;
            }
        }
        if h > 0.0 {
            break;
        }
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(
            "cannot infer grid spacing from field csv".into(),
        ));
    }
    let num: usize = shape.iter().product();
    let mut mask = vec![false; num];
    let linear = |mi: &[usize]| -> usize {
        if n == 1 {
            mi[0]
        } else {
            mi[1] * shape[0] + mi[0]
        }
    };
    for (mi, _, _) in &rows {
        mask[linear(mi)] = true;
    }
    let domain = build_masked_domain(&mask, &shape, h)?;
    let mut field = VectorField::zeros(domain, m);
    for (mi, _, vs) in &rows {
        field.set(linear(mi), vs);
    }
    field.check_finite()?;
    Ok(field)
}

pub fn read_field_csv_path(path: &Path) -> Result<VectorField> {
    let f = std::fs::File::open(path)?;
    read_field_csv(f)
}
