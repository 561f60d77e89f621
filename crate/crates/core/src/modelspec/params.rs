//! Named parameters, their constraints, and the map to unconstrained coordinates.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Named scalar parameters on the constrained (natural) scale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: BTreeMap<String, f64>,
}

impl ParameterVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Real,
    /// Strictly positive; log-transformed.
    Curvature,
    /// Threshold `psi_{position + 2}` of one ordinal indicator (`psi_1 = 0` is implicit).
    Threshold { indicator: usize, position: usize },
    /// Off-diagonal `(row, col)`, `row > col`, of the latent error correlation matrix.
    Correlation { row: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub kind: ParamKind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Free(usize),
    Fixed(f64),
    Tied(usize),
}

/// Dense ordering of a model's parameters plus the constraint resolution.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    params: Vec<ParamInfo>,
    index: HashMap<String, usize>,
    slots: Vec<Slot>,
    /// Natural index owning each free coordinate.
    free: Vec<usize>,
    n_latent: usize,
    /// Correlation parameter indices by (row, col).
    corr: Vec<((usize, usize), usize)>,
    /// Threshold parameter indices per indicator block.
    threshold_blocks: Vec<[usize; 3]>,
}

/// Cholesky-based map between unconstrained off-diagonals and a unit-diagonal
/// correlation matrix: row `i` of `B` is `(w_i0, .., w_i(i-1), 1, 0, ..)`,
/// normalized to unit length, and `C = L L^T` with `L` the normalized rows.
pub(crate) fn correlation_from_unconstrained(n: usize, w: &[f64]) -> DMatrix<f64> {
    let l = normalized_rows(n, w);
    &l * l.transpose()
}

fn normalized_rows(n: usize, w: &[f64]) -> DMatrix<f64> {
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut k = 0;
    for i in 1..n {
        for j in 0..i {
            b[(i, j)] = w[k];
            k += 1;
        }
    }
    for i in 0..n {
        let norm = b.row(i).norm();
        for j in 0..n {
            b[(i, j)] /= norm;
        }
    }
    b
}

pub(crate) fn correlation_to_unconstrained(c: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = c.nrows();
    let chol = c
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Parameters("latent correlation matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut w = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in 0..i {
            w.push(l[(i, j)] / l[(i, i)]);
        }
    }
    Ok(w)
}

/// Chain rule from a gradient on the correlation matrix entries to the
/// unconstrained off-diagonals. `g_corr` is the full (not symmetrized) gradient.
pub(crate) fn correlation_gradient(n: usize, w: &[f64], g_corr: &DMatrix<f64>) -> Vec<f64> {
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut k = 0;
    for i in 1..n {
        for j in 0..i {
            b[(i, j)] = w[k];
            k += 1;
        }
    }
    let l = normalized_rows(n, w);
    let g_l = (g_corr + g_corr.transpose()) * &l;
    let mut out = Vec::with_capacity(k);
    for i in 1..n {
        let norm = b.row(i).norm();
        let gl = g_l.row(i);
        let li = l.row(i);
        let proj = gl.dot(&li);
        for j in 0..i {
            out.push((gl[j] - proj * li[j]) / norm);
        }
    }
    out
}

impl ParamLayout {
    pub(crate) fn new(params: Vec<ParamInfo>, n_latent: usize) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, p) in params.iter().enumerate() {
            if index.insert(p.name.clone(), i).is_some() {
                return Err(Error::ModelSpec(format!("duplicate parameter `{}`", p.name)));
            }
        }
        let mut corr = Vec::new();
        let mut blocks: BTreeMap<usize, [Option<usize>; 3]> = BTreeMap::new();
        for (i, p) in params.iter().enumerate() {
            match p.kind {
                ParamKind::Correlation { row, col } => corr.push(((row, col), i)),
                ParamKind::Threshold { indicator, position } => {
                    blocks.entry(indicator).or_default()[position] = Some(i);
                }
                _ => {}
            }
        }
        corr.sort();
        let expected: Vec<(usize, usize)> = (1..n_latent).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
        if corr.iter().map(|c| c.0).collect::<Vec<_>>() != expected {
            return Err(Error::ModelSpec("incomplete latent correlation block".into()));
        }
        let threshold_blocks = blocks
            .into_values()
            .map(|b| match b {
                [Some(a), Some(b), Some(c)] => Ok([a, b, c]),
                _ => Err(Error::ModelSpec("each indicator needs three free thresholds".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        let n = params.len();
        let mut layout = Self {
            params,
            index,
            slots: vec![Slot::Free(0); n],
            free: Vec::new(),
            n_latent,
            corr,
            threshold_blocks,
        };
        layout.resolve(&[], &[])?;
        Ok(layout)
    }

    pub(crate) fn resolve(&mut self, fixes: &[(usize, f64)], ties: &[Vec<usize>]) -> Result<()> {
        let n = self.params.len();
        let mut slots: Vec<Option<Slot>> = vec![None; n];
        let constrainable = |layout: &Self, i: usize| -> Result<()> {
            match layout.params[i].kind {
                ParamKind::Real | ParamKind::Curvature => Ok(()),
                _ => Err(Error::ModelSpec(format!(
                    "`{}` cannot be fixed or tied",
                    layout.params[i].name
                ))),
            }
        };
        for &(i, v) in fixes {
            constrainable(self, i)?;
            if slots[i].is_some() {
                return Err(Error::ModelSpec(format!("`{}` constrained twice", self.params[i].name)));
            }
            if self.params[i].kind == ParamKind::Curvature && !(v > 0.0) {
                return Err(Error::ModelSpec(format!("curvature `{}` fixed at non-positive value", self.params[i].name)));
            }
            slots[i] = Some(Slot::Fixed(v));
        }
        for group in ties {
            let leader = *group.first().ok_or_else(|| Error::ModelSpec("empty tie group".into()))?;
            for &i in group {
                constrainable(self, i)?;
                if self.params[i].kind != self.params[leader].kind {
                    return Err(Error::ModelSpec("tied parameters must share a kind".into()));
                }
            }
            for &i in &group[1..] {
                if slots[i].is_some() {
                    return Err(Error::ModelSpec(format!("`{}` constrained twice", self.params[i].name)));
                }
                slots[i] = Some(Slot::Tied(leader));
            }
            if matches!(slots[leader], Some(Slot::Tied(_))) {
                return Err(Error::ModelSpec("tie leader is itself tied".into()));
            }
        }
        // A tie whose leader is fixed fixes the whole group.
        let mut resolved = vec![Slot::Free(0); n];
        let mut free = Vec::new();
        for i in 0..n {
            resolved[i] = match slots[i] {
                Some(Slot::Fixed(v)) => Slot::Fixed(v),
                Some(Slot::Tied(l)) => match slots[l] {
                    Some(Slot::Fixed(v)) => Slot::Fixed(v),
                    _ => Slot::Tied(l),
                },
                _ => {
                    free.push(i);
                    Slot::Free(free.len() - 1)
                }
            };
        }
        self.slots = resolved;
        self.free = free;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn params(&self) -> &[ParamInfo] {
        &self.params
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Natural index that owns free coordinate `k`.
    pub fn free_owner(&self, k: usize) -> usize {
        self.free[k]
    }

    pub fn free_names(&self) -> Vec<String> {
        self.free.iter().map(|&i| self.params[i].name.clone()).collect()
    }

    pub fn is_free(&self, i: usize) -> bool {
        matches!(self.slots[i], Slot::Free(_))
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        matches!(self.slots[i], Slot::Fixed(_))
    }

    pub(crate) fn corr_indices(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        self.corr.iter().copied()
    }

    /// Dense natural vector from named values; every name must be known and present.
    pub fn dense(&self, pv: &ParameterVector) -> Result<Vec<f64>> {
        for k in pv.values.keys() {
            if !self.index.contains_key(k) {
                return Err(Error::Parameters(format!("unknown parameter `{k}`")));
            }
        }
        let mut out = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let v = pv
                .get(&p.name)
                .ok_or_else(|| Error::Parameters(format!("missing parameter `{}`", p.name)))?;
            out.push(v);
        }
        Ok(out)
    }

    pub fn named(&self, dense: &[f64]) -> ParameterVector {
        ParameterVector {
            values: self
                .params
                .iter()
                .zip(dense)
                .map(|(p, &v)| (p.name.clone(), v))
                .collect(),
        }
    }

    /// Overwrites fixed and tied entries from their constraint values and leaders.
    pub fn apply_constraints(&self, dense: &mut [f64]) {
        for i in 0..dense.len() {
            match self.slots[i] {
                Slot::Fixed(v) => dense[i] = v,
                Slot::Tied(l) => dense[i] = dense[l],
                Slot::Free(_) => {}
            }
        }
    }

    pub(crate) fn latent_correlation(&self, dense: &[f64]) -> Matrix3<f64> {
        let mut c = Matrix3::identity();
        for ((i, j), k) in self.corr_indices() {
            c[(i, j)] = dense[k];
            c[(j, i)] = dense[k];
        }
        c
    }

    pub fn validate(&self, dense: &[f64]) -> Result<()> {
        let bad = |m: String| Err(Error::Parameters(m));
        if dense.len() != self.params.len() {
            return bad(format!("expected {} values, got {}", self.params.len(), dense.len()));
        }
        for (p, &v) in self.params.iter().zip(dense) {
            if !v.is_finite() {
                return bad(format!("`{}` is not finite", p.name));
            }
            if p.kind == ParamKind::Curvature && !(v > 0.0) {
                return bad(format!("curvature `{}` = {v} must be positive", p.name));
            }
        }
        for (i, slot) in self.slots.iter().enumerate() {
            let ok = match *slot {
                Slot::Fixed(v) => dense[i] == v,
                Slot::Tied(l) => dense[i] == dense[l],
                Slot::Free(_) => true,
            };
            if !ok {
                return bad(format!("`{}` violates its constraint", self.params[i].name));
            }
        }
        for b in &self.threshold_blocks {
            let (a, c, d) = (dense[b[0]], dense[b[1]], dense[b[2]]);
            if !(0.0 < a && a < c && c < d) {
                return bad(format!(
                    "thresholds `{}` must satisfy 0 < psi2 < psi3 < psi4, got ({a}, {c}, {d})",
                    self.params[b[0]].name
                ));
            }
        }
        let c = self.latent_correlation(dense);
        if c.iter().any(|v| v.abs() > 1.0) || c.cholesky().is_none() {
            return bad("latent correlation matrix is not a valid correlation matrix".into());
        }
        Ok(())
    }

    /// Constrained dense vector to unconstrained free coordinates.
    pub fn pack(&self, dense: &[f64]) -> Result<Vec<f64>> {
        self.validate(dense)?;
        let corr_w = self.corr_unconstrained(dense)?;
        let mut out = Vec::with_capacity(self.free.len());
        for &i in &self.free {
            let v = dense[i];
            out.push(match self.params[i].kind {
                ParamKind::Real => v,
                ParamKind::Curvature => v.ln(),
                ParamKind::Threshold { position, .. } => {
                    let block = self.block_of(i);
                    if position == 0 {
                        v.ln()
                    } else {
                        (v - dense[block[position - 1]]).ln()
                    }
                }
                ParamKind::Correlation { .. } => {
                    let k = self.corr.iter().position(|c| c.1 == i).unwrap();
                    corr_w[k]
                }
            });
        }
        Ok(out)
    }

    fn block_of(&self, i: usize) -> [usize; 3] {
        *self
            .threshold_blocks
            .iter()
            .find(|b| b.contains(&i))
            .expect("threshold belongs to a block")
    }

    fn corr_unconstrained(&self, dense: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_latent;
        if n < 2 {
            return Ok(Vec::new());
        }
        let mut c = DMatrix::<f64>::identity(n, n);
        for ((i, j), k) in self.corr_indices() {
            c[(i, j)] = dense[k];
            c[(j, i)] = dense[k];
        }
        correlation_to_unconstrained(&c)
    }

    /// Unconstrained coordinates back to the dense natural vector. `template`
    /// supplies nothing but the fixed values, which are re-applied afterwards.
    pub fn unpack(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.free.len() {
            return Err(Error::Parameters(format!(
                "expected {} free coordinates, got {}",
                self.free.len(),
                x.len()
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameters(format!(
                "coordinate {k} (`{}`) is not finite",
                self.params[self.free[k]].name
            )));
        }
        let mut dense = vec![0.0; self.params.len()];
        let mut corr_w = vec![0.0; self.corr.len()];
        for (k, &i) in self.free.iter().enumerate() {
            match self.params[i].kind {
                ParamKind::Real => dense[i] = x[k],
                ParamKind::Curvature => dense[i] = x[k].exp(),
                ParamKind::Threshold { .. } => dense[i] = x[k].exp(),
                ParamKind::Correlation { .. } => {
                    let c = self.corr.iter().position(|c| c.1 == i).unwrap();
                    corr_w[c] = x[k];
                }
            }
        }
        for b in &self.threshold_blocks {
            dense[b[1]] += dense[b[0]];
            dense[b[2]] += dense[b[1]];
        }
        if self.n_latent >= 2 {
            let c = correlation_from_unconstrained(self.n_latent, &corr_w);
            for ((i, j), k) in self.corr_indices() {
                dense[k] = c[(i, j)];
            }
        }
        self.apply_constraints(&mut dense);
        Ok(dense)
    }

    /// Gradient with respect to the dense natural vector mapped onto the free
    /// unconstrained coordinates at `x`.
    pub(crate) fn chain_gradient(&self, x: &[f64], dense: &[f64], g_nat: &[f64]) -> Vec<f64> {
        // Tied followers push their gradient to the leader.
        let mut g = g_nat.to_vec();
        for i in 0..g.len() {
            if let Slot::Tied(l) = self.slots[i] {
                g[l] += g_nat[i];
                g[i] = 0.0;
            }
        }
        let n = self.n_latent;
        let corr_grad = if n >= 2 {
            let mut w = vec![0.0; self.corr.len()];
            for (k, &i) in self.free.iter().enumerate() {
                if let ParamKind::Correlation { .. } = self.params[i].kind {
                    let c = self.corr.iter().position(|c| c.1 == i).unwrap();
                    w[c] = x[k];
                }
            }
            let mut gc = DMatrix::<f64>::zeros(n, n);
            for ((i, j), k) in self.corr_indices() {
                gc[(i, j)] = g[k];
            }
            correlation_gradient(n, &w, &gc)
        } else {
            Vec::new()
        };
        self.free
            .iter()
            .map(|&i| match self.params[i].kind {
                ParamKind::Real => g[i],
                ParamKind::Curvature => g[i] * dense[i],
                ParamKind::Threshold { position, .. } => {
                    let b = self.block_of(i);
                    let step = if position == 0 { dense[b[0]] } else { dense[b[position]] - dense[b[position - 1]] };
                    let tail: f64 = b[position..].iter().map(|&j| g[j]).sum();
                    step * tail
                }
                ParamKind::Correlation { .. } => {
                    let c = self.corr.iter().position(|c| c.1 == i).unwrap();
                    corr_grad[c]
                }
            })
            .collect()
    }
}
