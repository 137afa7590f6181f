//! Γ-index of odd graded operators by singular-value thresholding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operator::{EquivariantOperator, FloquetGrid};
use crate::error::{Error, Result};
use crate::linalg::{rank_split_scaled, singular_values, CMatrix, RANK_SAFETY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexPolicy {
    /// Minimal accepted ratio across the singular-value cut.
    pub min_gap_ratio: f64,
    pub grid: FloquetGrid,
}

impl IndexPolicy {
    pub fn for_rank(rank: usize) -> Self {
        Self {
            min_gap_ratio: RANK_SAFETY,
            grid: FloquetGrid::default_for(rank),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub gamma_ker_plus: f64,
    pub gamma_ker_minus: f64,
    pub index: f64,
    /// Gap ratio at the cut in each sector.
    pub rank_gaps: Vec<f64>,
}

impl IndexReport {
    pub fn min_gap(&self) -> f64 {
        self.rank_gaps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The index rounded to an integer when it is within `tol` of one.
    pub fn integer_index(&self, tol: f64) -> Option<i64> {
        let r = self.index.round();
        ((self.index - r).abs() <= tol).then_some(r as i64)
    }
}

/// Extracts `T⁺` (minus rows, plus columns) of a sector matrix.
pub(crate) fn plus_corner(matrix: &CMatrix, grading: &[f64]) -> CMatrix {
    let plus: Vec<usize> = (0..grading.len()).filter(|&i| grading[i] > 0.0).collect();
    let minus: Vec<usize> = (0..grading.len()).filter(|&i| grading[i] < 0.0).collect();
    CMatrix::from_fn(minus.len(), plus.len(), |r, k| matrix[(minus[r], plus[k])])
}

/// `ind_Γ(T) = dim_Γ ker T⁺ − dim_Γ ker T⁻`.
pub fn gamma_index(t: &EquivariantOperator, policy: &IndexPolicy) -> Result<IndexReport> {
    t.require_odd(1e-12)?;
    t.require_selfadjoint(1e-10)?;
    let sectors = t.sectors(&policy.grid);
    let size: usize = sectors.iter().map(|s| s.matrix.nrows()).sum();
    let svals: Vec<(f64, CMatrix, Vec<f64>)> = sectors
        .into_par_iter()
        .map(|s| {
            let tp = plus_corner(&s.matrix, &s.grading);
            let sv = singular_values(&tp);
            (s.weight, tp, sv)
        })
        .collect();
    let scale = svals
        .iter()
        .filter_map(|(_, _, sv)| sv.first().copied())
        .fold(0.0, f64::max);
    let mut ker_plus = 0.0;
    let mut ker_minus = 0.0;
    let mut gaps = Vec::with_capacity(svals.len());
    for (w, tp, sv) in &svals {
        let split = rank_split_scaled(sv, tp.nrows(), tp.ncols(), size, scale);
        if split.gap_ratio < policy.min_gap_ratio {
            return Err(Error::AmbiguousRank {
                gap_ratio: split.gap_ratio,
                threshold: policy.min_gap_ratio,
            });
        }
        ker_plus += w * split.nullity as f64;
        ker_minus += w * split.conullity as f64;
        gaps.push(split.gap_ratio);
    }
    Ok(IndexReport {
        gamma_ker_plus: ker_plus,
        gamma_ker_minus: ker_minus,
        index: ker_plus - ker_minus,
        rank_gaps: gaps,
    })
}
