//! End-to-end verdict for positive weights: essential core, `chi(M)`, the
//! critical-point census, Morse indices, Aomoto non-resonance, and the
//! Novikov rank table that these quantities predict.
//!
//! The rank table is a function of the rank `l` and `chi(M)` alone; the
//! remaining fields are independent evidence and the flags record whether it
//! agrees.

pub mod identities;
pub mod svg;

pub use identities::{verify_identities, IdentityReport};

use serde::Serialize;

use crate::arrangement::{Arrangement, Weights};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, essentialize, Lattice};
use crate::master::{find_critical_points_with, CriticalSet, SearchStatus, SolverConfig};
use crate::os_aomoto::{check_nonresonance, ResonanceReport};

#[derive(Clone, Debug, Default, Serialize)]
pub struct ReportConfig {
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub ambient_dim: usize,
    pub rank_l: usize,
    pub chi: i64,
    /// Length `n + 1`; `|chi|` at index `l`, zero elsewhere.
    pub novikov_ranks: Vec<u64>,
    pub critical_count: usize,
    /// Every critical point has Hessian signature `(l, l)`.
    pub morse_all_index_n: bool,
    /// Aomoto cohomology vanishes below `l` and has rank `|chi|` in degree `l`.
    pub aomoto_agrees: bool,
    /// `critical_count == |chi|`.
    pub consistent: bool,
    pub essentialized: bool,
    pub critical: Option<CriticalSet>,
    pub resonance: Option<ResonanceReport>,
    pub diagnostics: Vec<String>,
}

/// Predicted rank table:`|chi|` in degree `l`, zero elsewhere.
pub fn predicted_novikov_ranks(n: usize, l: usize, chi: i64) -> Vec<u64> {
    let mut r = vec![0; n + 1];
    r[l] = chi.unsigned_abs();
    r
}

/// Runs the pipeline essentialize, lattice, critical points, Morse
/// certification and non-resonance. Stage failures become diagnostics.
pub fn full_report(arr: &Arrangement, w: &Weights, config: &ReportConfig) -> Result<RankReport> {
    arr.check_weights(w)?;
    if !w.is_positive() {
        return Err(Error::NonPositiveWeights);
    }
    let mut diagnostics = Vec::new();
    let ess = essentialize(arr)?;
    let core = &ess.core;
    let lat: Lattice = build_lattice(core)?;
    let l = lat.rank();
    let chi = lat.euler_characteristic();
    if !ess.identity {
        diagnostics.push(format!(
            "essentialized from C^{} to C^{}; the complement is the core complement times C^{}",
            arr.dim(),
            core.dim(),
            arr.dim() - core.dim()
        ));
        match build_lattice(arr) {
            Ok(full) if full.euler_characteristic() != chi => diagnostics.push(format!(
                "chi of the input lattice {} differs from chi of the core {chi}",
                full.euler_characteristic()
            )),
            Ok(_) => {}
            Err(e) => diagnostics.push(format!("lattice of the input failed: {e}")),
        }
    }

    let critical = match find_critical_points_with(core, w, &lat, &config.solver) {
        Ok(set) => {
            if let SearchStatus::BudgetExhausted { found, target } = set.status {
                diagnostics.push(format!("critical point search found {found} of {target}"));
            }
            diagnostics.extend(set.notes.iter().cloned());
            Some(set)
        }
        Err(e) => {
            diagnostics.push(format!("critical point search failed: {e}"));
            None
        }
    };
    let critical_count = critical.as_ref().map_or(0, |s| s.points.len());
    let morse_all_index_n = critical.as_ref().is_some_and(|s| {
        s.points
            .iter()
            .all(|p| p.certified && p.hessian_signature == (l, l))
    });

    let resonance = match check_nonresonance(core, &lat, w) {
        Ok(r) => Some(r),
        Err(e) => {
            diagnostics.push(format!("Aomoto complex failed: {e}"));
            None
        }
    };
    let aomoto_agrees = resonance
        .as_ref()
        .is_some_and(|r| r.nonresonant && r.top_rank_matches_chi && r.d_squared_zero);
    if let Some(r) = &resonance {
        if !aomoto_agrees {
            diagnostics.push(format!(
                "Aomoto cohomology ranks {:?} do not match the predicted shape",
                r.cohomology_ranks
            ));
        }
    }
    let consistent = critical.is_some() && critical_count as i64 == chi.abs();
    Ok(RankReport {
        ambient_dim: arr.dim(),
        rank_l: l,
        chi,
        novikov_ranks: predicted_novikov_ranks(arr.dim(), l, chi),
        critical_count,
        morse_all_index_n,
        aomoto_agrees,
        consistent,
        essentialized: !ess.identity,
        critical,
        resonance,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let arr = Arrangement::from_real_rows(1, &[vec![1.0, 0.0], vec![1.0, -1.0]]).unwrap();
        let r = full_report(&arr, &Weights::ones(2), &ReportConfig::default()).unwrap();
        assert_eq!((r.rank_l, r.chi), (1, -1));
        assert_eq!(r.novikov_ranks, vec![0, 1]);
        assert_eq!(r.critical_count, 1);
        assert!(r.morse_all_index_n && r.aomoto_agrees && r.consistent);
    }

    #[test]
    fn four_generic_lines() {
        let arr = Arrangement::from_real_rows(
            2,
            &[
                vec![0.0, -1.0, 0.0],
                vec![1.0, -1.0, 1.0],
                vec![-1.0, -1.0, 3.0],
                vec![2.0, -1.0, -2.0],
            ],
        )
        .unwrap();
        let r = full_report(&arr, &Weights::ones(4), &ReportConfig::default()).unwrap();
        assert_eq!(r.novikov_ranks, vec![0, 0, 3]);
        assert_eq!(r.critical_count, 3);
        assert!(r.morse_all_index_n && r.aomoto_agrees && r.consistent);
    }

    #[test]
    fn rejects_non_positive() {
        let arr = Arrangement::from_real_rows(1, &[vec![1.0, 0.0], vec![1.0, -1.0]]).unwrap();
        assert!(matches!(
            full_report(&arr, &Weights::from_integers(&[1, -1]), &ReportConfig::default()),
            Err(Error::NonPositiveWeights)
        ));
    }
}
