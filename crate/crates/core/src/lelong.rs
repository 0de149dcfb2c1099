//! Lelong numbers of base currents at coordinate-adapted points, by the rule
//! system: delta-type terms contribute their coefficients, strictly smooth
//! factors suppress the density, and single-family sigma powers contribute
//! with density constant 1 (the oracle cross-checks that constant).

use crate::ambient::BasePoint;
use crate::current::{Coeff, Current, SmoothFactor};
use crate::error::{EngineError, Result};
use crate::metric::{chern_current, segre_current, MetricSpec, SymbolRules};
use num_traits::Zero;

/// Lelong number of a base current at a coordinate-adapted point.
pub fn lelong_number(t: &Current, p: &BasePoint) -> Result<Coeff> {
    if t.ambient.fiber_count != 0 {
        return Err(EngineError::MalformedTerm(
            "Lelong numbers are evaluated on base currents only".into(),
        ));
    }
    if p.zero.len() != t.ambient.base_dim {
        return Err(EngineError::MalformedTerm("point arity mismatch".into()));
    }
    let mut total = Coeff::zero();
    for term in &t.terms {
        if !p.lies_on(&term.cycle) {
            continue;
        }
        let families = term.sigma_families();
        if families.len() > 1 {
            return Err(EngineError::MultipleSigmaFamilies(format!(
                "term carries {} sigma families",
                families.len()
            )));
        }
        let has_other_smooth = term
            .smooth
            .iter()
            .any(|f| !matches!(f, SmoothFactor::Sigma { .. }));
        if has_other_smooth {
            // positive-degree smooth factor: density vanishes at every point
            continue;
        }
        match families.into_iter().next() {
            None => total += &term.coeff,
            Some((coords, _)) => {
                if p.vanishes_on(&coords) {
                    total += &term.coeff;
                }
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct ThetaIndependenceReport {
    pub mismatches: Vec<String>,
}

impl ThetaIndependenceReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Lelong numbers of Segre and Chern currents must not depend on the choice
/// of smooth reference metric: compare two symbol declarations at a list of
/// test points for all degrees up to `k_max`.
pub fn theta_independence_check(
    spec: &MetricSpec,
    rules_a: &SymbolRules,
    rules_b: &SymbolRules,
    k_max: usize,
    points: &[BasePoint],
) -> Result<ThetaIndependenceReport> {
    let mut mismatches = Vec::new();
    for k in 1..=k_max {
        let pairs = [
            ("s", segre_current(k, spec, rules_a)?, segre_current(k, spec, rules_b)?),
            ("c", chern_current(k, spec, rules_a)?, chern_current(k, spec, rules_b)?),
        ];
        for (name, a, b) in &pairs {
            for (i, p) in points.iter().enumerate() {
                let va = lelong_number(a, p)?;
                let vb = lelong_number(b, p)?;
                if va != vb {
                    mismatches.push(format!(
                        "{}_{} at point {}: {} vs {}",
                        name, k, i, va, vb
                    ));
                }
            }
        }
    }
    Ok(ThetaIndependenceReport { mismatches })
}
