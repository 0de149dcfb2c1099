//! Model psh weights, their curvature decompositions and unbounded loci, the
//! generalized Monge-Ampere recursion, and the bracket operator.

use std::collections::BTreeSet;

use num_traits::{One, Signed};

use crate::ambient::{Ambient, ConstructibleSet, CoordCycle, CoordNames, Polarity};
use crate::current::{normalize, restrict_off, restrict_to, wedge, wedge_power};
use crate::current::{Coeff, Current, SmoothFactor, Term};
use crate::error::{EngineError, Result};

/// One summand of a model weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightAtom {
    /// `c * log|x^m|^2`, exponent vector over the base coordinates.
    MonomialLog { exponents: Vec<u32>, coeff: Coeff },
    /// `c * log|x_I|^2` with `|x_I|^2 = sum_{i in I} |x_i|^2`, `|I| >= 2`.
    NormLog { coords: BTreeSet<usize>, coeff: Coeff },
    /// The singular O(1)-weight of fiber factor `factor` cut out by the
    /// section `xi_a`; curvature is the section divisor.
    FiberSectionLog { factor: usize, coord: usize },
    /// The smooth tautological O(1)-weight of fiber factor `factor`;
    /// curvature is the fiberwise Fubini-Study form.
    FiberFs { factor: usize },
    /// A bounded smooth summand with declared curvature symbol of degree 1.
    Smooth { name: String },
}

/// A model weight: formal sum of atoms over a fixed ambient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weight {
    pub ambient: Ambient,
    pub atoms: Vec<WeightAtom>,
}

impl Weight {
    pub fn new(ambient: Ambient, atoms: Vec<WeightAtom>) -> Result<Self> {
        let w = Weight { ambient, atoms };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        let mut fs_seen = BTreeSet::new();
        for a in &self.atoms {
            match a {
                WeightAtom::MonomialLog { exponents, coeff } => {
                    if exponents.len() != self.ambient.base_dim {
                        return Err(EngineError::MalformedTerm(
                            "monomial exponent vector has wrong length".into(),
                        ));
                    }
                    if exponents.iter().all(|&e| e == 0) {
                        return Err(EngineError::MalformedTerm(
                            "monomial log needs a nonzero exponent".into(),
                        ));
                    }
                    if !coeff.is_positive() {
                        return Err(EngineError::MalformedTerm(
                            "monomial log coefficient must be positive".into(),
                        ));
                    }
                }
                WeightAtom::NormLog { coords, coeff } => {
                    if coords.len() < 2 {
                        return Err(EngineError::MalformedTerm(
                            "norm log needs at least two coordinates".into(),
                        ));
                    }
                    if coords.iter().any(|&i| i == 0 || i > self.ambient.base_dim) {
                        return Err(EngineError::MalformedTerm(
                            "norm log coordinate out of range".into(),
                        ));
                    }
                    if !coeff.is_positive() {
                        return Err(EngineError::MalformedTerm(
                            "norm log coefficient must be positive".into(),
                        ));
                    }
                }
                WeightAtom::FiberSectionLog { factor, coord } => {
                    if *factor == 0 || *factor > self.ambient.fiber_count {
                        return Err(EngineError::MalformedTerm(
                            "fiber section references unknown factor".into(),
                        ));
                    }
                    if *coord == 0 || *coord > self.ambient.fiber_rank {
                        return Err(EngineError::MalformedTerm(
                            "fiber section coordinate out of range".into(),
                        ));
                    }
                }
                WeightAtom::FiberFs { factor } => {
                    if *factor == 0 || *factor > self.ambient.fiber_count {
                        return Err(EngineError::MalformedTerm(
                            "fiber FS weight references unknown factor".into(),
                        ));
                    }
                    if !fs_seen.insert(*factor) {
                        return Err(EngineError::MalformedTerm(format!(
                            "two FS weights on fiber factor {}",
                            factor
                        )));
                    }
                }
                WeightAtom::Smooth { .. } => {}
            }
        }
        Ok(())
    }

    /// True if no atom is singular.
    pub fn is_smooth(&self) -> bool {
        self.atoms.iter().all(|a| {
            matches!(a, WeightAtom::FiberFs { .. } | WeightAtom::Smooth { .. })
        })
    }

    /// Text form for reports, e.g. `1*log|x1*x2^2|^2 + 1*log|x1,x2|^2`.
    pub fn render(&self, names: &CoordNames) -> String {
        if self.atoms.is_empty() {
            return "0".to_string();
        }
        let coeff_str = |c: &Coeff| {
            if c.is_integer() {
                c.numer().to_string()
            } else {
                format!("{}/{}", c.numer(), c.denom())
            }
        };
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| match a {
                WeightAtom::MonomialLog { exponents, coeff } => {
                    let mono: Vec<String> = exponents
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(i, &e)| {
                            if e == 1 {
                                names.base_name(i + 1).to_string()
                            } else {
                                format!("{}^{}", names.base_name(i + 1), e)
                            }
                        })
                        .collect();
                    format!("{}*log|{}|^2", coeff_str(coeff), mono.join("*"))
                }
                WeightAtom::NormLog { coords, coeff } => {
                    let inner: Vec<&str> = coords.iter().map(|&i| names.base_name(i)).collect();
                    format!("{}*log|{}|^2", coeff_str(coeff), inner.join(","))
                }
                WeightAtom::FiberSectionLog { factor, coord } => {
                    format!("section({}:xi_{})", factor, coord)
                }
                WeightAtom::FiberFs { factor } => format!("fs({})", factor),
                WeightAtom::Smooth { name } => format!("smooth({})", name),
            })
            .collect();
        parts.join(" + ")
    }
}

/// Curvature current of a single atom, by Poincare-Lelong for the divisor
/// atoms and by definition for the smooth ones.
pub fn ddc_atom(ambient: &Ambient, a: &WeightAtom) -> Result<Current> {
    let terms = match a {
        WeightAtom::MonomialLog { exponents, coeff } => exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                Term::cycle_only(
                    coeff * Coeff::from_integer(e.into()),
                    CoordCycle::base(ambient, [i + 1]),
                )
            })
            .collect(),
        WeightAtom::NormLog { coords, coeff } => vec![Term::new(
            coeff.clone(),
            vec![SmoothFactor::Sigma { coords: coords.clone() }],
            CoordCycle::trivial(ambient),
        )],
        WeightAtom::FiberSectionLog { factor, coord } => vec![Term::cycle_only(
            Coeff::one(),
            CoordCycle::fiber(ambient, *factor, [*coord]),
        )],
        WeightAtom::FiberFs { factor } => vec![Term::new(
            Coeff::one(),
            vec![SmoothFactor::Fs { factor: *factor }],
            CoordCycle::trivial(ambient),
        )],
        WeightAtom::Smooth { name } => vec![Term::new(
            Coeff::one(),
            vec![SmoothFactor::named(name, 1)],
            CoordCycle::trivial(ambient),
        )],
    };
    normalize(terms, ambient)
}

/// Full curvature current `dd^c u`.
pub fn ddc_weight(u: &Weight) -> Result<Current> {
    let mut acc = Current::zero(&u.ambient);
    for a in &u.atoms {
        acc = acc.add(&ddc_atom(&u.ambient, a)?)?;
    }
    Ok(acc)
}

/// Components of the unbounded locus, one cycle support per singular atom
/// contribution, deduplicated.
pub fn unbounded_locus(u: &Weight) -> Vec<CoordCycle> {
    let mut out: Vec<CoordCycle> = Vec::new();
    let mut push = |c: CoordCycle| {
        if !out.contains(&c) {
            out.push(c);
        }
    };
    for a in &u.atoms {
        match a {
            WeightAtom::MonomialLog { exponents, .. } => {
                for (i, &e) in exponents.iter().enumerate() {
                    if e > 0 {
                        push(CoordCycle::base(&u.ambient, [i + 1]));
                    }
                }
            }
            WeightAtom::NormLog { coords, .. } => {
                push(CoordCycle::base(&u.ambient, coords.iter().copied()));
            }
            WeightAtom::FiberSectionLog { factor, coord } => {
                push(CoordCycle::fiber(&u.ambient, *factor, [*coord]));
            }
            WeightAtom::FiberFs { .. } | WeightAtom::Smooth { .. } => {}
        }
    }
    out
}

/// `dd^c(u T)` for `T` already supported off the unbounded locus of `u`:
/// expands atomwise into curvature wedge `T`.
pub fn ddc_weight_times(u: &Weight, t: &Current) -> Result<Current> {
    wedge(&ddc_weight(u)?, t)
}

/// The generalized Monge-Ampere power `(dd^c u)^m` by the defining recursion:
/// each step restricts off the unbounded locus before applying `dd^c(u .)`.
pub fn ma_power(u: &Weight, m: usize) -> Result<Current> {
    let z = unbounded_locus(u);
    let mut t = Current::one(&u.ambient);
    for _ in 0..m {
        t = ddc_weight_times(u, &restrict_off(&t, &z))?;
    }
    Ok(t)
}

/// Structural check that a constructible set avoids every component of an
/// unbounded locus.
fn check_avoids_locus(s: &ConstructibleSet, z: &[CoordCycle], what: &str) -> Result<()> {
    match s.polarity {
        Polarity::Union => {
            for m in &s.members {
                if z.iter().any(|c| c.contains(m)) {
                    return Err(EngineError::PreconditionViolated(format!(
                        "{}: a member lies inside the unbounded locus",
                        what
                    )));
                }
            }
        }
        Polarity::ComplementOfUnion => {
            for c in z {
                if !s.members.iter().any(|m| m.contains(c)) {
                    return Err(EngineError::PreconditionViolated(format!(
                        "{}: an unbounded-locus component is not excluded",
                        what
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Ordered mixed product `dd^c u_k 1_{U_k} ^ ... ^ dd^c u_1 1_{U_1}`.
/// The slice is given innermost first: `factors[0]` is applied first.
pub fn generalized_product(factors: &[(Weight, ConstructibleSet)]) -> Result<Current> {
    let Some((first, _)) = factors.first() else {
        return Err(EngineError::MalformedTerm("empty product".into()));
    };
    let ambient = first.ambient.clone();
    for (i, (u, s)) in factors.iter().enumerate() {
        if u.ambient != ambient {
            return Err(EngineError::MalformedTerm("ambient mismatch in product".into()));
        }
        check_avoids_locus(s, &unbounded_locus(u), &format!("factor {}", i + 1))?;
    }
    let mut t = Current::one(&ambient);
    for (u, s) in factors {
        t = ddc_weight_times(u, &restrict_to(&t, s))?;
    }
    Ok(t)
}

fn check_smooth_alpha(alpha: &Current) -> Result<()> {
    if !alpha.is_smooth_symbol() {
        return Err(EngineError::NotSmoothAlpha(
            "bracket form must be a trivial-cycle combination of smooth symbols".into(),
        ));
    }
    Ok(())
}

/// One bracket step: `dd^c(u 1_{X\Z} T) + alpha ^ 1_Z T`.
pub fn bracket_apply(u: &Weight, alpha: &Current, t: &Current) -> Result<Current> {
    check_smooth_alpha(alpha)?;
    let z = unbounded_locus(u);
    let main = ddc_weight_times(u, &restrict_off(t, &z))?;
    let correction = wedge(alpha, &restrict_to(t, &ConstructibleSet::union_of(z)))?;
    main.add(&correction)
}

/// `[dd^c u]^m_alpha` by m-fold iteration of the bracket step from 1.
pub fn bracket_power(u: &Weight, alpha: &Current, m: usize) -> Result<Current> {
    check_smooth_alpha(alpha)?;
    let mut t = Current::one(&u.ambient);
    for _ in 0..m {
        t = bracket_apply(u, alpha, &t)?;
    }
    Ok(t)
}

/// The closed-form expansion `(dd^c u)^m + sum_l alpha^{m-l} ^ 1_Z (dd^c u)^l`;
/// agrees with `bracket_power` as a tested identity.
pub fn bracket_expand(u: &Weight, alpha: &Current, m: usize) -> Result<Current> {
    check_smooth_alpha(alpha)?;
    let z = ConstructibleSet::union_of(unbounded_locus(u));
    let mut acc = ma_power(u, m)?;
    for l in 0..m {
        let piece = wedge(&wedge_power(alpha, m - l)?, &restrict_to(&ma_power(u, l)?, &z))?;
        acc = acc.add(&piece)?;
    }
    Ok(acc)
}
