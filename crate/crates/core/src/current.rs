//! The graded term algebra of model currents: formal rational combinations of
//! smooth symbol factors attached to coordinate cycles, with wedge products,
//! restriction operators and the reduction rules (King reduction, dimension
//! principle, fiber-degree accounting) baked into normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ambient::{Ambient, ConstructibleSet, CoordCycle, CoordNames};
use crate::error::{EngineError, Result};

pub type Coeff = BigRational;

pub fn rat(n: i64) -> Coeff {
    BigRational::from_integer(n.into())
}

pub fn ratio(n: i64, d: i64) -> Coeff {
    BigRational::new(n.into(), d.into())
}

/// A closed smooth symbol factor of pure bidegree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SmoothFactor {
    /// First-Chern symbol of O(1) on fiber factor `factor`, for the named
    /// smooth reference metric. Bidegree (1,1); charges no fiber budget.
    Theta { factor: usize, tag: String },
    /// The fiberwise Fubini-Study form of fiber factor `factor`. Bidegree
    /// (1,1); purely fiber-directed.
    Fs { factor: usize },
    /// `sigma_I = dd^c log|x_I|^2` for a base-coordinate subset `I`, |I| >= 2.
    /// Smooth off `{x_I = 0}`.
    Sigma { coords: BTreeSet<usize> },
    /// A user-declared closed smooth base form symbol of bidegree (p,p).
    Named { name: String, degree: usize },
}

impl SmoothFactor {
    pub fn theta(factor: usize, tag: &str) -> Self {
        SmoothFactor::Theta { factor, tag: tag.to_string() }
    }

    pub fn sigma(coords: impl IntoIterator<Item = usize>) -> Self {
        SmoothFactor::Sigma { coords: coords.into_iter().collect() }
    }

    pub fn named(name: &str, degree: usize) -> Self {
        SmoothFactor::Named { name: name.to_string(), degree }
    }

    pub fn degree(&self) -> usize {
        match self {
            SmoothFactor::Theta { .. } | SmoothFactor::Fs { .. } | SmoothFactor::Sigma { .. } => 1,
            SmoothFactor::Named { degree, .. } => *degree,
        }
    }

    fn validate(&self, ambient: &Ambient) -> Result<()> {
        match self {
            SmoothFactor::Theta { factor, .. } | SmoothFactor::Fs { factor } => {
                if *factor == 0 || *factor > ambient.fiber_count {
                    return Err(EngineError::MalformedTerm(format!(
                        "factor {} out of range (ambient has {} fiber factors)",
                        factor, ambient.fiber_count
                    )));
                }
            }
            SmoothFactor::Sigma { coords } => {
                if coords.len() < 2 {
                    return Err(EngineError::MalformedTerm(
                        "sigma family needs at least two coordinates".into(),
                    ));
                }
                for &i in coords {
                    if i == 0 || i > ambient.base_dim {
                        return Err(EngineError::MalformedTerm(format!(
                            "sigma coordinate x{} out of range",
                            i
                        )));
                    }
                }
            }
            SmoothFactor::Named { degree, name } => {
                if *degree == 0 {
                    return Err(EngineError::MalformedTerm(format!(
                        "named form {} must have positive degree",
                        name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One summand of a current: an exact rational coefficient, a multiset of
/// smooth factors (kept sorted), and one coordinate cycle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Term {
    pub coeff: Coeff,
    pub smooth: Vec<SmoothFactor>,
    pub cycle: CoordCycle,
}

impl Term {
    pub fn new(coeff: Coeff, smooth: Vec<SmoothFactor>, cycle: CoordCycle) -> Self {
        let mut t = Term { coeff, smooth, cycle };
        t.smooth.sort();
        t
    }

    pub fn cycle_only(coeff: Coeff, cycle: CoordCycle) -> Self {
        Term::new(coeff, Vec::new(), cycle)
    }

    pub fn one(ambient: &Ambient) -> Self {
        Term::cycle_only(Coeff::one(), CoordCycle::trivial(ambient))
    }

    pub fn total_degree(&self) -> usize {
        self.smooth.iter().map(|f| f.degree()).sum::<usize>() + self.cycle.codim()
    }

    /// Multiplicity of Fubini-Study factors of fiber factor `j`.
    fn fs_count(&self, j: usize) -> usize {
        self.smooth
            .iter()
            .filter(|f| matches!(f, SmoothFactor::Fs { factor } if *factor == j))
            .count()
    }

    /// The distinct sigma families present, with multiplicities.
    pub fn sigma_families(&self) -> BTreeMap<BTreeSet<usize>, usize> {
        let mut fam = BTreeMap::new();
        for f in &self.smooth {
            if let SmoothFactor::Sigma { coords } = f {
                *fam.entry(coords.clone()).or_insert(0) += 1;
            }
        }
        fam
    }
}

/// King reduction of saturated sigma powers: with `I' = I \ base_zero` and
/// `q' = |I'|`, a power `sigma_I^k` stays formal for `k < q'`, collapses to
/// the cycle `{x_{I'} = 0}` at `k = q'`, and annihilates the term for
/// `k > q'`. `q' = 0` means the weight is identically unbounded on the cycle.
pub fn king_reduce(term: &Term) -> Result<Option<Term>> {
    let mut term = term.clone();
    loop {
        let mut changed = false;
        for (coords, mult) in term.sigma_families() {
            let reduced: BTreeSet<usize> =
                coords.difference(&term.cycle.base_zero).copied().collect();
            if reduced.is_empty() {
                return Err(EngineError::DegenerateSigma(format!(
                    "sigma family {:?} lies entirely in the cycle",
                    coords
                )));
            }
            if mult > reduced.len() {
                return Ok(None);
            }
            if mult == reduced.len() {
                term.smooth.retain(
                    |f| !matches!(f, SmoothFactor::Sigma { coords: c } if *c == coords),
                );
                term.cycle.base_zero.extend(reduced);
                changed = true;
                break;
            }
        }
        if !changed {
            return Ok(Some(term));
        }
    }
}

/// A normalized current: merged, canonically ordered terms over a fixed
/// ambient space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Current {
    pub ambient: Ambient,
    pub terms: Vec<Term>,
}

impl Current {
    pub fn zero(ambient: &Ambient) -> Self {
        Current { ambient: ambient.clone(), terms: Vec::new() }
    }

    pub fn one(ambient: &Ambient) -> Self {
        Current { ambient: ambient.clone(), terms: vec![Term::one(ambient)] }
    }

    pub fn from_term(ambient: &Ambient, term: Term) -> Result<Self> {
        normalize(vec![term], ambient)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Current) -> Result<Current> {
        if self.ambient != other.ambient {
            return Err(EngineError::MalformedTerm("ambient mismatch in sum".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        normalize(terms, &self.ambient)
    }

    pub fn scale(&self, c: &Coeff) -> Current {
        if c.is_zero() {
            return Current::zero(&self.ambient);
        }
        Current {
            ambient: self.ambient.clone(),
            terms: self.terms.iter().map(|t| {
                Term { coeff: &t.coeff * c, smooth: t.smooth.clone(), cycle: t.cycle.clone() }
            }).collect(),
        }
    }

    pub fn negate(&self) -> Current {
        self.scale(&-Coeff::one())
    }

    /// All coefficients nonnegative (the engine's notion of positivity for
    /// normalized currents).
    pub fn is_positive(&self) -> bool {
        self.terms.iter().all(|t| !t.coeff.is_negative())
    }

    /// True if every term is a trivial-cycle combination of smooth factors.
    pub fn is_smooth_symbol(&self) -> bool {
        self.terms.iter().all(|t| {
            t.cycle.is_trivial()
                && t.smooth.iter().all(|f| !matches!(f, SmoothFactor::Sigma { .. }))
        })
    }
}

/// Normalize a raw list of terms: validate references, King-reduce saturated
/// sigma powers, kill terms by degree vanishing, merge like terms, and sort
/// canonically.
pub fn normalize(raw: Vec<Term>, ambient: &Ambient) -> Result<Current> {
    let total_dim = ambient.total_dim();
    let mut reduced: Vec<Term> = Vec::new();
    for term in raw {
        term.cycle.validate(ambient)?;
        for f in &term.smooth {
            f.validate(ambient)?;
        }
        if term.coeff.is_zero() {
            continue;
        }
        let Some(term) = king_reduce(&term)? else { continue };
        if term.total_degree() > total_dim {
            continue;
        }
        // Fiber-degree budget: per factor, Fubini-Study degree plus fiber
        // cycle codimension cannot exceed r - 1.
        let mut dead = false;
        for j in 1..=ambient.fiber_count {
            if term.fs_count(j) + term.cycle.fiber_zero[j - 1].len() > ambient.fiber_rank - 1 {
                dead = true;
                break;
            }
        }
        if dead {
            continue;
        }
        reduced.push(term);
    }

    let mut merged: BTreeMap<(CoordCycle, Vec<SmoothFactor>), Coeff> = BTreeMap::new();
    for t in reduced {
        *merged
            .entry((t.cycle, t.smooth))
            .or_insert_with(Coeff::zero) += t.coeff;
    }
    let terms = merged
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((cycle, smooth), coeff)| Term { coeff, smooth, cycle })
        .collect();
    Ok(Current { ambient: ambient.clone(), terms })
}

/// Wedge product. Bilinear; smooth multisets merge; cycles merge only under
/// proper intersection, a shared index is an error rather than a silent zero.
pub fn wedge(a: &Current, b: &Current) -> Result<Current> {
    if a.ambient != b.ambient {
        return Err(EngineError::MalformedTerm("ambient mismatch in wedge".into()));
    }
    let mut terms = Vec::new();
    for ta in &a.terms {
        for tb in &b.terms {
            let cycle = ta.cycle.merge_proper(&tb.cycle)?;
            let mut smooth = ta.smooth.clone();
            smooth.extend(tb.smooth.iter().cloned());
            terms.push(Term::new(&ta.coeff * &tb.coeff, smooth, cycle));
        }
    }
    normalize(terms, &a.ambient)
}

/// Wedge power of a current (used for smooth symbol combinations).
pub fn wedge_power(a: &Current, m: usize) -> Result<Current> {
    let mut acc = Current::one(&a.ambient);
    for _ in 0..m {
        acc = wedge(&acc, a)?;
    }
    Ok(acc)
}

/// Multiplication by the characteristic function of a constructible set:
/// component selection on cycle supports.
pub fn restrict_to(t: &Current, s: &ConstructibleSet) -> Current {
    Current {
        ambient: t.ambient.clone(),
        terms: t.terms.iter().filter(|term| s.keeps(&term.cycle)).cloned().collect(),
    }
}

/// Multiplication by `1_{X \ (Z_1 u ... u Z_m)}`.
pub fn restrict_off(t: &Current, z: &[CoordCycle]) -> Current {
    restrict_to(t, &ConstructibleSet::complement_of(z.to_vec()))
}

// ---------------------------------------------------------------------------
// Canonical rendering
// ---------------------------------------------------------------------------

fn render_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn render_factor(f: &SmoothFactor, names: &CoordNames) -> String {
    match f {
        SmoothFactor::Theta { factor, tag } => format!("theta_{}{{{}}}", factor, tag),
        SmoothFactor::Fs { factor } => format!("fs_{}", factor),
        SmoothFactor::Sigma { coords } => {
            let inner: Vec<&str> = coords.iter().map(|&i| names.base_name(i)).collect();
            format!("sigma{{{}}}", inner.join(","))
        }
        SmoothFactor::Named { name, .. } => name.clone(),
    }
}

fn render_cycle(c: &CoordCycle, names: &CoordNames) -> String {
    if c.is_trivial() {
        return "1".to_string();
    }
    let base: Vec<String> =
        c.base_zero.iter().map(|&i| format!("{}=0", names.base_name(i))).collect();
    let mut parts = Vec::new();
    if !base.is_empty() {
        parts.push(base.join(","));
    }
    for (j, s) in c.fiber_zero.iter().enumerate() {
        if !s.is_empty() {
            let fib: Vec<String> = s.iter().map(|&a| format!("xi_{}=0", a)).collect();
            parts.push(format!("{}:{}", j + 1, fib.join(",")));
        }
    }
    format!("[{}]", parts.join("; "))
}

impl Current {
    /// Canonical text rendering: terms sorted, each rendered
    /// `coeff*factor*...*[cycle]`, with `1` for the trivial cycle.
    pub fn render(&self, names: &CoordNames) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for t in &self.terms {
            let mut piece = render_coeff(&t.coeff);
            // group equal factors into powers
            let mut i = 0;
            while i < t.smooth.len() {
                let f = &t.smooth[i];
                let mut k = 1;
                while i + k < t.smooth.len() && &t.smooth[i + k] == f {
                    k += 1;
                }
                let body = render_factor(f, names);
                if k == 1 {
                    piece.push_str(&format!("*{}", body));
                } else {
                    piece.push_str(&format!("*({})^{}", body, k));
                }
                i += k;
            }
            piece.push_str(&format!("*{}", render_cycle(&t.cycle, names)));
            parts.push(piece);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Current {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&CoordNames::default_for(self.ambient.base_dim)))
    }
}
