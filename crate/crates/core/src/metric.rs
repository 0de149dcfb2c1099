//! Metric specifications on the bundle, induced O(1) weights on the
//! projectivization, fiber-product lifting, the pushforward to the base, and
//! the Segre/Chern current recursions.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use crate::ambient::{Ambient, CoordCycle};
use crate::current::{normalize, wedge, Coeff, Current, SmoothFactor, Term};
use crate::error::{EngineError, Result};
use crate::weight::{bracket_apply, unbounded_locus, Weight, WeightAtom};

/// How the singular hermitian metric is presented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricForm {
    /// Rank 1: the O(1) weight is the base weight itself.
    LineBundle(Weight),
    /// `h = e^{-w} Id` for a base weight `w`; induces `pi^* w` plus the
    /// tautological fiberwise FS weight.
    ConformalDiagonal(Weight),
    /// The induced O(1) weight given directly, on a one-factor fiber ambient.
    ExplicitO1Weight(Weight),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSpec {
    pub rank: usize,
    pub form: MetricForm,
}

impl MetricSpec {
    pub fn new(rank: usize, form: MetricForm) -> Result<Self> {
        let spec = MetricSpec { rank, form };
        spec.validate()?;
        Ok(spec)
    }

    pub fn base_dim(&self) -> usize {
        match &self.form {
            MetricForm::LineBundle(w)
            | MetricForm::ConformalDiagonal(w)
            | MetricForm::ExplicitO1Weight(w) => w.ambient.base_dim,
        }
    }

    /// The ambient of the t-fold fiber product of projectivizations.
    pub fn fiber_ambient(&self, t: usize) -> Ambient {
        Ambient::with_fibers(self.base_dim(), t, self.rank)
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(EngineError::BadSpec("rank must be positive".into()));
        }
        let has_fiber_atoms = |w: &Weight| {
            w.atoms.iter().any(|a| {
                matches!(
                    a,
                    WeightAtom::FiberSectionLog { .. } | WeightAtom::FiberFs { .. }
                )
            })
        };
        match &self.form {
            MetricForm::LineBundle(w) => {
                if self.rank != 1 {
                    return Err(EngineError::BadSpec("line bundle form requires rank 1".into()));
                }
                if has_fiber_atoms(w) {
                    return Err(EngineError::BadSpec("line bundle weight must be a base weight".into()));
                }
            }
            MetricForm::ConformalDiagonal(w) => {
                if has_fiber_atoms(w) {
                    return Err(EngineError::BadSpec(
                        "conformal diagonal weight must be a base weight".into(),
                    ));
                }
            }
            MetricForm::ExplicitO1Weight(w) => {
                if w.ambient.fiber_count != 1 || w.ambient.fiber_rank != self.rank {
                    return Err(EngineError::BadSpec(
                        "explicit O(1) weight must live on a one-factor fiber ambient of the declared rank"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The induced O(1) weight of fiber factor `j`, lifted to `ambient`.
pub fn induced_weight(spec: &MetricSpec, ambient: &Ambient, j: usize) -> Result<Weight> {
    if ambient.base_dim != spec.base_dim() || ambient.fiber_rank != spec.rank {
        return Err(EngineError::BadSpec("ambient does not match the metric spec".into()));
    }
    if j == 0 || j > ambient.fiber_count {
        return Err(EngineError::BadSpec(format!("fiber factor {} out of range", j)));
    }
    let atoms = match &spec.form {
        MetricForm::LineBundle(w) => w.atoms.clone(),
        MetricForm::ConformalDiagonal(w) => {
            let mut atoms = w.atoms.clone();
            atoms.push(WeightAtom::FiberFs { factor: j });
            atoms
        }
        MetricForm::ExplicitO1Weight(w) => w
            .atoms
            .iter()
            .map(|a| match a {
                WeightAtom::FiberSectionLog { coord, .. } => {
                    WeightAtom::FiberSectionLog { factor: j, coord: *coord }
                }
                WeightAtom::FiberFs { .. } => WeightAtom::FiberFs { factor: j },
                other => other.clone(),
            })
            .collect(),
    };
    Weight::new(ambient.clone(), atoms)
}

/// Base projection of the unbounded locus of the induced O(1) weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegeneracyLocus {
    /// Some unbounded component is purely fiber-directed and projects onto
    /// the whole base.
    WholeBase,
    /// Base cycle supports (on the base ambient).
    Components(Vec<CoordCycle>),
}

impl DegeneracyLocus {
    /// Members for restriction operators on base currents: the whole base is
    /// encoded as the trivial cycle, which contains everything.
    pub fn members(&self, base: &Ambient) -> Vec<CoordCycle> {
        match self {
            DegeneracyLocus::WholeBase => vec![CoordCycle::trivial(base)],
            DegeneracyLocus::Components(cs) => cs.clone(),
        }
    }
}

pub fn degeneracy_locus(spec: &MetricSpec) -> Result<DegeneracyLocus> {
    let ambient = spec.fiber_ambient(1);
    let phi = induced_weight(spec, &ambient, 1)?;
    let base = ambient.base_ambient();
    let mut components: Vec<CoordCycle> = Vec::new();
    for c in unbounded_locus(&phi) {
        if c.base_zero.is_empty() {
            return Ok(DegeneracyLocus::WholeBase);
        }
        let projected = CoordCycle::base(&base, c.base_zero.iter().copied());
        if !components.contains(&projected) {
            components.push(projected);
        }
    }
    Ok(DegeneracyLocus::Components(components))
}

/// Declared pushforward value of a theta power for the smooth reference
/// metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegreSymbol {
    Zero,
    /// A wedge of named base form symbols, total degree k.
    Form(Vec<SmoothFactor>),
}

/// A substitution rule `theta_j ^ [fiber cycle] -> rhs` applied factorwise
/// before fiber integration; `rhs` is a base current (usually zero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    pub theta_tag: String,
    pub fiber_zero: BTreeSet<usize>,
    pub rhs: Option<Vec<SmoothFactor>>,
}

impl Substitution {
    pub fn to_zero(theta_tag: &str, fiber_zero: impl IntoIterator<Item = usize>) -> Self {
        Substitution {
            theta_tag: theta_tag.to_string(),
            fiber_zero: fiber_zero.into_iter().collect(),
            rhs: None,
        }
    }
}

/// The user-declared reference-metric symbol system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolRules {
    pub theta_tag: String,
    pub segre_symbols: BTreeMap<usize, SegreSymbol>,
    /// When set, undeclared positive-degree Segre symbols are zero (flat
    /// reference metric) instead of an error.
    pub undeclared_zero: bool,
    pub substitutions: Vec<Substitution>,
}

impl SymbolRules {
    pub fn new(theta_tag: &str) -> Self {
        SymbolRules {
            theta_tag: theta_tag.to_string(),
            segre_symbols: BTreeMap::new(),
            undeclared_zero: false,
            substitutions: Vec::new(),
        }
    }

    /// Flat reference metric: every positive-degree Segre symbol vanishes.
    pub fn euclidean(theta_tag: &str) -> Self {
        SymbolRules { undeclared_zero: true, ..SymbolRules::new(theta_tag) }
    }

    pub fn declare_segre(&mut self, k: usize, value: SegreSymbol) -> Result<()> {
        if k == 0 {
            return Err(EngineError::BadSpec("s_0 is forced to 1".into()));
        }
        if let SegreSymbol::Form(factors) = &value {
            let deg: usize = factors.iter().map(|f| f.degree()).sum();
            if deg != k {
                return Err(EngineError::BadSpec(format!(
                    "declared s_{} has degree {}",
                    k, deg
                )));
            }
            if !factors.iter().all(|f| matches!(f, SmoothFactor::Named { .. })) {
                return Err(EngineError::BadSpec(
                    "declared Segre symbols must be named base forms".into(),
                ));
            }
        }
        self.segre_symbols.insert(k, value);
        Ok(())
    }

    /// Declared value of s_k(E,g) as smooth base factors; `None` means the
    /// symbol is zero.
    fn segre_symbol(&self, k: usize) -> Result<Option<Vec<SmoothFactor>>> {
        if k == 0 {
            return Ok(Some(Vec::new()));
        }
        match self.segre_symbols.get(&k) {
            Some(SegreSymbol::Zero) => Ok(None),
            Some(SegreSymbol::Form(fs)) => Ok(Some(fs.clone())),
            None if self.undeclared_zero => Ok(None),
            None => Err(EngineError::UndeclaredSegreSymbol(k)),
        }
    }

    /// The declared s_k(E,g) as a base current.
    pub fn segre_symbol_current(&self, base: &Ambient, k: usize) -> Result<Current> {
        match self.segre_symbol(k)? {
            None => Ok(Current::zero(base)),
            Some(fs) => Current::from_term(base, Term::new(Coeff::one(), fs, CoordCycle::trivial(base))),
        }
    }
}

/// The theta symbol of fiber factor `j` as a current.
pub fn theta_current(ambient: &Ambient, j: usize, tag: &str) -> Result<Current> {
    Current::from_term(
        ambient,
        Term::new(Coeff::one(), vec![SmoothFactor::theta(j, tag)], CoordCycle::trivial(ambient)),
    )
}

fn factor_counts(term: &Term, j: usize) -> (usize, usize, Vec<String>) {
    let mut theta_tags = Vec::new();
    let mut fs = 0;
    for f in &term.smooth {
        match f {
            SmoothFactor::Theta { factor, tag } if *factor == j => theta_tags.push(tag.clone()),
            SmoothFactor::Fs { factor } if *factor == j => fs += 1,
            _ => {}
        }
    }
    (theta_tags.len(), fs, theta_tags)
}

/// Apply declared substitutions to one term until none matches. Returns
/// `None` when a zero-valued rule kills the term.
fn apply_substitutions(term: &Term, ambient: &Ambient, rules: &SymbolRules) -> Option<Term> {
    let mut term = term.clone();
    'outer: loop {
        for j in 1..=ambient.fiber_count {
            for sub in &rules.substitutions {
                if sub.fiber_zero.is_empty() {
                    continue;
                }
                let has_cycle = sub.fiber_zero.is_subset(&term.cycle.fiber_zero[j - 1]);
                let theta_pos = term.smooth.iter().position(|f| {
                    matches!(f, SmoothFactor::Theta { factor, tag }
                        if *factor == j && *tag == sub.theta_tag)
                });
                if let (true, Some(pos)) = (has_cycle, theta_pos) {
                    term.smooth.remove(pos);
                    for c in &sub.fiber_zero {
                        term.cycle.fiber_zero[j - 1].remove(c);
                    }
                    match &sub.rhs {
                        None => return None,
                        Some(fs) => {
                            term.smooth.extend(fs.iter().cloned());
                            term.smooth.sort();
                        }
                    }
                    continue 'outer;
                }
            }
        }
        return Some(term);
    }
}

/// Fiber integration `pi_*` down to the base, factor by factor. Theta powers
/// evaluate through the declared reference Segre symbols; Fubini-Study powers
/// paired with fiber cycles integrate to 1 exactly when they fill the fiber
/// dimension; base content passes through by the projection formula.
pub fn pushforward(t: &Current, rules: &SymbolRules) -> Result<Current> {
    let ambient = &t.ambient;
    let base = ambient.base_ambient();
    let r = ambient.fiber_rank;
    let mut out_terms: Vec<Term> = Vec::new();

    'terms: for term in &t.terms {
        let Some(term) = apply_substitutions(term, ambient, rules) else { continue };
        let mut coeff = term.coeff.clone();
        let mut smooth: Vec<SmoothFactor> = term
            .smooth
            .iter()
            .filter(|f| !matches!(f, SmoothFactor::Theta { .. } | SmoothFactor::Fs { .. }))
            .cloned()
            .collect();

        for j in 1..=ambient.fiber_count {
            let (a, b, tags) = factor_counts(&term, j);
            let z = term.cycle.fiber_zero[j - 1].len();
            if r == 1 {
                // the projectivization is the base itself; theta symbols
                // descend as named base forms
                for tag in tags {
                    smooth.push(SmoothFactor::named(&format!("theta{{{}}}", tag), 1));
                }
                continue;
            }
            if a > 0 {
                if b > 0 || z > 0 {
                    return Err(EngineError::UnsupportedPushforward(format!(
                        "factor {} mixes theta with fiber content and no substitution applies",
                        j
                    )));
                }
                if tags.iter().any(|t| *t != tags[0]) {
                    return Err(EngineError::UnsupportedPushforward(format!(
                        "factor {} mixes theta symbols of different reference metrics",
                        j
                    )));
                }
                if a < r - 1 {
                    continue 'terms;
                }
                let k = a - (r - 1);
                match rules.segre_symbol(k)? {
                    None => continue 'terms,
                    Some(fs) => {
                        if k % 2 == 1 {
                            coeff = -coeff;
                        }
                        smooth.extend(fs);
                    }
                }
            } else if b + z != r - 1 {
                // fiber degree deficit: the fiber integral vanishes
                continue 'terms;
            }
        }

        smooth.sort();
        out_terms.push(Term::new(
            coeff,
            smooth,
            CoordCycle::base(&base, term.cycle.base_zero.iter().copied()),
        ));
    }
    normalize(out_terms, &base)
}

/// The iterated bracket product of induced O(1) weights over the fiber
/// product, `ks` listed outermost first (the product `s_{k_t} ^ ... ^ s_{k_1}`
/// order), factor 1 applied first. Returns the current on Y before
/// pushforward, without the sign.
fn bracket_product_on_y(spec: &MetricSpec, rules: &SymbolRules, ks: &[usize]) -> Result<Current> {
    let t = ks.len();
    let ambient = spec.fiber_ambient(t);
    let mut cur = Current::one(&ambient);
    for j in 1..=t {
        let k = ks[t - j];
        let phi = induced_weight(spec, &ambient, j)?;
        let theta = theta_current(&ambient, j, &rules.theta_tag)?;
        for _ in 0..(k + spec.rank - 1) {
            cur = bracket_apply(&phi, &theta, &cur)?;
        }
    }
    Ok(cur)
}

/// `s_k(E,h,theta) = (-1)^k pi_* [dd^c phi]^{k+r-1}_theta`.
pub fn segre_current(k: usize, spec: &MetricSpec, rules: &SymbolRules) -> Result<Current> {
    if k == 0 {
        return Ok(Current::one(&Ambient::base(spec.base_dim())));
    }
    let on_y = bracket_product_on_y(spec, rules, &[k])?;
    let pushed = pushforward(&on_y, rules)?;
    Ok(if k % 2 == 1 { pushed.negate() } else { pushed })
}

/// Ordered Segre product `s_{k_t} ^ ... ^ s_{k_1}` (`ks` outermost first).
pub fn segre_product(ks: &[usize], spec: &MetricSpec, rules: &SymbolRules) -> Result<Current> {
    if ks.is_empty() || ks.iter().any(|&k| k == 0) {
        return Err(EngineError::BadSpec("Segre product needs positive indices".into()));
    }
    let on_y = bracket_product_on_y(spec, rules, ks)?;
    let pushed = pushforward(&on_y, rules)?;
    let total: usize = ks.iter().sum();
    Ok(if total % 2 == 1 { pushed.negate() } else { pushed })
}

/// All ordered compositions of `k` into positive parts.
pub fn compositions(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=k {
        for mut rest in compositions(k - first) {
            let mut c = vec![first];
            c.append(&mut rest);
            out.push(c);
        }
    }
    out
}

/// `c_k` from ordered Segre products over all compositions of `k`.
pub fn chern_current(k: usize, spec: &MetricSpec, rules: &SymbolRules) -> Result<Current> {
    let base = Ambient::base(spec.base_dim());
    if k == 0 {
        return Ok(Current::one(&base));
    }
    let mut acc = Current::zero(&base);
    for comp in compositions(k) {
        let piece = segre_product(&comp, spec, rules)?;
        acc = acc.add(&if comp.len() % 2 == 1 { piece.negate() } else { piece })?;
    }
    Ok(acc)
}

/// Report of the smooth-symbol inversion identities between the declared
/// Segre system and its Chern system.
#[derive(Debug, Clone)]
pub struct SegreCheckReport {
    pub segre: Vec<Current>,
    pub chern: Vec<Current>,
    pub failures: Vec<String>,
}

impl SegreCheckReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check the total Segre / total Chern inversion on the declared symbol
/// system: compute c_k over compositions of the declared s_k, verify
/// `sum_{i+j=k} s_i ^ c_j = 0` for `1 <= k <= max_k`, and recover the s_k
/// from the c_k by the same composition formula.
pub fn smooth_segre_check(
    base_dim: usize,
    rules: &SymbolRules,
    max_k: usize,
) -> Result<SegreCheckReport> {
    let base = Ambient::base(base_dim);
    let mut segre = Vec::with_capacity(max_k + 1);
    for k in 0..=max_k {
        segre.push(rules.segre_symbol_current(&base, k)?);
    }
    let mut chern = vec![Current::one(&base)];
    for k in 1..=max_k {
        let mut acc = Current::zero(&base);
        for comp in compositions(k) {
            let mut prod = Current::one(&base);
            for &p in &comp {
                prod = wedge(&prod, &segre[p])?;
            }
            acc = acc.add(&if comp.len() % 2 == 1 { prod.negate() } else { prod })?;
        }
        chern.push(acc);
    }

    let mut failures = Vec::new();
    for k in 1..=max_k {
        let mut conv = Current::zero(&base);
        for i in 0..=k {
            conv = conv.add(&wedge(&segre[i], &chern[k - i])?)?;
        }
        if !conv.is_zero() {
            failures.push(format!("total Segre times total Chern has nonzero degree-{} part", k));
        }
        // invert back: s_k from the c_k over compositions
        let mut back = Current::zero(&base);
        for comp in compositions(k) {
            let mut prod = Current::one(&base);
            for &p in &comp {
                prod = wedge(&prod, &chern[p])?;
            }
            back = back.add(&if comp.len() % 2 == 1 { prod.negate() } else { prod })?;
        }
        if back != segre[k] {
            failures.push(format!("Chern system does not invert back to s_{}", k));
        }
    }
    Ok(SegreCheckReport { segre, chern, failures })
}

/// Shape check of the decomposition of a singular Segre product against the
/// smooth reference value: the difference must be carried by cycles or sigma
/// factors, never by a free smooth term.
pub fn decomposition_shape_check(ks: &[usize], spec: &MetricSpec, rules: &SymbolRules) -> Result<bool> {
    let base = Ambient::base(spec.base_dim());
    let singular = segre_product(ks, spec, rules)?;
    let mut reference = Current::one(&base);
    for &k in ks {
        reference = wedge(&reference, &rules.segre_symbol_current(&base, k)?)?;
    }
    let diff = singular.add(&reference.negate())?;
    Ok(diff.terms.iter().all(|t| {
        !t.cycle.is_trivial()
            || t.smooth.iter().any(|f| matches!(f, SmoothFactor::Sigma { .. }))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::rat;

    fn conformal_norm_spec() -> MetricSpec {
        let base = Ambient::base(2);
        let w = Weight::new(
            base,
            vec![WeightAtom::NormLog { coords: [1, 2].into_iter().collect(), coeff: rat(1) }],
        )
        .unwrap();
        MetricSpec::new(2, MetricForm::ConformalDiagonal(w)).unwrap()
    }

    fn explicit_o1_spec() -> MetricSpec {
        // base coordinates (z, zeta1, zeta2); weight log|z|^2 + log|xi_2/xi_1|^2
        let amb = Ambient::with_fibers(3, 1, 2);
        let w = Weight::new(
            amb,
            vec![
                WeightAtom::MonomialLog { exponents: vec![1, 0, 0], coeff: rat(1) },
                WeightAtom::FiberSectionLog { factor: 1, coord: 2 },
            ],
        )
        .unwrap();
        MetricSpec::new(2, MetricForm::ExplicitO1Weight(w)).unwrap()
    }

    fn explicit_o1_rules() -> SymbolRules {
        let mut rules = SymbolRules::new("g");
        rules.declare_segre(1, SegreSymbol::Zero).unwrap();
        rules
            .declare_segre(
                2,
                SegreSymbol::Form(vec![
                    SmoothFactor::named("ddc_zeta_sq", 1),
                    SmoothFactor::named("ddc_zeta_sq", 1),
                ]),
            )
            .unwrap();
        rules.substitutions.push(Substitution::to_zero("g", [2]));
        rules
    }

    fn line_spec() -> MetricSpec {
        let base = Ambient::base(3);
        let w = Weight::new(
            base,
            vec![WeightAtom::MonomialLog { exponents: vec![1, 0, 0], coeff: rat(1) }],
        )
        .unwrap();
        MetricSpec::new(1, MetricForm::LineBundle(w)).unwrap()
    }

    #[test]
    fn induced_weight_of_conformal_spec() {
        let spec = conformal_norm_spec();
        let amb = spec.fiber_ambient(1);
        let phi = induced_weight(&spec, &amb, 1).unwrap();
        assert_eq!(phi.atoms.len(), 2);
        assert!(matches!(phi.atoms[1], WeightAtom::FiberFs { factor: 1 }));
    }

    #[test]
    fn degeneracy_loci() {
        let base = Ambient::base(2);
        assert_eq!(
            degeneracy_locus(&conformal_norm_spec()).unwrap(),
            DegeneracyLocus::Components(vec![CoordCycle::base(&base, [1, 2])])
        );
        assert_eq!(degeneracy_locus(&explicit_o1_spec()).unwrap(), DegeneracyLocus::WholeBase);
        let smooth = MetricSpec::new(
            2,
            MetricForm::ConformalDiagonal(Weight::new(Ambient::base(2), vec![]).unwrap()),
        )
        .unwrap();
        assert_eq!(
            degeneracy_locus(&smooth).unwrap(),
            DegeneracyLocus::Components(vec![])
        );
    }

    #[test]
    fn pushforward_of_fs_and_theta_against_a_cycle() {
        let amb = Ambient::with_fibers(2, 1, 2);
        let base = Ambient::base(2);
        let rules = SymbolRules::euclidean("g");
        let origin_up = CoordCycle::base(&amb, [1, 2]);
        let origin_down =
            Current::from_term(&base, Term::cycle_only(rat(1), CoordCycle::base(&base, [1, 2])))
                .unwrap();

        let fs_term = Current::from_term(
            &amb,
            Term::new(rat(1), vec![SmoothFactor::Fs { factor: 1 }], origin_up.clone()),
        )
        .unwrap();
        assert_eq!(pushforward(&fs_term, &rules).unwrap(), origin_down);

        let theta_term = Current::from_term(
            &amb,
            Term::new(rat(1), vec![SmoothFactor::theta(1, "g")], origin_up.clone()),
        )
        .unwrap();
        assert_eq!(pushforward(&theta_term, &rules).unwrap(), origin_down);

        // no fiber degree at all: the fiber integral vanishes
        let bare = Current::from_term(&amb, Term::cycle_only(rat(1), origin_up)).unwrap();
        assert!(pushforward(&bare, &rules).unwrap().is_zero());
    }

    #[test]
    fn pushforward_of_high_theta_power_uses_declared_symbol() {
        let amb = Ambient::with_fibers(3, 2, 2);
        let base = Ambient::base(3);
        let rules = explicit_o1_rules();
        let t = Current::from_term(
            &amb,
            Term::new(
                rat(1),
                vec![
                    SmoothFactor::theta(2, "g"),
                    SmoothFactor::theta(2, "g"),
                    SmoothFactor::theta(2, "g"),
                    SmoothFactor::theta(1, "g"),
                ],
                CoordCycle::base(&amb, [1]),
            ),
        )
        .unwrap();
        let expected = Current::from_term(
            &base,
            Term::new(
                rat(1),
                vec![
                    SmoothFactor::named("ddc_zeta_sq", 1),
                    SmoothFactor::named("ddc_zeta_sq", 1),
                ],
                CoordCycle::base(&base, [1]),
            ),
        )
        .unwrap();
        assert_eq!(pushforward(&t, &rules).unwrap(), expected);
    }

    #[test]
    fn mixed_content_without_substitution_errors() {
        let amb = Ambient::with_fibers(3, 1, 2);
        let rules = SymbolRules::euclidean("g");
        let t = Current::from_term(
            &amb,
            Term::new(
                rat(1),
                vec![SmoothFactor::theta(1, "g")],
                CoordCycle::fiber(&amb, 1, [2]),
            ),
        )
        .unwrap();
        assert!(matches!(
            pushforward(&t, &rules),
            Err(EngineError::UnsupportedPushforward(_))
        ));
        // with the declared substitution it is zero instead
        assert!(pushforward(&t, &explicit_o1_rules()).unwrap().is_zero());
    }

    #[test]
    fn undeclared_symbol_errors() {
        let amb = Ambient::with_fibers(2, 1, 2);
        let rules = SymbolRules::new("g");
        let t = Current::from_term(
            &amb,
            Term::new(
                rat(1),
                vec![SmoothFactor::theta(1, "g"), SmoothFactor::theta(1, "g")],
                CoordCycle::trivial(&amb),
            ),
        )
        .unwrap();
        assert!(matches!(
            pushforward(&t, &rules),
            Err(EngineError::UndeclaredSegreSymbol(1))
        ));
    }

    #[test]
    fn conformal_spec_segre_currents() {
        let spec = conformal_norm_spec();
        let rules = SymbolRules::euclidean("g");
        let base = Ambient::base(2);
        let origin = CoordCycle::base(&base, [1, 2]);

        let s1 = segre_current(1, &spec, &rules).unwrap();
        let expected_s1 = Current::from_term(
            &base,
            Term::new(rat(-2), vec![SmoothFactor::sigma([1, 2])], CoordCycle::trivial(&base)),
        )
        .unwrap();
        assert_eq!(s1, expected_s1);

        let s2 = segre_current(2, &spec, &rules).unwrap();
        assert_eq!(
            s2,
            Current::from_term(&base, Term::cycle_only(rat(3), origin.clone())).unwrap()
        );

        let c1 = chern_current(1, &spec, &rules).unwrap();
        assert_eq!(c1, expected_s1.negate());

        let c2 = chern_current(2, &spec, &rules).unwrap();
        assert_eq!(c2, Current::from_term(&base, Term::cycle_only(rat(1), origin)).unwrap());
    }

    #[test]
    fn conformal_spec_double_product() {
        let spec = conformal_norm_spec();
        let rules = SymbolRules::euclidean("g");
        let base = Ambient::base(2);
        let got = segre_product(&[1, 1], &spec, &rules).unwrap();
        assert_eq!(
            got,
            Current::from_term(&base, Term::cycle_only(rat(4), CoordCycle::base(&base, [1, 2])))
                .unwrap()
        );
    }

    #[test]
    fn explicit_o1_spec_products_do_not_commute() {
        let spec = explicit_o1_spec();
        let rules = explicit_o1_rules();
        let base = Ambient::base(3);

        // s_1 ^ s_2
        let a = segre_product(&[1, 2], &spec, &rules).unwrap();
        assert!(a.is_zero());

        // s_2 ^ s_1
        let b = segre_product(&[2, 1], &spec, &rules).unwrap();
        let expected = Current::from_term(
            &base,
            Term::new(
                rat(-1),
                vec![
                    SmoothFactor::named("ddc_zeta_sq", 1),
                    SmoothFactor::named("ddc_zeta_sq", 1),
                ],
                CoordCycle::base(&base, [1]),
            ),
        )
        .unwrap();
        assert_eq!(b, expected);
    }

    #[test]
    fn line_bundle_brackets_descend_unchanged() {
        let spec = line_spec();
        let rules = SymbolRules::euclidean("g");
        let base = Ambient::base(3);
        let s1 = segre_current(1, &spec, &rules).unwrap();
        assert_eq!(
            s1,
            Current::from_term(&base, Term::cycle_only(rat(-1), CoordCycle::base(&base, [1])))
                .unwrap()
        );
        let s2 = segre_current(2, &spec, &rules).unwrap();
        let expected = Current::from_term(
            &base,
            Term::new(
                rat(1),
                vec![SmoothFactor::named("theta{g}", 1)],
                CoordCycle::base(&base, [1]),
            ),
        )
        .unwrap();
        assert_eq!(s2, expected);
    }

    #[test]
    fn composition_enumeration() {
        assert_eq!(compositions(1), vec![vec![1]]);
        assert_eq!(compositions(3).len(), 4);
        assert_eq!(compositions(5).len(), 16);
    }

    #[test]
    fn symbol_inversion_identities() {
        // flat reference: everything vanishes
        let report = smooth_segre_check(2, &SymbolRules::euclidean("g"), 3).unwrap();
        assert!(report.ok());
        for k in 1..=3 {
            assert!(report.segre[k].is_zero());
            assert!(report.chern[k].is_zero());
        }

        // declared s_1 = 0, s_2 = (ddc_zeta_sq)^2, s_3 = 0
        let mut rules = explicit_o1_rules();
        rules.declare_segre(3, SegreSymbol::Zero).unwrap();
        let report = smooth_segre_check(3, &rules, 3).unwrap();
        assert!(report.ok());
        let base = Ambient::base(3);
        let sq = Current::from_term(
            &base,
            Term::new(
                rat(1),
                vec![
                    SmoothFactor::named("ddc_zeta_sq", 1),
                    SmoothFactor::named("ddc_zeta_sq", 1),
                ],
                CoordCycle::trivial(&base),
            ),
        )
        .unwrap();
        assert!(report.chern[1].is_zero());
        assert_eq!(report.chern[2], sq.negate());
        assert_eq!(report.segre[2], sq);
    }

    #[test]
    fn shape_of_singular_minus_smooth_difference() {
        let rules = SymbolRules::euclidean("g");
        assert!(decomposition_shape_check(&[1], &conformal_norm_spec(), &rules).unwrap());
        assert!(decomposition_shape_check(&[2], &conformal_norm_spec(), &rules).unwrap());
        assert!(decomposition_shape_check(&[2, 1], &explicit_o1_spec(), &explicit_o1_rules()).unwrap());
    }
}
