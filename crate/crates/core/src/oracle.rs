//! Numerical regularization cross-checks at desk scale. Model weights are
//! smoothed as `u_eps = sum c log(|F|^2 + eps^2)`, Monge-Ampere densities come
//! from finite-difference complex Hessians, and masses/Lelong densities are
//! compared against the symbolic engine's exact values.
//!
//! Conventions: `dd^c = (i/2pi) d d-bar`, so the mass of `dd^c log|z|^2` over
//! any disc containing 0 is exactly 1. Degrees below the top are completed by
//! `dd^c |z|^2` factors (identity Hessians), which makes the Lelong estimator
//! `mass(ball rho) / rho^{2(n-k)}` exact on coordinate cycles.
//!
//! Quadrature: all model weights are invariant under independent rotation of
//! each coordinate, and so are the mixed Hessian densities; integration
//! therefore reduces to the radii, with weight `prod 2 pi r_i`. Each radial
//! axis uses a dyadic sequence of intervals refined down past the smallest
//! regularization scale, with a fixed-count midpoint rule per interval, so the
//! eps-scale concentration of the density is always resolved. Deterministic:
//! fixed evaluation order, compensated summation.

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::ambient::BasePoint;
use crate::current::{Current, SmoothFactor};
use crate::error::{EngineError, Result};
use crate::weight::{Weight, WeightAtom};

/// A base weight admissible for numerics: monomial/norm log atoms and smooth
/// summands on C^1 or C^2. Smooth atoms evaluate as `|z|^2`, the model
/// representative of a bounded smooth summand with positive curvature.
#[derive(Debug, Clone)]
pub struct NumericWeight {
    pub base_dim: usize,
    pub atoms: Vec<WeightAtom>,
}

impl NumericWeight {
    pub fn new(base_dim: usize, atoms: Vec<WeightAtom>) -> Result<Self> {
        if base_dim == 0 || base_dim > 2 {
            return Err(EngineError::UnsupportedNumeric(
                "numerics are implemented for base dimension 1 and 2 only".into(),
            ));
        }
        for a in &atoms {
            match a {
                WeightAtom::MonomialLog { exponents, .. } => {
                    if exponents.len() != base_dim {
                        return Err(EngineError::UnsupportedNumeric(
                            "exponent vector length mismatch".into(),
                        ));
                    }
                }
                WeightAtom::NormLog { coords, .. } => {
                    if coords.iter().any(|&i| i == 0 || i > base_dim) {
                        return Err(EngineError::UnsupportedNumeric(
                            "norm log coordinate out of range".into(),
                        ));
                    }
                }
                WeightAtom::Smooth { .. } => {}
                _ => {
                    return Err(EngineError::UnsupportedNumeric(
                        "fiber atoms have no numeric model".into(),
                    ));
                }
            }
        }
        Ok(NumericWeight { base_dim, atoms })
    }

    pub fn from_weight(w: &Weight) -> Result<Self> {
        NumericWeight::new(w.ambient.base_dim, w.atoms.clone())
    }

    /// `u_eps(z)`: each singular atom regularized by its own `+ eps^2`.
    pub fn eval(&self, z: &[Complex64], eps: f64) -> f64 {
        let mut total = 0.0;
        for a in &self.atoms {
            match a {
                WeightAtom::MonomialLog { exponents, coeff } => {
                    let mut prod = 1.0;
                    for (i, &e) in exponents.iter().enumerate() {
                        for _ in 0..e {
                            prod *= z[i].norm_sqr();
                        }
                    }
                    total += coeff.to_f64().unwrap() * (prod + eps * eps).ln();
                }
                WeightAtom::NormLog { coords, coeff } => {
                    let s: f64 = coords.iter().map(|&i| z[i - 1].norm_sqr()).sum();
                    total += coeff.to_f64().unwrap() * (s + eps * eps).ln();
                }
                WeightAtom::Smooth { .. } => {
                    total += z.iter().map(|w| w.norm_sqr()).sum::<f64>();
                }
                _ => unreachable!("rejected at construction"),
            }
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct RegularizedWeight {
    pub weight: NumericWeight,
    pub epsilon: f64,
}

impl RegularizedWeight {
    pub fn new(weight: NumericWeight, epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(EngineError::UnsupportedNumeric("epsilon must be positive".into()));
        }
        Ok(RegularizedWeight { weight, epsilon })
    }
}

/// Region shape. Lelong estimates must use Euclidean balls: densities with
/// spread curvature (sigma factors) have shape-dependent masses, and the
/// density normalization is a ball statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionShape {
    Polydisc,
    Ball,
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    /// Polydisc radius per coordinate (all equal for a ball).
    pub radii: Vec<f64>,
    pub shape: RegionShape,
    /// Midpoint samples per dyadic radial interval.
    pub points_per_level: usize,
    /// Hard cap on the number of sample tuples.
    pub max_points: usize,
}

impl QuadratureGrid {
    pub fn polydisc(radii: &[f64], points_per_level: usize) -> Self {
        QuadratureGrid {
            radii: radii.to_vec(),
            shape: RegionShape::Polydisc,
            points_per_level,
            max_points: 4_000_000,
        }
    }

    pub fn ball(n: usize, radius: f64, points_per_level: usize) -> Self {
        QuadratureGrid {
            radii: vec![radius; n],
            shape: RegionShape::Ball,
            points_per_level,
            max_points: 4_000_000,
        }
    }

    pub fn describe(&self) -> String {
        let radii: Vec<String> = self.radii.iter().map(|r| format!("{}", r)).collect();
        let shape = match self.shape {
            RegionShape::Polydisc => "polydisc",
            RegionShape::Ball => "ball",
        };
        format!("{}[{}]x{}", shape, radii.join(","), self.points_per_level)
    }
}

/// Midpoint samples `(r, weight)` on `[0, radius]`, dyadically refined until
/// interval lengths fall below `finest`.
fn radial_points(radius: f64, finest: f64, p: usize) -> Vec<(f64, f64)> {
    let mut cuts = vec![radius];
    let mut r = radius;
    while r > finest {
        r /= 2.0;
        cuts.push(r);
    }
    let mut pts = Vec::new();
    let mut lo = 0.0;
    for &hi in cuts.iter().rev() {
        let h = (hi - lo) / p as f64;
        for i in 0..p {
            pts.push((lo + (i as f64 + 0.5) * h, h));
        }
        lo = hi;
    }
    pts
}

type Hessian = [[Complex64; 2]; 2];

const IDENTITY_H: Hessian = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

/// Finite-difference complex Hessian `d^2 u / dz_j dz-bar_k` at `z`, via
/// central differences on the underlying real coordinates, together with an
/// absolute roundoff-noise bound per entry. The real Hessian stencil is
/// symmetric by construction, so the complex matrix is hermitian up to
/// floating-point evaluation error.
pub fn complex_hessian(w: &NumericWeight, eps: f64, z: &[Complex64]) -> Result<(Hessian, f64)> {
    let n = w.base_dim;
    let d = 2 * n;
    // real coordinate step per complex coordinate, scale-adaptive
    // floor keeps roundoff harmless in directions the weight is flat in
    let mut step = [0.0f64; 2];
    for j in 0..n {
        step[j] = (3e-4 * (z[j].norm() + eps)).max(3e-5);
    }
    let shift = |z: &[Complex64], idx: usize, delta: f64| -> Vec<Complex64> {
        let mut out = z.to_vec();
        let (j, imag) = (idx / 2, idx % 2 == 1);
        if imag {
            out[j] += Complex64::new(0.0, delta);
        } else {
            out[j] += Complex64::new(delta, 0.0);
        }
        out
    };
    let f0 = w.eval(z, eps);
    let mut hr = [[0.0f64; 4]; 4];
    for a in 0..d {
        let ha = step[a / 2];
        let fp = w.eval(&shift(z, a, ha), eps);
        let fm = w.eval(&shift(z, a, -ha), eps);
        hr[a][a] = (fp - 2.0 * f0 + fm) / (ha * ha);
        for b in (a + 1)..d {
            let hb = step[b / 2];
            let pp = w.eval(&shift(&shift(z, a, ha), b, hb), eps);
            let pm = w.eval(&shift(&shift(z, a, ha), b, -hb), eps);
            let mp = w.eval(&shift(&shift(z, a, -ha), b, hb), eps);
            let mm = w.eval(&shift(&shift(z, a, -ha), b, -hb), eps);
            let v = (pp - pm - mp + mm) / (4.0 * ha * hb);
            hr[a][b] = v;
            hr[b][a] = v;
        }
    }
    let mut h = IDENTITY_H;
    for j in 0..n {
        for k in 0..n {
            let re = 0.25 * (hr[2 * j][2 * k] + hr[2 * j + 1][2 * k + 1]);
            let im = 0.25 * (hr[2 * j][2 * k + 1] - hr[2 * j + 1][2 * k]);
            h[j][k] = Complex64::new(re, im);
        }
    }
    for j in 0..n {
        for k in 0..n {
            if !h[j][k].re.is_finite() || !h[j][k].im.is_finite() {
                return Err(EngineError::NonHermitianHessian(format!(
                    "non-finite Hessian entry at radius ({:.3e}, {:.3e})",
                    z[0].norm(),
                    z.get(1).map(|w| w.norm()).unwrap_or(0.0)
                )));
            }
        }
    }
    // roundoff bound for the stencil: a few ulps of |u| divided by the
    // smallest squared step
    let h_min = step[..n].iter().cloned().fold(f64::INFINITY, f64::min);
    let noise = 16.0 * (f0.abs() + 1.0) * f64::EPSILON / (h_min * h_min);
    Ok((h, noise))
}

/// Density of the mixed product of `n` (1,1)-forms with the given Hessians,
/// with respect to Lebesgue measure.
fn mixed_density(hs: &[Hessian], n: usize) -> f64 {
    match n {
        1 => hs[0][0][0].re / std::f64::consts::PI,
        2 => {
            let a = &hs[0];
            let b = &hs[1];
            let s = a[0][0].re * b[1][1].re + a[1][1].re * b[0][0].re
                - 2.0 * (a[0][1] * b[0][1].conj()).re;
            s / (std::f64::consts::PI * std::f64::consts::PI)
        }
        _ => unreachable!(),
    }
}

/// Mass of `dd^c u_1 ^ ... ^ dd^c u_k` (each factor with its own epsilon)
/// over the polydisc of the grid, completed by `dd^c|z|^2` factors below the
/// top degree. Factors are listed innermost regularization first when the
/// epsilons are nested.
pub fn numeric_mixed_mass(factors: &[RegularizedWeight], grid: &QuadratureGrid) -> Result<f64> {
    if factors.is_empty() {
        return Err(EngineError::UnsupportedNumeric("no factors".into()));
    }
    let n = factors[0].weight.base_dim;
    let k = factors.len();
    if k > n || factors.iter().any(|f| f.weight.base_dim != n) {
        return Err(EngineError::UnsupportedNumeric(
            "need k <= n factors on a common base".into(),
        ));
    }
    if grid.radii.len() != n {
        return Err(EngineError::UnsupportedNumeric("grid arity mismatch".into()));
    }
    if grid.shape == RegionShape::Ball && grid.radii.windows(2).any(|p| p[0] != p[1]) {
        return Err(EngineError::UnsupportedNumeric("ball region needs equal radii".into()));
    }
    let finest = factors.iter().map(|f| f.epsilon).fold(f64::INFINITY, f64::min) / 4.0;
    let p = grid.points_per_level;
    let outer = radial_points(grid.radii[0], finest, p);
    // upper bound on the tuple count (the ball trims the inner axis)
    let tuples = if n == 1 {
        outer.len()
    } else {
        outer.len() * radial_points(grid.radii[1], finest, p).len()
    };
    if tuples > grid.max_points {
        return Err(EngineError::BudgetExceeded(tuples, grid.max_points));
    }

    let tau = 2.0 * std::f64::consts::PI;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64; // Kahan correction
    let mut add = |v: f64| {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };

    let mut eval_point = |z: &[Complex64], vol: f64| -> Result<()> {
        let mut hs: Vec<Hessian> = Vec::with_capacity(n);
        let mut exact_prod = 1.0f64;
        let mut noisy_prod = 1.0f64;
        for f in factors {
            let (h, noise) = complex_hessian(&f.weight, f.epsilon, z)?;
            let hmax = h
                .iter()
                .flatten()
                .map(|c| c.norm())
                .fold(0.0f64, f64::max);
            exact_prod *= 1.0 + hmax;
            noisy_prod *= 1.0 + hmax + noise;
            hs.push(h);
        }
        for _ in k..n {
            hs.push(IDENTITY_H);
        }
        let d = mixed_density(&hs, n);
        // tolerance: relative to the Hessian magnitudes, plus the propagated
        // finite-difference roundoff of each factor against the others'
        // magnitudes (cross terms of a factor that is flat in some direction
        // can otherwise look spuriously negative)
        let tol = 1e-4 + 1e-6 * exact_prod + 4.0 * (noisy_prod - exact_prod);
        if !d.is_finite() || d < -tol {
            return Err(EngineError::NonHermitianHessian(format!(
                "density {:.3e} fails the positivity sanity bound",
                d
            )));
        }
        add(d * vol);
        Ok(())
    };

    match n {
        1 => {
            for &(r1, w1) in &outer {
                eval_point(&[Complex64::new(r1, 0.0)], tau * r1 * w1)?;
            }
        }
        2 => {
            let inner_full = radial_points(grid.radii[1], finest, p);
            for &(r1, w1) in &outer {
                // for a ball, the inner axis is clipped to the slice radius
                let clipped;
                let inner = match grid.shape {
                    RegionShape::Polydisc => &inner_full,
                    RegionShape::Ball => {
                        let r = (grid.radii[0] * grid.radii[0] - r1 * r1).max(0.0).sqrt();
                        clipped = radial_points(r, finest, p);
                        &clipped
                    }
                };
                for &(r2, w2) in inner {
                    eval_point(
                        &[Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)],
                        (tau * r1 * w1) * (tau * r2 * w2),
                    )?;
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(sum)
}

/// k-fold Monge-Ampere mass of one regularized weight.
pub fn numeric_ma_mass(u: &RegularizedWeight, k: usize, grid: &QuadratureGrid) -> Result<f64> {
    let factors: Vec<RegularizedWeight> = (0..k).map(|_| u.clone()).collect();
    numeric_mixed_mass(&factors, grid)
}

#[derive(Debug, Clone)]
pub struct LelongEstimate {
    pub value: f64,
    pub error_estimate: f64,
    /// The per-radius density ratios, largest radius first.
    pub samples: Vec<f64>,
}

/// Density-ratio Lelong estimator at the origin: `mass(ball rho) /
/// rho^{2(n-k)}` over a decreasing radius list, with the regularization tied
/// to the radius as `eps = rho^2/16`. The quadratic tie keeps the regularized
/// set `{|F| <= eps}` inside the ball even for degree-two monomials, whose
/// tube width in one coordinate is `eps` divided by the other radius.
pub fn numeric_lelong(
    w: &NumericWeight,
    k: usize,
    rhos: &[f64],
    points_per_level: usize,
) -> Result<LelongEstimate> {
    if rhos.len() < 2 || rhos.windows(2).any(|p| p[1] >= p[0]) {
        return Err(EngineError::UnsupportedNumeric(
            "need a strictly decreasing radius list".into(),
        ));
    }
    let n = w.base_dim;
    let mut samples = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let eps = rho * rho / 16.0;
        let u = RegularizedWeight::new(w.clone(), eps)?;
        let grid = QuadratureGrid::ball(n, rho, points_per_level);
        let mass = numeric_ma_mass(&u, k, &grid)?;
        samples.push(mass / rho.powi(2 * (n as i32 - k as i32)));
    }
    let m = samples.len();
    let last = samples[m - 1];
    let d_last = (samples[m - 1] - samples[m - 2]).abs();
    if m >= 3 {
        let d_prev = (samples[m - 2] - samples[m - 3]).abs();
        if d_last > d_prev + 0.05 * (1.0 + last.abs()) {
            return Err(EngineError::NoConvergence(format!(
                "ratio increments grow: {:.3e} after {:.3e}",
                d_last, d_prev
            )));
        }
    }
    Ok(LelongEstimate { value: last, error_estimate: d_last + 1e-3, samples })
}

// ---------------------------------------------------------------------------
// Comparison rows and CSV output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub quantity: String,
    pub epsilon: f64,
    pub grid: String,
    pub value: f64,
    pub error_estimate: f64,
    pub symbolic_value: f64,
    pub pass: bool,
}

pub const CSV_HEADER: &str = "quantity,epsilon,grid,value,error_estimate,symbolic_value,pass";

impl OracleRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{:.6e},{},{:.8},{:.8},{:.8},{}",
            self.quantity,
            self.epsilon,
            self.grid,
            self.value,
            self.error_estimate,
            self.symbolic_value,
            self.pass
        )
    }
}

pub fn rows_to_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    for r in rows {
        out.push('\n');
        out.push_str(&r.csv());
    }
    out.push('\n');
    out
}

fn mass_row(
    quantity: &str,
    u: &RegularizedWeight,
    k: usize,
    radius: f64,
    p: usize,
    symbolic: f64,
    tol: f64,
) -> Result<OracleRow> {
    let n = u.weight.base_dim;
    let grid = QuadratureGrid::polydisc(&vec![radius; n], p);
    let value = numeric_ma_mass(u, k, &grid)?;
    let coarse = numeric_ma_mass(u, k, &QuadratureGrid::polydisc(&vec![radius; n], p / 2))?;
    let err = (value - coarse).abs();
    Ok(OracleRow {
        quantity: quantity.to_string(),
        epsilon: u.epsilon,
        grid: grid.describe(),
        value,
        error_estimate: err,
        symbolic_value: symbolic,
        pass: (value - symbolic).abs() <= tol,
    })
}

fn ordered_mass_row(
    quantity: &str,
    factors: &[RegularizedWeight],
    radius: f64,
    p: usize,
    symbolic: f64,
    tol: f64,
) -> Result<OracleRow> {
    let n = factors[0].weight.base_dim;
    let grid = QuadratureGrid::polydisc(&vec![radius; n], p);
    let value = numeric_mixed_mass(factors, &grid)?;
    let coarse =
        numeric_mixed_mass(factors, &QuadratureGrid::polydisc(&vec![radius; n], p / 2))?;
    Ok(OracleRow {
        quantity: quantity.to_string(),
        epsilon: factors.iter().map(|f| f.epsilon).fold(f64::INFINITY, f64::min),
        grid: grid.describe(),
        value,
        error_estimate: (value - coarse).abs(),
        symbolic_value: symbolic,
        pass: (value - symbolic).abs() <= tol,
    })
}

fn lelong_row(
    quantity: &str,
    w: &NumericWeight,
    k: usize,
    rhos: &[f64],
    p: usize,
    symbolic: f64,
    tol: f64,
) -> Result<OracleRow> {
    let est = numeric_lelong(w, k, rhos, p)?;
    Ok(OracleRow {
        quantity: quantity.to_string(),
        epsilon: {
            let r = rhos[rhos.len() - 1];
            r * r / 16.0
        },
        grid: format!("rho[{}]x{}", rhos.len(), p),
        value: est.value,
        error_estimate: est.error_estimate,
        symbolic_value: symbolic,
        pass: (est.value - symbolic).abs() <= tol,
    })
}

fn mono(n: usize, exps: &[u32]) -> NumericWeight {
    use num_rational::BigRational;
    NumericWeight::new(
        n,
        vec![WeightAtom::MonomialLog {
            exponents: exps.to_vec(),
            coeff: BigRational::from_integer(1.into()),
        }],
    )
    .unwrap()
}

fn norm2() -> NumericWeight {
    use num_rational::BigRational;
    NumericWeight::new(
        2,
        vec![WeightAtom::NormLog {
            coords: [1, 2].into_iter().collect(),
            coeff: BigRational::from_integer(1.into()),
        }],
    )
    .unwrap()
}

/// The named desk-scale checks exposed to scenarios. Each name resolves to a
/// fixed, documented comparison; `tolerance` overrides the pinned default
/// when positive.
pub fn standard_check(name: &str, tolerance: Option<f64>) -> Result<Vec<OracleRow>> {
    let tol = |d: f64| tolerance.unwrap_or(d);
    let rhos = [0.4, 0.2, 0.1];
    match name {
        // mass of dd^c log(|z|^2 + eps^2) over the unit disc
        "pl_mass_c1" => {
            let u = RegularizedWeight::new(mono(1, &[1]), 1e-3)?;
            Ok(vec![mass_row("pl_mass_c1", &u, 1, 1.0, 32, 1.0, tol(0.02))?])
        }
        // King mass: (dd^c log(|z1|^2+|z2|^2+eps^2))^2 over the unit polydisc
        "king_mass_c2" => {
            let u = RegularizedWeight::new(norm2(), 1e-3)?;
            Ok(vec![mass_row("king_mass_c2", &u, 2, 1.0, 24, 1.0, tol(0.05))?])
        }
        // smooth quadratic weight: constant density 1/pi over the unit disc
        "smooth_mass_c1" => {
            let w = NumericWeight::new(
                1,
                vec![WeightAtom::Smooth { name: "quad".into() }],
            )?;
            let u = RegularizedWeight::new(w, 1e-3)?;
            Ok(vec![mass_row("smooth_mass_c1", &u, 1, 1.0, 32, 1.0, tol(0.02))?])
        }
        // multiplicity of [z1=0] on C^2 at the origin
        "lelong_mult1" => Ok(vec![lelong_row(
            "lelong_mult1",
            &mono(2, &[1, 0]),
            1,
            &rhos,
            16,
            1.0,
            tol(0.1),
        )?]),
        // multiplicity of [z1=0]+[z2=0] on C^2 at the origin
        "lelong_mult2" => Ok(vec![lelong_row(
            "lelong_mult2",
            &mono(2, &[1, 1]),
            1,
            &rhos,
            16,
            2.0,
            tol(0.2),
        )?]),
        // density constant 1 of sigma = dd^c log|x|^2 at the origin
        "sigma_density_c2" => Ok(vec![lelong_row(
            "sigma_density_c2",
            &norm2(),
            1,
            &rhos,
            16,
            1.0,
            tol(0.1),
        )?]),
        // density constant 1 of the point mass (dd^c log|x|^2)^2
        "point_density_c2" => Ok(vec![lelong_row(
            "point_density_c2",
            &norm2(),
            2,
            &rhos,
            16,
            1.0,
            tol(0.1),
        )?]),
        // smooth weight has vanishing Lelong number
        "lelong_smooth" => {
            let w = NumericWeight::new(
                2,
                vec![WeightAtom::Smooth { name: "quad".into() }],
            )?;
            Ok(vec![lelong_row("lelong_smooth", &w, 1, &rhos, 16, 0.0, tol(0.05))?])
        }
        // ordered product dd^c u_2 ^ dd^c u_1 with u_1 = log|z1|^2 innermost:
        // the nested regularized mass reproduces the symbolic value 0
        "order_inner_first_zero" => {
            let inner = RegularizedWeight::new(mono(2, &[1, 0]), 1e-4)?;
            let outer = RegularizedWeight::new(mono(2, &[1, 1]), 1e-2)?;
            Ok(vec![ordered_mass_row(
                "order_inner_first_zero",
                &[inner, outer],
                1.0,
                12,
                0.0,
                tol(0.05),
            )?])
        }
        // swapped order: u_2 = log|z1 z2|^2 innermost, symbolic value [0]
        "order_swapped_origin" => {
            let inner = RegularizedWeight::new(mono(2, &[1, 1]), 1e-4)?;
            let outer = RegularizedWeight::new(mono(2, &[1, 0]), 1e-2)?;
            Ok(vec![ordered_mass_row(
                "order_swapped_origin",
                &[inner, outer],
                1.0,
                12,
                1.0,
                tol(0.05),
            )?])
        }
        // separated variables: both orders give the unit point mass
        "separated_orders" => {
            let u1 = mono(2, &[1, 0]);
            let u2 = mono(2, &[0, 1]);
            let ab = [
                RegularizedWeight::new(u1.clone(), 1e-4)?,
                RegularizedWeight::new(u2.clone(), 1e-2)?,
            ];
            let ba = [
                RegularizedWeight::new(u2, 1e-4)?,
                RegularizedWeight::new(u1, 1e-2)?,
            ];
            Ok(vec![
                ordered_mass_row("separated_order_ab", &ab, 1.0, 12, 1.0, tol(0.05))?,
                ordered_mass_row("separated_order_ba", &ba, 1.0, 12, 1.0, tol(0.05))?,
            ])
        }
        other => Err(EngineError::UnsupportedNumeric(format!(
            "unknown oracle check '{}'",
            other
        ))),
    }
}

/// Cross-check the Lelong evaluation of a symbolic base current at the origin
/// against per-term numeric density estimates: each coordinate-cycle or sigma
/// term is rebuilt from its model regularization and its density constant
/// measured. The symbolic answer must consist of delta-type and sigma-type
/// terms on C^1 or C^2.
pub fn compare_to_symbolic(t: &Current, p: &BasePoint, tolerance: f64) -> Result<Vec<OracleRow>> {
    let n = t.ambient.base_dim;
    if t.ambient.fiber_count != 0 || n > 2 {
        return Err(EngineError::UnsupportedNumeric(
            "symbolic comparison needs a base current on C^1 or C^2".into(),
        ));
    }
    if p.zero.iter().any(|z| !z) {
        return Err(EngineError::UnsupportedNumeric(
            "numeric Lelong estimates are taken at the origin".into(),
        ));
    }
    let names = crate::ambient::CoordNames::default_for(n);
    let rhos = [0.4, 0.2, 0.1];
    let mut rows = Vec::new();
    for term in &t.terms {
        let coeff = term.coeff.to_f64().ok_or_else(|| {
            EngineError::UnsupportedNumeric("coefficient out of float range".into())
        })?;
        let mut sigma_power = 0usize;
        let mut sigma_coords = None;
        for f in &term.smooth {
            match f {
                SmoothFactor::Sigma { coords } => {
                    sigma_power += 1;
                    sigma_coords = Some(coords.clone());
                }
                _ => {
                    return Err(EngineError::UnsupportedNumeric(
                        "only delta-type and sigma-type terms have numeric models".into(),
                    ));
                }
            }
        }
        let label = crate::current::Current {
            ambient: t.ambient.clone(),
            terms: vec![term.clone()],
        }
        .render(&names);
        let (w, k) = match (sigma_coords, term.cycle.base_zero.len()) {
            (None, 1) => {
                // coordinate divisor: regularized log of the coordinate
                let mut exps = vec![0u32; n];
                let i = *term.cycle.base_zero.iter().next().unwrap();
                exps[i - 1] = 1;
                (mono(n, &exps), 1)
            }
            (None, q) if q >= 2 => {
                // higher-codimension cycle: saturated norm-log power (King)
                let w = NumericWeight::new(
                    n,
                    vec![WeightAtom::NormLog {
                        coords: term.cycle.base_zero.clone(),
                        coeff: num_rational::BigRational::from_integer(1.into()),
                    }],
                )?;
                (w, q)
            }
            (Some(coords), 0) => {
                // sigma powers below saturation
                let w = NumericWeight::new(
                    n,
                    vec![WeightAtom::NormLog {
                        coords,
                        coeff: num_rational::BigRational::from_integer(1.into()),
                    }],
                )?;
                (w, sigma_power)
            }
            _ => {
                return Err(EngineError::UnsupportedNumeric(
                    "no numeric model for mixed sigma/cycle terms".into(),
                ));
            }
        };
        let mut row = lelong_row(&label, &w, k, &rhos, 16, 1.0, tolerance)?;
        // scale the measured unit density by the exact coefficient
        row.value *= coeff;
        row.error_estimate *= coeff.abs();
        row.symbolic_value = coeff;
        row.pass = (row.value - row.symbolic_value).abs() <= tolerance;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{Ambient, CoordCycle};
    use crate::current::{rat, Term};

    #[test]
    fn poincare_lelong_mass_on_the_disc() {
        let u = RegularizedWeight::new(mono(1, &[1]), 1e-3).unwrap();
        let grid = QuadratureGrid::polydisc(&[1.0], 32);
        let m = numeric_ma_mass(&u, 1, &grid).unwrap();
        assert!((m - 1.0).abs() < 0.02, "mass {}", m);
    }

    #[test]
    fn king_mass_on_the_polydisc() {
        let u = RegularizedWeight::new(norm2(), 1e-3).unwrap();
        let grid = QuadratureGrid::polydisc(&[1.0, 1.0], 24);
        let m = numeric_ma_mass(&u, 2, &grid).unwrap();
        assert!((m - 1.0).abs() < 0.05, "mass {}", m);
    }

    #[test]
    fn smooth_quadratic_mass() {
        let w = NumericWeight::new(1, vec![WeightAtom::Smooth { name: "q".into() }]).unwrap();
        let u = RegularizedWeight::new(w, 1e-3).unwrap();
        let grid = QuadratureGrid::polydisc(&[1.0], 32);
        let m = numeric_ma_mass(&u, 1, &grid).unwrap();
        assert!((m - 1.0).abs() < 0.02, "mass {}", m);
    }

    #[test]
    fn mass_monotone_as_epsilon_decreases() {
        let grid = QuadratureGrid::polydisc(&[1.0], 24);
        let mut prev = -1.0;
        for eps in [8e-2, 4e-2, 2e-2, 1e-2] {
            let u = RegularizedWeight::new(mono(1, &[1]), eps).unwrap();
            let m = numeric_ma_mass(&u, 1, &grid).unwrap();
            assert!(m > prev - 0.02, "mass not monotone: {} after {}", m, prev);
            prev = m;
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        let u = RegularizedWeight::new(norm2(), 1e-3).unwrap();
        let coarse = numeric_ma_mass(&u, 2, &QuadratureGrid::polydisc(&[1.0, 1.0], 12)).unwrap();
        let fine = numeric_ma_mass(&u, 2, &QuadratureGrid::polydisc(&[1.0, 1.0], 24)).unwrap();
        assert!((coarse - fine).abs() < 0.02, "{} vs {}", coarse, fine);
    }

    #[test]
    fn lelong_multiplicities() {
        let est = numeric_lelong(&mono(2, &[1, 0]), 1, &[0.4, 0.2, 0.1], 16).unwrap();
        assert!((est.value - 1.0).abs() < 0.1, "mult 1: {}", est.value);
        let est = numeric_lelong(&mono(2, &[1, 1]), 1, &[0.4, 0.2, 0.1], 16).unwrap();
        assert!((est.value - 2.0).abs() < 0.2, "mult 2: {}", est.value);
    }

    #[test]
    fn sigma_density_constant_is_one() {
        let est = numeric_lelong(&norm2(), 1, &[0.4, 0.2, 0.1], 16).unwrap();
        assert!((est.value - 1.0).abs() < 0.1, "sigma density: {}", est.value);
        let est = numeric_lelong(&norm2(), 2, &[0.4, 0.2, 0.1], 16).unwrap();
        assert!((est.value - 1.0).abs() < 0.1, "point density: {}", est.value);
    }

    #[test]
    fn nested_orders_reproduce_the_noncommutative_values() {
        let rows = standard_check("order_inner_first_zero", None).unwrap();
        assert!(rows[0].pass, "value {}", rows[0].value);
        let rows = standard_check("order_swapped_origin", None).unwrap();
        assert!(rows[0].pass, "value {}", rows[0].value);
        let rows = standard_check("separated_orders", None).unwrap();
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn budget_is_enforced() {
        let u = RegularizedWeight::new(norm2(), 1e-6).unwrap();
        let mut grid = QuadratureGrid::polydisc(&[1.0, 1.0], 64);
        grid.max_points = 10_000;
        assert!(matches!(
            numeric_ma_mass(&u, 2, &grid),
            Err(EngineError::BudgetExceeded(_, _))
        ));
    }

    #[test]
    fn symbolic_comparison_rows() {
        let base = Ambient::base(2);
        let t = crate::current::normalize(
            vec![Term::cycle_only(rat(3), CoordCycle::base(&base, [1, 2]))],
            &base,
        )
        .unwrap();
        let rows = compare_to_symbolic(&t, &BasePoint::origin(2), 0.15).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].pass, "value {} vs 3", rows[0].value);
        assert!((rows[0].value - 3.0).abs() < 0.15);
    }

    #[test]
    fn csv_shape() {
        let rows = standard_check("smooth_mass_c1", None).unwrap();
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
    }
}
