//! Dispersion algebra for d_c^±(λ,ν) = −δ²ν⁴ + ν² + cν + f′(0∕1) − λ:
//! the pinched double root that selects the spreading speed, the four
//! roots near the origin feeding the Evans function, and the essential
//! spectrum border curves.

use crate::error::{Error, Result};
use crate::reaction::ReactionTerm;
use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;

pub const GAMMA0_DEFAULT: f64 = 0.3;

/// Spreading speed and decay-rate data of the double root of d⁺ at λ=0.
#[derive(Clone, Copy, Debug)]
pub struct SpreadingData {
    pub delta: f64,
    /// critical decay rate η* = η₂ (the slow decay root)
    pub eta_star: f64,
    /// linear spreading speed c* = 2η* − 4δ²η*³
    pub c_star: f64,
    /// fast decay root η₁ (∞ at δ=0)
    pub eta1: f64,
    pub eta2: f64,
    /// triple-root threshold 1/√(12 f′(0))
    pub delta_bar: f64,
    pub fp0: f64,
}

/// The four roots of ν ↦ d⁺_{c*}(γ², −η*+ν).  The fast pair scales like
/// ±1/|δ| and disappears at δ=0, where the symbol is quadratic.
#[derive(Clone, Copy, Debug)]
pub struct RootQuadruple {
    pub gamma: Complex64,
    pub delta: f64,
    /// slow root with Re ν < 0; ν₂ = −γ + O(δγ + γ²)
    pub nu2: Complex64,
    /// slow root with Re ν > 0
    pub nu3: Complex64,
    /// (ν₁, ν₄): fast roots ordered by real part; None at δ=0
    pub fast: Option<(Complex64, Complex64)>,
}

impl RootQuadruple {
    /// all available roots ordered by real part
    pub fn all(&self) -> Vec<Complex64> {
        match self.fast {
            Some((nu1, nu4)) => vec![nu1, self.nu2, self.nu3, nu4],
            None => vec![self.nu2, self.nu3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveLabel {
    PlusBorder,
    MinusBorder,
    UnweightedPlus,
    UnweightedMinus,
}

impl CurveLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveLabel::PlusBorder => "plus-border",
            CurveLabel::MinusBorder => "minus-border",
            CurveLabel::UnweightedPlus => "unweighted-plus",
            CurveLabel::UnweightedMinus => "unweighted-minus",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumCurve {
    pub label: CurveLabel,
    /// (wavenumber k, λ(k))
    pub samples: Vec<(f64, Complex64)>,
}

/// Double root of d⁺_{c*}(0, −η) in the decay rate η.  The two positive
/// roots of the η²-quadratic 6δ²η⁴ − ... are
///     η² = (1 ∓ √(1−12δ²f′(0))) / (6δ²),
/// and the slow one is evaluated in the rationalized form
///     η*² = 2f′(0) / (1 + √(1−12δ²f′(0))),
/// which is exact in the δ→0 limit (no 0/0).
pub fn spreading(delta: f64, r: &ReactionTerm) -> Result<SpreadingData> {
    let fp0 = r.fp0;
    let delta_bar = 1.0 / (12.0 * fp0).sqrt();
    let disc = 1.0 - 12.0 * delta * delta * fp0;
    if disc <= 0.0 {
        return Err(Error::DoubleRootMerged { delta, delta_bar });
    }
    let sq = disc.sqrt();
    let eta_star = (2.0 * fp0 / (1.0 + sq)).sqrt();
    let c_star = 2.0 * eta_star - 4.0 * delta * delta * eta_star.powi(3);
    let eta1 = if delta == 0.0 {
        f64::INFINITY
    } else {
        ((1.0 + sq) / (6.0 * delta * delta)).sqrt()
    };
    Ok(SpreadingData { delta, eta_star, c_star, eta1, eta2: eta_star, delta_bar, fp0 })
}

pub fn dispersion_plus(lambda: Complex64, nu: Complex64, s: &SpreadingData, r: &ReactionTerm) -> Complex64 {
    let d2 = s.delta * s.delta;
    -d2 * nu.powu(4) + nu * nu + s.c_star * nu + r.fp0 - lambda
}

pub fn dispersion_minus(lambda: Complex64, nu: Complex64, s: &SpreadingData, r: &ReactionTerm) -> Complex64 {
    let d2 = s.delta * s.delta;
    -d2 * nu.powu(4) + nu * nu + s.c_star * nu + r.fp1 - lambda
}

/// Coefficients of the shifted symbol g(ν) = d⁺_{c*}(γ², −η*+ν) in
/// ascending powers.  The ν¹ and ν⁰ coefficients vanish identically by the
/// double-root conditions, leaving
///     g(ν) = −δ²ν⁴ + 4η*δ²ν³ + (1−6δ²η*²)ν² − γ².
pub fn shifted_quartic_coeffs(gamma2: Complex64, s: &SpreadingData) -> [Complex64; 5] {
    let d2 = s.delta * s.delta;
    let e = s.eta_star;
    [
        -gamma2,
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0 - 6.0 * d2 * e * e, 0.0),
        Complex64::new(4.0 * d2 * e, 0.0),
        Complex64::new(-d2, 0.0),
    ]
}

fn eval_poly(c: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        acc = acc * z + ck;
    }
    acc
}

/// roots of a polynomial with nonzero leading coefficient, as eigenvalues
/// of its companion matrix
fn poly_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = Array2::<Complex64>::zeros((n, n));
    for i in 1..n {
        m[[i, i - 1]] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[[i, n - 1]] = -c[i] / lead;
    }
    let (vals, _) = m
        .eig()
        .map_err(|e| Error::LSFailure(format!("companion eig failed: {e}")))?;
    Ok(vals.to_vec())
}

/// The four roots of g near the origin for |γ| ≤ γ₀.  Slow/fast clusters
/// are separated at |ν| = 1/(2|δ|): Lemma-scale reasoning puts the fast
/// roots at ±1/|δ| + O(1) and the slow ones at O(γ).
pub fn roots_near_origin(gamma: Complex64, s: &SpreadingData) -> Result<RootQuadruple> {
    if gamma.re < 0.0 {
        return Err(Error::InvalidSpectralPoint { gamma });
    }
    let gamma2 = gamma * gamma;
    // γ² on the negative real axis (γ pure imaginary, ≠ 0) sits inside the
    // essential spectrum and the slow roots collide there
    if gamma.re == 0.0 && gamma.im != 0.0 {
        return Err(Error::InvalidSpectralPoint { gamma });
    }

    if s.delta == 0.0 {
        // g(ν) = ν² − γ² exactly
        return Ok(RootQuadruple { gamma, delta: 0.0, nu2: -gamma, nu3: gamma, fast: None });
    }

    let coeffs = shifted_quartic_coeffs(gamma2, s);
    let roots = poly_roots(&coeffs)?;
    let scale: f64 = roots
        .iter()
        .map(|&nu| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm() * nu.norm().powi(k as i32))
                .sum::<f64>()
        })
        .fold(1.0, f64::max);
    for &nu in &roots {
        let res = eval_poly(&coeffs, nu).norm();
        if res > 1e-10 * scale {
            return Err(Error::LSFailure(format!(
                "quartic root residual {res:.3e} exceeds 1e-10 relative"
            )));
        }
    }

    let cut = 1.0 / (2.0 * s.delta.abs());
    let (slow, fast): (Vec<_>, Vec<_>) = roots.into_iter().partition(|nu| nu.norm() < cut);
    if slow.len() != 2 || fast.len() != 2 {
        return Err(Error::ClusterOverlap { delta: s.delta, gamma });
    }
    let (mut s0, mut s1) = (slow[0], slow[1]);
    if (s0 + gamma).norm() > (s1 + gamma).norm() {
        std::mem::swap(&mut s0, &mut s1);
    }
    // ν₂ = −γ + O(δγ + γ²); generous constant, small absolute slack for
    // the eig noise floor at γ = 0
    let bound = 5.0 * (s.delta.abs() * gamma.norm() + gamma.norm() * gamma.norm()) + 1e-7;
    if (s0 + gamma).norm() > bound {
        return Err(Error::ClusterOverlap { delta: s.delta, gamma });
    }
    let (mut f0, mut f1) = (fast[0], fast[1]);
    if f0.re > f1.re {
        std::mem::swap(&mut f0, &mut f1);
    }
    Ok(RootQuadruple { gamma, delta: s.delta, nu2: s0, nu3: s1, fast: Some((f0, f1)) })
}

/// Essential-spectrum borders: Fourier symbols of the constant-coefficient
/// limits, weighted (plus/minus-border) and unweighted (of 𝒜).
pub fn essential_borders(
    s: &SpreadingData,
    r: &ReactionTerm,
    k_max: f64,
    n: usize,
) -> Vec<SpectrumCurve> {
    assert!(k_max > 0.0 && n >= 2);
    let d2 = s.delta * s.delta;
    let e = s.eta_star;
    let ks: Vec<f64> = (0..n)
        .map(|j| -k_max + 2.0 * k_max * j as f64 / (n - 1) as f64)
        .collect();
    let i = Complex64::new(0.0, 1.0);
    let curve = |label, f: &dyn Fn(f64) -> Complex64| SpectrumCurve {
        label,
        samples: ks.iter().map(|&k| (k, f(k))).collect(),
    };
    vec![
        // symbol of ℒ₊ = −δ²∂⁴ + 4η*δ²∂³ + (1−6δ²η*²)∂² at frequency k
        curve(CurveLabel::PlusBorder, &|k: f64| {
            -d2 * k.powi(4) - (1.0 - 6.0 * d2 * e * e) * k * k - 4.0 * e * d2 * i * k.powi(3)
        }),
        // symbol of ℒ₋ = −δ²∂⁴ + ∂² + c*∂ + f′(1)
        curve(CurveLabel::MinusBorder, &|k: f64| {
            -d2 * k.powi(4) - k * k + i * s.c_star * k + r.fp1
        }),
        // unweighted borders of 𝒜 from d^±(λ, ik) = 0
        curve(CurveLabel::UnweightedPlus, &|k: f64| {
            -d2 * k.powi(4) - k * k + i * s.c_star * k + r.fp0
        }),
        curve(CurveLabel::UnweightedMinus, &|k: f64| {
            -d2 * k.powi(4) - k * k + i * s.c_star * k + r.fp1
        }),
    ]
}
