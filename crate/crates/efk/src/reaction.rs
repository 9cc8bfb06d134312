//! KPP-type reaction terms: f with f(0)=f(1)=0, f'(0)>0, f'(1)<0.
//!
//! Derivatives are analytic (they enter Newton Jacobians and must be exact).
//! Two rules are supported: compile-time fn pointers, and polynomial
//! coefficient tables for terms read from a config file.  Both keep the
//! term Copy and trivially shareable.

use crate::error::{Error, Result};

/// coefficients of u, u², …, u⁵ — the constant term is pinned to zero
pub const POLY_MAX_DEGREE: usize = 5;

#[derive(Clone, Copy, Debug)]
enum Rule {
    Fns {
        f: fn(f64) -> f64,
        df: fn(f64) -> f64,
        d2f: fn(f64) -> f64,
    },
    Poly([f64; POLY_MAX_DEGREE]),
}

#[derive(Clone, Copy, Debug)]
pub struct ReactionTerm {
    rule: Rule,
    /// f'(0): the linear growth rate driving the pulled front
    pub fp0: f64,
    /// f'(1)
    pub fp1: f64,
}

fn check_slopes(fp0: f64, fp1: f64) -> Result<()> {
    if fp0 <= 0.0 || fp1 >= 0.0 {
        return Err(Error::InconsistentParameters(format!(
            "need f'(0)>0 and f'(1)<0, got {fp0} and {fp1}"
        )));
    }
    Ok(())
}

impl ReactionTerm {
    pub fn new(f: fn(f64) -> f64, df: fn(f64) -> f64, d2f: fn(f64) -> f64) -> Result<Self> {
        if f(0.0).abs() > 1e-14 || f(1.0).abs() > 1e-14 {
            return Err(Error::InconsistentParameters(
                "reaction must vanish at u=0 and u=1".into(),
            ));
        }
        let (fp0, fp1) = (df(0.0), df(1.0));
        check_slopes(fp0, fp1)?;
        Ok(ReactionTerm { rule: Rule::Fns { f, df, d2f }, fp0, fp1 })
    }

    /// f(u) = Σₖ cₖ u^k from a table c₁..c₅ (shorter tables are zero-padded);
    /// f(1) = Σ cₖ = 0 is required, f(0) = 0 by construction
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > POLY_MAX_DEGREE {
            return Err(Error::InconsistentParameters(format!(
                "coefficient table needs 1..={POLY_MAX_DEGREE} entries, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InconsistentParameters(
                "coefficient table contains a non-finite entry".into(),
            ));
        }
        let mut c = [0.0; POLY_MAX_DEGREE];
        c[..coeffs.len()].copy_from_slice(coeffs);
        let sum: f64 = c.iter().sum();
        if sum.abs() > 1e-12 {
            return Err(Error::InconsistentParameters(format!(
                "f(1) = sum of coefficients = {sum:.3e} must vanish"
            )));
        }
        let fp0 = c[0];
        let fp1: f64 = c.iter().enumerate().map(|(k, &ck)| (k + 1) as f64 * ck).sum();
        check_slopes(fp0, fp1)?;
        Ok(ReactionTerm { rule: Rule::Poly(c), fp0, fp1 })
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match self.rule {
            Rule::Fns { f, .. } => f(u),
            // Horner in u for u·(c₁ + c₂u + …)
            Rule::Poly(c) => u * c.iter().rev().fold(0.0, |acc, &ck| acc * u + ck),
        }
    }
    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        match self.rule {
            Rule::Fns { df, .. } => df(u),
            Rule::Poly(c) => c
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * u + (k + 1) as f64 * ck),
        }
    }
    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        match self.rule {
            Rule::Fns { d2f, .. } => d2f(u),
            // Σ_{k≥2} k(k−1)cₖ u^{k−2}, Horner with c[i] the coefficient of u^{i+1}
            Rule::Poly(c) => (1..POLY_MAX_DEGREE)
                .rev()
                .fold(0.0, |acc, i| acc * u + ((i + 1) * i) as f64 * c[i]),
        }
    }
    /// N(u) = f(u) - f'(0) u, the genuinely nonlinear part; N(0)=N'(0)=0
    #[inline]
    pub fn n(&self, u: f64) -> f64 {
        self.f(u) - self.fp0 * u
    }
}

pub fn logistic() -> ReactionTerm {
    ReactionTerm::new(|u| u * (1.0 - u), |u| 1.0 - 2.0 * u, |_| -2.0)
        .expect("logistic is a valid reaction")
}

/// Check the two KPP hypotheses separately on a uniform sample of (0,1):
/// concavity f''<0, and the weaker subtangential bound 0 < f(u) <= f'(0) u.
/// Violations are data, not failures.
pub fn validate(r: &ReactionTerm, n_samples: usize) -> Vec<String> {
    assert!(n_samples >= 2);
    let mut out = Vec::new();
    for i in 1..=n_samples {
        let u = i as f64 / (n_samples as f64 + 1.0);
        if r.d2f(u) >= 0.0 {
            out.push(format!("d2f nonnegative at u≈{u:.6}"));
        }
        let fu = r.f(u);
        if !(fu > 0.0 && fu <= r.fp0 * u) {
            out.push(format!("subtangential bound 0<f(u)<=f'(0)u fails at u≈{u:.6}"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_closed_forms() {
        let r = logistic();
        assert_eq!(r.f(0.5), 0.25);
        assert_eq!(r.fp0, 1.0);
        assert_eq!(r.fp1, -1.0);
        assert!(validate(&r, 100).is_empty());
    }

    #[test]
    fn nonlinear_part_vanishes_quadratically() {
        let r = logistic();
        assert!(r.n(0.0).abs() < 1e-12);
        // N'(0) via centered difference
        let h = 1e-6;
        assert!(((r.n(h) - r.n(-h)) / (2.0 * h)).abs() < 1e-9);
    }

    #[test]
    fn cubic_breaks_concavity_but_keeps_sign() {
        // f(u)=u(1-u)(1+u)=u-u^3: f''=-6u<0 on (0,1), but fp1=-2 and the
        // *subtangential* bound still holds; the sign-changing example is
        // f(u)=u(1-u)(1+2u), where f''=2-12u>0 near 0.
        let r = ReactionTerm::new(
            |u| u * (1.0 - u) * (1.0 + 2.0 * u),
            |u| 1.0 + 2.0 * u - 6.0 * u * u,
            |u| 2.0 - 12.0 * u,
        )
        .unwrap();
        let v = validate(&r, 100);
        assert!(v.iter().any(|s| s.contains("d2f nonnegative")));
        // and it also overshoots the tangent line near zero: f(u)/u = 1+u-2u^2 > 1
        assert!(v.iter().any(|s| s.contains("subtangential")));
    }

    #[test]
    fn sine_reaction_passes() {
        let r = ReactionTerm::new(
            |u| (std::f64::consts::PI * u).sin() / std::f64::consts::PI,
            |u| (std::f64::consts::PI * u).cos(),
            |u| -std::f64::consts::PI * (std::f64::consts::PI * u).sin(),
        )
        .unwrap();
        assert!(validate(&r, 100).is_empty());
    }

    #[test]
    fn df_matches_finite_differences() {
        let r = logistic();
        let h = 1e-5;
        for k in 0..=10 {
            let u = k as f64 / 10.0;
            let fd = (r.f(u + h) - r.f(u - h)) / (2.0 * h);
            assert!((fd - r.df(u)).abs() < 1e-9);
        }
    }

    #[test]
    fn polynomial_table_matches_closed_forms() {
        // u(1-u) = u - u²
        let p = ReactionTerm::polynomial(&[1.0, -1.0]).unwrap();
        let l = logistic();
        assert_eq!(p.fp0, 1.0);
        assert_eq!(p.fp1, -1.0);
        for k in -3..=13 {
            let u = k as f64 / 10.0;
            assert!((p.f(u) - l.f(u)).abs() < 1e-15);
            assert!((p.df(u) - l.df(u)).abs() < 1e-15);
            assert!((p.d2f(u) - l.d2f(u)).abs() < 1e-15);
        }
        // quintic: u - u⁵ has f'(1) = -4, f'' = -20u³
        let q = ReactionTerm::polynomial(&[1.0, 0.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(q.fp1, -4.0);
        assert!((q.d2f(0.5) + 20.0 * 0.125).abs() < 1e-15);
        assert!((q.df(0.5) - (1.0 - 5.0 / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn polynomial_table_rejections() {
        assert!(ReactionTerm::polynomial(&[]).is_err());
        assert!(ReactionTerm::polynomial(&[1.0; 6]).is_err());
        // f(1) != 0
        assert!(ReactionTerm::polynomial(&[1.0, -0.5]).is_err());
        // f'(0) < 0
        assert!(ReactionTerm::polynomial(&[-1.0, 1.0]).is_err());
        // u - 2u² + u³: sum 0, but f'(1) = 1 - 4 + 3 = 0 (degenerate slope)
        assert!(ReactionTerm::polynomial(&[1.0, -2.0, 1.0]).is_err());
        assert!(ReactionTerm::polynomial(&[1.0, f64::NAN, -1.0]).is_err());
    }
}
