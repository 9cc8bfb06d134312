//! Point-spectrum exclusion away from the origin: the compact Rayleigh
//! region that confines any unstable eigenvalue, and a dense scan of the
//! discretized ℒ(δ) spectrum classified against the essential borders.
//!
//! The division of labor with the evans module: the scan certifies that
//! nothing unstable exists outside a small ball B(0, r_ball), the Evans
//! function covers the ball.  Discrete eigenvalues that merely trace the
//! essential borders (their density grows with the domain) are classified
//! away by distance; whatever remains with Re λ ≥ 0 is a genuine
//! candidate and fails the run.

use crate::dispersion::{essential_borders, SpreadingData};
use crate::error::{Error, Result};
use crate::front::FrontSolution;
use crate::operators::DiscreteOperator;
use crate::reaction::ReactionTerm;
use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;

pub const R_BALL_DEFAULT: f64 = 0.04;
pub const RE_WINDOW: f64 = -0.05;

/// {λ : 0 ≤ Re λ ≤ b_inf, |Im λ| ≤ c*·√(b_inf − Re λ)}: every unstable
/// eigenvalue of the unweighted linearization lies here
#[derive(Clone, Copy, Debug)]
pub struct UnstableRegion {
    pub b_inf: f64,
    pub c_star: f64,
}

impl UnstableRegion {
    pub fn im_bound(&self, re: f64) -> f64 {
        self.c_star * (self.b_inf - re).max(0.0).sqrt()
    }

    pub fn contains(&self, lam: Complex64) -> bool {
        lam.re >= -1e-9
            && lam.re <= self.b_inf + 1e-9
            && lam.im.abs() <= self.im_bound(lam.re) + 1e-9
    }
}

pub fn unstable_region(front: &FrontSolution) -> UnstableRegion {
    let b_inf = front
        .q_values()
        .iter()
        .map(|&q| front.reaction.df(q).abs())
        .fold(0.0, f64::max);
    UnstableRegion { b_inf, c_star: front.spreading.c_star }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralClass {
    EssentialBand,
    PointCandidate,
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifiedEig {
    pub lambda: Complex64,
    pub class: SpectralClass,
    /// distance to the nearest sampled essential-border curve
    pub border_dist: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub delta: f64,
    /// full discrete spectrum of the assembled ℒ(δ)
    pub eigenvalues: Vec<Complex64>,
    /// eigenvalues with Re λ ≥ −0.05, tagged
    pub classified: Vec<ClassifiedEig>,
    /// point candidates with Re λ ≥ 0 and |λ| ≥ r_ball
    pub unstable: Vec<Complex64>,
    /// point candidates escaping the Rayleigh region (bound violations)
    pub region_violations: Vec<Complex64>,
    pub tol_band: f64,
    pub r_ball: f64,
}

impl SpectrumReport {
    pub fn band_count(&self) -> usize {
        self.classified
            .iter()
            .filter(|c| c.class == SpectralClass::EssentialBand)
            .count()
    }

    pub fn candidate_count(&self) -> usize {
        self.classified.len() - self.band_count()
    }

    /// CSV rows "re_lambda,im_lambda,class" over the classified window
    pub fn csv(&self) -> String {
        let mut out = String::from("re_lambda,im_lambda,class\n");
        for c in &self.classified {
            let tag = match c.class {
                SpectralClass::EssentialBand => "essential-band",
                SpectralClass::PointCandidate => "point-candidate",
            };
            out.push_str(&format!("{:.16e},{:.16e},{tag}\n", c.lambda.re, c.lambda.im));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let min_axis_dist = self
            .classified
            .iter()
            .filter(|c| c.class == SpectralClass::PointCandidate)
            .map(|c| c.lambda.re.abs())
            .fold(f64::INFINITY, f64::min);
        serde_json::json!({
            "delta": self.delta,
            "n_eigenvalues": self.eigenvalues.len(),
            "n_classified": self.classified.len(),
            "n_essential_band": self.band_count(),
            "n_point_candidates": self.candidate_count(),
            "n_unstable": self.unstable.len(),
            "n_region_violations": self.region_violations.len(),
            "min_candidate_axis_distance":
                if min_axis_dist.is_finite() { Some(min_axis_dist) } else { None },
            "tol_band": self.tol_band,
            "r_ball": self.r_ball,
        })
    }
}

/// full dense spectrum of a banded operator (LAPACK geev)
pub fn dense_eigenvalues(op: &DiscreteOperator) -> Result<Vec<Complex64>> {
    let n = op.grid.n;
    let mut a = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for (j, v) in op.banded.row(i) {
            a[[i, j]] = v;
        }
    }
    let (vals, _) = a
        .eig()
        .map_err(|e| Error::LSFailure(format!("dense eigensolve failed: {e}")))?;
    Ok(vals.to_vec())
}

/// band tolerance: the O(h²) stencil shift plus the e^{−ηx_max} truncation
/// shift of the essential curves
pub fn band_tolerance(h: f64, eta: f64, x_max: f64) -> f64 {
    (0.05f64).max(2.0 * h * h) + (-eta * x_max).exp()
}

pub fn classify_spectrum(
    l: &DiscreteOperator,
    s: &SpreadingData,
    r: &ReactionTerm,
    region: &UnstableRegion,
    r_ball: f64,
    eta: f64,
) -> Result<SpectrumReport> {
    if l.grid.h > 0.1 {
        return Err(Error::ResolutionError { h: l.grid.h });
    }
    let eigenvalues = dense_eigenvalues(l)?;
    let tol_band = band_tolerance(l.grid.h, eta, l.grid.x_max);

    // sampled weighted borders; |k| ≤ 1 comfortably covers Re λ ≥ −0.05−tol
    let borders = essential_borders(s, r, 1.0, 20001);
    let border_pts: Vec<Complex64> = borders[0]
        .samples
        .iter()
        .chain(borders[1].samples.iter())
        .map(|&(_, lam)| lam)
        .collect();

    let mut classified = Vec::new();
    let mut unstable = Vec::new();
    let mut region_violations = Vec::new();
    for &lam in &eigenvalues {
        if lam.re < RE_WINDOW {
            continue;
        }
        let border_dist = border_pts
            .iter()
            .map(|&b| (lam - b).norm())
            .fold(f64::INFINITY, f64::min);
        let class = if border_dist <= tol_band {
            SpectralClass::EssentialBand
        } else {
            SpectralClass::PointCandidate
        };
        if class == SpectralClass::PointCandidate {
            if lam.re >= 0.0 && lam.norm() >= r_ball {
                unstable.push(lam);
            }
            if lam.re >= 0.0 && !region.contains(lam) {
                region_violations.push(lam);
            }
        }
        classified.push(ClassifiedEig { lambda: lam, class, border_dist });
    }
    Ok(SpectrumReport {
        delta: s.delta,
        eigenvalues,
        classified,
        unstable,
        region_violations,
        tol_band,
        r_ball,
    })
}

/// Discrete Rayleigh-quotient bounds behind the compact region: for a
/// normalized eigenpair of the unweighted linearization,
///   Re λ ≤ ∫f′(q*)|φ|²  and  (Im λ)² ≤ c*²(∫f′(q*)|φ|² − Re λ).
/// The first is the negative-semidefiniteness of −δ²∂⁴+∂²; the second a
/// Cauchy–Schwarz on the transport term.
pub fn rayleigh_bound_check(
    lambda: Complex64,
    phi: &[Complex64],
    dfq: &[f64],
    c_star: f64,
    h: f64,
    tol: f64,
) -> bool {
    assert_eq!(phi.len(), dfq.len());
    let norm2: f64 = phi.iter().map(|v| v.norm_sqr()).sum::<f64>() * h;
    let pot: f64 = phi
        .iter()
        .zip(dfq)
        .map(|(v, &d)| d * v.norm_sqr())
        .sum::<f64>()
        * h
        / norm2;
    let re_ok = lambda.re <= pot + tol;
    let im_ok = lambda.im * lambda.im <= c_star * c_star * (pot - lambda.re) + tol;
    re_ok && im_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::{newton_continue, solve_kpp_front};
    use crate::grid::Grid;
    use crate::operators::{assemble, OperatorKind};
    use crate::reaction::logistic;
    use std::sync::OnceLock;

    /// h = 0.1 keeps the dense solves around a second each
    fn coarse_grid() -> Grid {
        Grid::new(-40.0, 60.0, 1001).unwrap()
    }

    fn coarse_front(delta: f64) -> FrontSolution {
        let f0 = solve_kpp_front(&logistic(), &coarse_grid()).unwrap();
        if delta == 0.0 {
            f0
        } else {
            newton_continue(&f0, delta, 8).unwrap()
        }
    }

    fn report01() -> &'static SpectrumReport {
        static R: OnceLock<SpectrumReport> = OnceLock::new();
        R.get_or_init(|| {
            let f = coarse_front(0.1);
            let cs = f.coefficient_set().unwrap();
            let l = assemble(OperatorKind::L, &f.spreading, &cs, &f.grid).unwrap();
            let region = unstable_region(&f);
            classify_spectrum(&l, &f.spreading, &f.reaction, &region, R_BALL_DEFAULT, 0.25)
                .unwrap()
        })
    }

    #[test]
    fn region_of_logistic_front() {
        let f = coarse_front(0.1);
        let reg = unstable_region(&f);
        // |f′| = |1−2q| ≤ 1 for q ∈ [0,1], attained at both tails
        assert!((reg.b_inf - 1.0).abs() < 1e-9);
        assert!(reg.im_bound(reg.b_inf) == 0.0);
        assert!((reg.im_bound(0.0) - reg.c_star).abs() < 1e-12);
        assert!(reg.contains(Complex64::new(0.5, 1.0)));
        assert!(!reg.contains(Complex64::new(1.5, 0.0)));
        assert!(!reg.contains(Complex64::new(0.99, 1.0)));
    }

    #[test]
    fn no_unstable_candidates_at_delta_01() {
        let rep = report01();
        assert!(rep.unstable.is_empty(), "unstable: {:?}", rep.unstable);
        assert!(rep.region_violations.is_empty());
        // everything in the window hugs the plus border
        for c in &rep.classified {
            assert_eq!(c.class, SpectralClass::EssentialBand, "stray {:?}", c);
        }
        assert!(!rep.classified.is_empty());
        let csv = rep.csv();
        assert!(csv.starts_with("re_lambda,im_lambda,class\n"));
        assert_eq!(csv.lines().count(), rep.classified.len() + 1);
        let j = rep.summary_json();
        assert_eq!(j["n_unstable"], 0);
        assert!(j["min_candidate_axis_distance"].is_null());
    }

    #[test]
    fn no_unstable_candidates_at_delta_0() {
        let f = coarse_front(0.0);
        let cs = f.coefficient_set().unwrap();
        let l = assemble(OperatorKind::L, &f.spreading, &cs, &f.grid).unwrap();
        let region = unstable_region(&f);
        let rep =
            classify_spectrum(&l, &f.spreading, &f.reaction, &region, R_BALL_DEFAULT, 0.25)
                .unwrap();
        assert!(rep.unstable.is_empty());
        assert!(rep.region_violations.is_empty());
    }

    #[test]
    fn shifted_potential_is_detected() {
        // +2 on the potential translates the spectrum right by ~2: the scan
        // must produce unstable candidates, and they stay inside the
        // (shifted) Rayleigh region
        let f = coarse_front(0.1);
        let cs = f.coefficient_set().unwrap();
        let l = assemble(OperatorKind::L, &f.spreading, &cs, &f.grid).unwrap();
        let shifted = l.shifted_copy(&vec![2.0; f.grid.n]);
        let region = UnstableRegion { b_inf: 3.0, c_star: f.spreading.c_star };
        let rep =
            classify_spectrum(&shifted, &f.spreading, &f.reaction, &region, R_BALL_DEFAULT, 0.25)
                .unwrap();
        assert!(!rep.unstable.is_empty());
        assert!(rep.region_violations.is_empty());
        assert!(rep.unstable.iter().all(|l| region.contains(*l)));
        assert!(rep.summary_json()["min_candidate_axis_distance"].as_f64().is_some());
        // the spectral top moved to ≈ 2 + (original max ≈ 0)
        let max_re = rep.unstable.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        assert!(max_re > 1.5, "shift did not surface: max Re = {max_re}");
    }

    #[test]
    fn band_density_doubles_with_domain() {
        // truncation diagnostic: band eigenvalues sample the essential
        // curves with spacing ~π/L, so doubling x_max at fixed h at least
        // doubles the band count in the fixed window
        let count = |x_max: f64| {
            let n = ((x_max + 40.0) / 0.1).round() as usize + 1;
            let g = Grid::new(-40.0, x_max, n).unwrap();
            let f0 = solve_kpp_front(&logistic(), &g).unwrap();
            let f = newton_continue(&f0, 0.1, 8).unwrap();
            let cs = f.coefficient_set().unwrap();
            let l = assemble(OperatorKind::L, &f.spreading, &cs, &g).unwrap();
            let region = unstable_region(&f);
            classify_spectrum(&l, &f.spreading, &f.reaction, &region, R_BALL_DEFAULT, 0.25)
                .unwrap()
                .band_count()
        };
        let (c1, c2) = (count(60.0), count(160.0));
        assert!(
            c2 >= 2 * c1 && c1 > 0,
            "band count {c1} at x_max=60 vs {c2} at x_max=160"
        );
    }

    #[test]
    fn rayleigh_bounds_hold_for_computed_eigenpairs() {
        // eigenpairs of the unweighted 𝒜(δ): the discrete quadratic-form
        // identities hold to roundoff (symmetric parts are exactly
        // semidefinite; Cauchy–Schwarz is exact)
        let f = coarse_front(0.1);
        let cs = f.coefficient_set().unwrap();
        let a = assemble(OperatorKind::A, &f.spreading, &cs, &f.grid).unwrap();
        let n = f.grid.n;
        let mut m = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for (j, v) in a.banded.row(i) {
                m[[i, j]] = v;
            }
        }
        let (vals, vecs) = m.eig().unwrap();
        let dfq: Vec<f64> = f.grid.xs().iter().map(|&x| cs.dfq(x)).collect();
        // spot-check the eigenvalues of largest real part
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| vals[j].re.partial_cmp(&vals[i].re).unwrap());
        for &i in idx.iter().take(10) {
            let phi: Vec<Complex64> = vecs.column(i).to_vec();
            assert!(
                rayleigh_bound_check(vals[i], &phi, &dfq, f.spreading.c_star, f.grid.h, 1e-8),
                "bound failed for lambda = {}",
                vals[i]
            );
        }
    }

    #[test]
    fn rayleigh_rejects_fabricated_pair() {
        let f = coarse_front(0.1);
        let cs = f.coefficient_set().unwrap();
        let dfq: Vec<f64> = f.grid.xs().iter().map(|&x| cs.dfq(x)).collect();
        let phi: Vec<Complex64> = f
            .grid
            .xs()
            .iter()
            .map(|&x| Complex64::new((-x * x / 8.0).exp(), 0.0))
            .collect();
        assert!(!rayleigh_bound_check(
            Complex64::new(2.0, 0.0),
            &phi,
            &dfq,
            f.spreading.c_star,
            f.grid.h,
            1e-8
        ));
    }

    #[test]
    fn rayleigh_holds_for_far_field_fourier_mode() {
        // constant-coefficient check: λ = f′(0) − δ²k⁴ − k² + ic*k with
        // φ = e^{ikx} and f′(q*) ≡ f′(0)
        let delta = 0.1f64;
        let s = crate::dispersion::spreading(delta, &logistic()).unwrap();
        let g = coarse_grid();
        let k = 0.7;
        let phi: Vec<Complex64> = g
            .xs()
            .iter()
            .map(|&x| Complex64::new(0.0, k * x).exp())
            .collect();
        let dfq = vec![1.0; g.n];
        let lam = Complex64::new(
            1.0 - delta * delta * k.powi(4) - k * k,
            s.c_star * k,
        );
        assert!(rayleigh_bound_check(lam, &phi, &dfq, s.c_star, g.h, 1e-8));
    }
}
