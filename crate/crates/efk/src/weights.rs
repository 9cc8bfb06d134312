//! Smooth exponential/algebraic weights and the variable coefficients of
//! the conjugated operators ω (−δ²∂⁴ + ∂² + c∂ + f′) ω⁻¹.
//!
//! The log-derivative ℓ′ = ω′/ω interpolates η₋ → η₊ across [−1,1] through
//! the degree-9 smootherstep, so ℓ′ ∈ C⁴ and every coefficient down to a₀
//! (which carries ϖ⁗/ϖ) stays continuous.  Outside the bridge the weight is
//! exactly e^{η∓x}; in particular ω_{η,η} = e^{ηx} for all x.

use crate::dispersion::SpreadingData;
use crate::error::{Error, Result};
use crate::reaction::ReactionTerm;

/// s₄: the C⁴ smootherstep on [0,1] (s₄(0)=0, s₄(1)=1, four vanishing
/// derivatives at both ends) and its derivatives/antiderivative.
pub fn s4(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        ((((70.0 * t - 315.0) * t + 540.0) * t - 420.0) * t + 126.0) * t.powi(5)
    }
}

pub fn s4_d1(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        630.0 * (t * (1.0 - t)).powi(4)
    }
}

pub fn s4_d2(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        2520.0 * (t * (1.0 - t)).powi(3) * (1.0 - 2.0 * t)
    }
}

pub fn s4_d3(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        2520.0 * (t * (1.0 - t)).powi(2) * (3.0 - 14.0 * t + 14.0 * t * t)
    }
}

pub fn s4_d4(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else {
        5040.0 * t * (1.0 - t) * (3.0 - 27.0 * t + (63.0 - 42.0 * t) * t * t)
    }
}

/// ∫₀ᵗ s₄; S4(1) = 1/2
pub fn s4_int(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        t - 0.5
    } else {
        ((((7.0 * t - 35.0) * t + 67.5) * t - 60.0) * t + 21.0) * t.powi(6)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightKind {
    /// ω_{η₋,η₊}
    TwoSidedExponential,
    /// ω* = ω_{0,η*}
    Critical,
    /// ρ_r = (1+x²)^{r/2}
    Algebraic { r: f64 },
    /// ω_{η₋,η₊}·ρ_r, the norm weights of the decay estimates
    ExponentialTimesAlgebraic { r: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSpec {
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub kind: WeightKind,
}

impl WeightSpec {
    pub fn exponential(eta_minus: f64, eta_plus: f64) -> Self {
        WeightSpec { eta_minus, eta_plus, kind: WeightKind::TwoSidedExponential }
    }

    pub fn critical(s: &SpreadingData) -> Self {
        WeightSpec { eta_minus: 0.0, eta_plus: s.eta_star, kind: WeightKind::Critical }
    }

    pub fn algebraic(r: f64) -> Self {
        WeightSpec { eta_minus: 0.0, eta_plus: 0.0, kind: WeightKind::Algebraic { r } }
    }

    pub fn exponential_algebraic(eta_minus: f64, eta_plus: f64, r: f64) -> Self {
        WeightSpec { eta_minus, eta_plus, kind: WeightKind::ExponentialTimesAlgebraic { r } }
    }

    fn algebraic_derivs(r: f64, x: f64) -> [f64; 5] {
        let s = 1.0 + x * x;
        [
            0.5 * r * s.ln(),
            r * x / s,
            r * (1.0 - x * x) / (s * s),
            2.0 * r * x * (x * x - 3.0) / s.powi(3),
            -6.0 * r * (x.powi(4) - 6.0 * x * x + 1.0) / s.powi(4),
        ]
    }

    fn exponential_derivs(&self, x: f64) -> [f64; 5] {
        let (em, ep) = (self.eta_minus, self.eta_plus);
        if x <= -1.0 {
            [em * x, em, 0.0, 0.0, 0.0]
        } else if x >= 1.0 {
            [ep * x, ep, 0.0, 0.0, 0.0]
        } else {
            let d = ep - em;
            let t = 0.5 * (x + 1.0);
            [
                em * x + 2.0 * d * s4_int(t),
                em + d * s4(t),
                0.5 * d * s4_d1(t),
                0.25 * d * s4_d2(t),
                0.125 * d * s4_d3(t),
            ]
        }
    }

    /// [ℓ, ℓ′, ℓ″, ℓ‴, ℓ⁗] of the log-weight ℓ = log ω at x
    pub fn log_derivs(&self, x: f64) -> [f64; 5] {
        match self.kind {
            WeightKind::Algebraic { r } => Self::algebraic_derivs(r, x),
            WeightKind::ExponentialTimesAlgebraic { r } => {
                let a = self.exponential_derivs(x);
                let b = Self::algebraic_derivs(r, x);
                [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3], a[4] + b[4]]
            }
            _ => self.exponential_derivs(x),
        }
    }

    /// ω^{(k)}(x) for k = derivative_order ∈ 0..=4, via the Bell-polynomial
    /// expansion of d^k e^ℓ
    pub fn eval(&self, x: f64, derivative_order: usize) -> f64 {
        assert!(derivative_order <= 4, "derivative order must be <= 4");
        let [l, l1, l2, l3, l4] = self.log_derivs(x);
        let w = l.exp();
        match derivative_order {
            0 => w,
            1 => l1 * w,
            2 => (l2 + l1 * l1) * w,
            3 => (l3 + 3.0 * l1 * l2 + l1.powi(3)) * w,
            _ => (l4 + 4.0 * l1 * l3 + 3.0 * l2 * l2 + 6.0 * l1 * l1 * l2 + l1.powi(4)) * w,
        }
    }

    /// ratios rₖ = (ω⁻¹)^{(k)} / ω⁻¹, the building blocks of conjugation
    pub fn inv_ratios(&self, x: f64) -> [f64; 4] {
        let [_, l1, l2, l3, l4] = self.log_derivs(x);
        [
            -l1,
            l1 * l1 - l2,
            -l1.powi(3) + 3.0 * l1 * l2 - l3,
            l1.powi(4) - 6.0 * l1 * l1 * l2 + 3.0 * l2 * l2 + 4.0 * l1 * l3 - l4,
        ]
    }
}

pub fn weight_eval(w: &WeightSpec, x: f64, derivative_order: usize) -> f64 {
    w.eval(x, derivative_order)
}

/// Variable coefficients of ℒ(δ) = −δ²∂⁴ + δ²a₃∂³ + (1+δ²a₂)∂² + a₁∂ + a₀
/// (and of 𝒮(δ), whose zeroth coefficient ã₀ carries f′(0) instead of
/// f′(q*)).  The front profile enters only through f′(q*(x)); it is held as
/// a grid sample and interpolated linearly off-node.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub delta: f64,
    pub w: WeightSpec,
    s: SpreadingData,
    r: ReactionTerm,
    x0: f64,
    h: f64,
    q: Vec<f64>,
}

impl CoefficientSet {
    pub fn new(
        s: &SpreadingData,
        w: WeightSpec,
        r: &ReactionTerm,
        q_delta: f64,
        x0: f64,
        h: f64,
        q: Vec<f64>,
    ) -> Result<Self> {
        if q_delta != s.delta {
            return Err(Error::InconsistentParameters(format!(
                "front has delta = {q_delta}, spreading data has delta = {}",
                s.delta
            )));
        }
        Ok(CoefficientSet { delta: s.delta, w, s: *s, r: *r, x0, h, q })
    }

    pub fn q_at(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.h;
        let i = t.floor().clamp(0.0, (self.q.len() - 2) as f64);
        let frac = t - i;
        let i = i as usize;
        self.q[i] * (1.0 - frac) + self.q[i + 1] * frac
    }

    pub fn a3(&self, x: f64) -> f64 {
        -4.0 * self.w.inv_ratios(x)[0]
    }

    pub fn a2(&self, x: f64) -> f64 {
        -6.0 * self.w.inv_ratios(x)[1]
    }

    pub fn a1(&self, x: f64) -> f64 {
        let [r1, _, r3, _] = self.w.inv_ratios(x);
        self.s.c_star + 2.0 * r1 - 4.0 * self.delta * self.delta * r3
    }

    /// potential part shared by a₀ and ã₀ (everything except the f′ term)
    fn a0_weight_part(&self, x: f64) -> f64 {
        let [r1, r2, _, r4] = self.w.inv_ratios(x);
        self.s.c_star * r1 + r2 - self.delta * self.delta * r4
    }

    pub fn a0(&self, x: f64) -> f64 {
        self.r.df(self.q_at(x)) + self.a0_weight_part(x)
    }

    pub fn a0_tilde(&self, x: f64) -> f64 {
        self.r.fp0 + self.a0_weight_part(x)
    }

    /// f′(q*(x)), the potential of the unweighted linearization
    pub fn dfq(&self, x: f64) -> f64 {
        self.r.df(self.q_at(x))
    }

    pub fn fp0(&self) -> f64 {
        self.r.fp0
    }

    pub fn fp1(&self) -> f64 {
        self.r.fp1
    }
}

pub fn coefficients(
    s: &SpreadingData,
    w: WeightSpec,
    r: &ReactionTerm,
    q_delta: f64,
    x0: f64,
    h: f64,
    q: Vec<f64>,
) -> Result<CoefficientSet> {
    CoefficientSet::new(s, w, r, q_delta, x0, h, q)
}
