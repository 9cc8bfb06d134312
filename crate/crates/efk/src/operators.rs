//! Finite-difference assembly of the linearizations and their weighted
//! conjugates, the (1−δ²∂²)⁻¹ preconditioner, the cokernel element φ of
//! ℒ(0) and the projection onto its range.
//!
//! All operators are pentadiagonal (2nd-order centered stencils, 5-point
//! for ∂⁴) with homogeneous-Dirichlet ghost closure: core variables decay
//! exponentially on both sides, and at x_max the far field is carried by
//! the analytic ansatz rather than the grid.

use crate::banded::{solve_cyclic_tridiag, Banded};
use crate::dispersion::SpreadingData;
use crate::error::{Error, Result};
use crate::front::FrontSolution;
use crate::grid::{FieldSample, Grid, Representation};
use crate::weights::{CoefficientSet, WeightSpec};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// 𝒜(δ) = −δ²∂⁴ + ∂² + c*∂ + f′(q*): unweighted linearization
    A,
    /// ℒ(δ) = ω* 𝒜 ω*⁻¹
    L,
    /// 𝒮(δ): like ℒ but with ã₀ (f′(0) in place of f′(q*))
    S,
    /// far-field limit ℒ₊ = −δ²∂⁴ + 4η*δ²∂³ + (1−6δ²η*²)∂²
    LPlus,
    /// far-field limit ℒ₋ = −δ²∂⁴ + ∂² + c*∂ + f′(1)
    LMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryClosure {
    /// out-of-range stencil legs multiply zero
    DirichletZero,
    /// wrap-around; only used by the preconditioner on symbol tests
    Periodic,
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub kind: OperatorKind,
    pub grid: Grid,
    pub closure: BoundaryClosure,
    pub banded: Banded<f64>,
}

/// centered stencils: (offset, coefficient·h^order)
const S4: [(isize, f64); 5] = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
const S3: [(isize, f64); 5] = [(-2, -0.5), (-1, 1.0), (0, 0.0), (1, -1.0), (2, 0.5)];
const S2: [(isize, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
const S1: [(isize, f64); 3] = [(-1, -0.5), (0, 0.0), (1, 0.5)];

pub fn assemble(
    kind: OperatorKind,
    s: &SpreadingData,
    coeffs: &CoefficientSet,
    g: &Grid,
) -> Result<DiscreteOperator> {
    if g.h > 0.25 {
        return Err(Error::ResolutionError { h: g.h });
    }
    if coeffs.delta != s.delta {
        return Err(Error::InconsistentParameters(
            "coefficient set and spreading data disagree on delta".into(),
        ));
    }
    let d2 = s.delta * s.delta;
    let e = s.eta_star;
    let mut b = Banded::<f64>::zeros(g.n, 2, 2);
    let h = g.h;
    let (h1, h2, h3, h4) = (h, h * h, h * h * h, h * h * h * h);
    for i in 0..g.n {
        let x = g.x(i);
        // (b4, b3, b2, b1, b0) multiplying ∂⁴..∂⁰
        let c = match kind {
            OperatorKind::A => (-d2, 0.0, 1.0, s.c_star, coeffs.dfq(x)),
            OperatorKind::L => (
                -d2,
                d2 * coeffs.a3(x),
                1.0 + d2 * coeffs.a2(x),
                coeffs.a1(x),
                coeffs.a0(x),
            ),
            OperatorKind::S => (
                -d2,
                d2 * coeffs.a3(x),
                1.0 + d2 * coeffs.a2(x),
                coeffs.a1(x),
                coeffs.a0_tilde(x),
            ),
            OperatorKind::LPlus => (-d2, 4.0 * e * d2, 1.0 - 6.0 * d2 * e * e, 0.0, 0.0),
            OperatorKind::LMinus => (-d2, 0.0, 1.0, s.c_star, coeffs.fp1()),
        };
        let mut add = |offs: &[(isize, f64)], w: f64| {
            if w == 0.0 {
                return;
            }
            for &(o, v) in offs {
                let j = i as isize + o;
                if (0..g.n as isize).contains(&j) {
                    b.add_to(i, j as usize, w * v);
                }
            }
        };
        add(&S4, c.0 / h4);
        add(&S3, c.1 / h3);
        add(&S2, c.2 / h2);
        add(&S1, c.3 / h1);
        b.add_to(i, i, c.4);
    }
    Ok(DiscreteOperator { kind, grid: *g, closure: BoundaryClosure::DirichletZero, banded: b })
}

impl DiscreteOperator {
    pub fn apply_real(&self, u: &[f64]) -> Vec<f64> {
        self.banded.matvec(u)
    }

    pub fn apply(&self, u: &FieldSample) -> FieldSample {
        assert_eq!(u.grid, self.grid);
        let re: Vec<f64> = u.values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = u.values.iter().map(|v| v.im).collect();
        let (rre, rim) = (self.banded.matvec(&re), self.banded.matvec(&im));
        FieldSample::new(
            self.grid,
            rre.iter()
                .zip(&rim)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            u.representation,
        )
    }

    /// complex copy of the banded matrix (for γ²-shifted solves)
    pub fn to_complex(&self) -> Banded<Complex64> {
        let mut b = Banded::<Complex64>::zeros(self.grid.n, 2, 2);
        for i in 0..self.grid.n {
            for (j, v) in self.banded.row(i) {
                if v != 0.0 {
                    b.set(i, j, Complex64::new(v, 0.0));
                }
            }
        }
        b
    }

    /// copy with w(x) added to the zeroth-order coefficient (control
    /// experiments shift the potential without reassembling)
    pub fn shifted_copy(&self, w: &[f64]) -> DiscreteOperator {
        assert_eq!(w.len(), self.grid.n);
        let mut banded = self.banded.clone();
        for (i, &v) in w.iter().enumerate() {
            banded.add_to(i, i, v);
        }
        DiscreteOperator { banded, ..*self }
    }

    /// sparse triplet dump "i j value" per line, for debugging
    pub fn dump_triplets(&self) -> String {
        let mut out = String::new();
        for i in 0..self.grid.n {
            for (j, v) in self.banded.row(i) {
                if v != 0.0 {
                    out.push_str(&format!("{i} {j} {v:.16e}\n"));
                }
            }
        }
        out
    }
}

/// first derivative of a real sample: centered interior, 2nd-order
/// one-sided at the ends (no ghost assumption — used on profiles that do
/// not vanish at the boundary)
pub fn gradient(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d
}

fn precondition_weight(rep: Representation) -> Option<WeightSpec> {
    match rep {
        Representation::Plain => None,
        Representation::Weighted { eta } => Some(WeightSpec::exponential(0.0, eta)),
    }
}

/// Solve (1 − δ²∂²)u = rhs in the representation carried by `rhs`.  In the
/// weighted representation the conjugated operator 1 − δ²(∂² + 2r₁∂ + r₂)
/// is used; its symbol 1 − δ²η² + δ²k² + 2iδ²ηk stays ≥ 1/2 away from zero
/// for |δ| < δ₀ = 1/(√2·η), which is the admissibility threshold.
pub fn precondition_with(
    rhs: &FieldSample,
    delta: f64,
    closure: BoundaryClosure,
) -> Result<FieldSample> {
    if delta == 0.0 {
        return Ok(rhs.clone());
    }
    let w = precondition_weight(rhs.representation);
    if let Some(ref ws) = w {
        let eta = ws.eta_plus;
        if eta > 0.0 && delta.abs() >= 1.0 / (2f64.sqrt() * eta) {
            return Err(Error::InconsistentParameters(format!(
                "|delta| = {} at or above the preconditioner threshold 1/(sqrt(2) eta) = {}",
                delta.abs(),
                1.0 / (2f64.sqrt() * eta)
            )));
        }
    }
    let g = rhs.grid;
    let d2 = delta * delta;
    let h2 = g.h * g.h;
    let n = g.n;
    let mut dia = vec![0.0; n];
    let mut sub = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        let (r1, r2) = match w {
            None => (0.0, 0.0),
            Some(ref ws) => {
                let r = ws.inv_ratios(g.x(i));
                (r[0], r[1])
            }
        };
        dia[i] = 1.0 - d2 * (-2.0 / h2 + r2);
        sub[i] = -d2 * (1.0 / h2 - r1 / g.h);
        sup[i] = -d2 * (1.0 / h2 + r1 / g.h);
    }
    let solve_real = |b: &[f64]| -> Result<Vec<f64>> {
        match closure {
            BoundaryClosure::Periodic => {
                solve_cyclic_tridiag(&sub, &dia, &sup, sub[0], sup[n - 1], b)
            }
            BoundaryClosure::DirichletZero => {
                let mut m = Banded::<f64>::zeros(n, 1, 1);
                for i in 0..n {
                    m.set(i, i, dia[i]);
                    if i > 0 {
                        m.set(i, i - 1, sub[i]);
                    }
                    if i + 1 < n {
                        m.set(i, i + 1, sup[i]);
                    }
                }
                Ok(m.factor()?.solve(b))
            }
        }
    };
    let re: Vec<f64> = rhs.values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = rhs.values.iter().map(|v| v.im).collect();
    let has_im = im.iter().any(|&v| v != 0.0);
    let map_err = |e: Error| match e {
        Error::LSFailure(_) => Error::PreconditionerSingular { delta },
        other => other,
    };
    let ure = solve_real(&re).map_err(map_err)?;
    let uim = if has_im {
        solve_real(&im).map_err(|e| match e {
            Error::LSFailure(_) => Error::PreconditionerSingular { delta },
            other => other,
        })?
    } else {
        vec![0.0; n]
    };
    Ok(FieldSample::new(
        g,
        ure.iter()
            .zip(&uim)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect(),
        rhs.representation,
    ))
}

pub fn precondition(rhs: &FieldSample, delta: f64) -> Result<FieldSample> {
    precondition_with(rhs, delta, BoundaryClosure::DirichletZero)
}

/// T(δ) = (1−δ²∂²)⁻¹ − id; symbol −δ²k²/(1+δ²k²), O(δ) from H¹ to L²
pub fn t_delta(u: &FieldSample, delta: f64) -> Result<FieldSample> {
    let p = precondition(u, delta)?;
    let values = p
        .values
        .iter()
        .zip(&u.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(FieldSample::new(u.grid, values, u.representation))
}

#[derive(Clone, Debug)]
pub struct CokernelData {
    /// φ = ω*⁻¹ e^{c*(0)x} q₀′, plain representation; grows linearly at +∞
    pub phi: FieldSample,
    /// ⟨ω_{0,η}^{−2}φ, φ⟩ > 0
    pub ip_norm: f64,
    pub eta: f64,
    /// Riesz direction ω_{0,η}^{−2}φ of the projector
    pub riesz: Vec<f64>,
}

pub fn cokernel(q0: &FrontSolution, s0: &SpreadingData, g: &Grid, eta: f64) -> Result<CokernelData> {
    if s0.delta != 0.0 || q0.delta != 0.0 {
        return Err(Error::InconsistentParameters(
            "cokernel is defined from the delta = 0 front".into(),
        ));
    }
    if q0.grid != *g {
        return Err(Error::InconsistentParameters("cokernel grid mismatch".into()));
    }
    let wstar = WeightSpec::critical(s0);
    let q = q0.q_values();
    let dq = gradient(&q, g.h);
    let mut phi = vec![0.0; g.n];
    for i in 0..g.n {
        let x = g.x(i);
        // ω*⁻¹e^{c*x} = e^{c*x − ℓ*(x)}: evaluate in log form to keep the
        // exponential cancellation exact
        let l = wstar.log_derivs(x)[0];
        phi[i] = (s0.c_star * x - l).exp() * dq[i];
    }
    let waux = WeightSpec::exponential(0.0, eta);
    let mut ip = 0.0;
    let mut riesz = vec![0.0; g.n];
    for i in 0..g.n {
        let winv2 = (-2.0 * waux.log_derivs(g.x(i))[0]).exp();
        riesz[i] = winv2 * phi[i];
        ip += riesz[i] * phi[i] * g.h;
    }
    if ip <= 0.0 {
        return Err(Error::DegenerateCokernel { ip_norm: ip });
    }
    Ok(CokernelData {
        phi: FieldSample::from_real(*g, &phi, Representation::Plain),
        ip_norm: ip,
        eta,
        riesz,
    })
}

/// P u = u − (⟨u,φ⟩ / ⟨ω⁻²φ,φ⟩) ω⁻²φ: the L²_{0,η}-orthogonal projector
/// onto the range of ℒ(0), realized with plain pairings on stored values
pub fn project(u: &FieldSample, ck: &CokernelData, _eta: f64) -> FieldSample {
    assert_eq!(u.grid, ck.phi.grid);
    let mut ip = Complex64::new(0.0, 0.0);
    for (a, b) in ck.phi.values.iter().zip(&u.values) {
        ip += a.re * b;
    }
    ip *= u.grid.h;
    let coef = ip / ck.ip_norm;
    let values = u
        .values
        .iter()
        .zip(&ck.riesz)
        .map(|(v, &r)| v - coef * r)
        .collect();
    FieldSample::new(u.grid, values, u.representation)
}
