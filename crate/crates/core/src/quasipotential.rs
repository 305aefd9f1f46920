//! Analytical machinery: constraint-angle dynamics, pseudo-potentials and the
//! analytic phase boundary.
//!
//! On the H = 0 shell the pseudo-momentum is parametrized by an angle,
//! p = (e^{θJ} - 1) f / 2, and θ obeys θ̇ = sin θ ΔU - (1 - cos θ) ΔV. The
//! escape-generating stationary angle is θ_s = 2 arctan(ΔU/ΔV).
//!
//! For the linear (Ornstein-Uhlenbeck) force the frozen-θ momentum field is an
//! exact gradient and the escape action is a pseudo-potential difference. For
//! the Kerr force the locked-angle field picks up a genuine curl part; its
//! gradient part defines a source-dependent approximate pseudo-potential, and
//! equating vacuum- and bright-state escape actions yields the implicit
//! analytic boundary curve implemented verbatim in [`boundary_residual`].

use crate::boundary::{BoundaryMethodTag, BoundaryPoint};
use crate::meanfield::{FixedPoint, FpLabel, Stability};
use crate::model::{
    helmholtz_laplacians, kerr_force, ou_matrix, rotation, HelmholtzData, KerrParams, Mat2,
    OUParams, Vec2, M,
};
use crate::numerics::brent_root;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, thiserror::Error)]
pub enum QuasiError {
    #[error("degenerate Helmholtz data: both Laplacians vanish")]
    DegenerateLaplacians,
    #[error("origin is not a stable focus (ε >= ν): Eq.-(10)-style pseudo-potential is not Lyapunov-consistent")]
    UnstableOrigin,
    #[error("outside the bistable strip: {0}")]
    Domain(String),
    #[error("no sign change of the boundary residual on the bistable strip for delta = {delta}")]
    NoRoot { delta: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Right-hand side of the constraint-angle flow, Eq.-style
/// θ̇ = sin(θ) ΔU - (1 - cos(θ)) ΔV.
pub fn theta_rhs(theta: f64, h: &HelmholtzData) -> f64 {
    theta.sin() * h.lap_u - (1.0 - theta.cos()) * h.lap_v
}

/// The escape-generating stationary angle θ_s ∈ (0, 2π],
/// tan(θ_s/2) = ΔU/ΔV, branch fixed by atan2(ΔU, ΔV).
pub fn stationary_angle(h: &HelmholtzData) -> Result<f64, QuasiError> {
    if h.lap_u == 0.0 && h.lap_v == 0.0 {
        return Err(QuasiError::DegenerateLaplacians);
    }
    let mut half = h.lap_u.atan2(h.lap_v);
    if half <= 0.0 {
        half += std::f64::consts::PI;
    }
    Ok(2.0 * half)
}

/// Hessian of the Ornstein-Uhlenbeck pseudo-potential,
/// cos θ_ν (ν + ε M e^{θ_ν J}), symmetrized.
pub fn ou_hessian(params: &OUParams) -> Mat2 {
    let nu = params.nu();
    let tn = params.theta_nu();
    let m = Mat2::IDENTITY.scale(nu).add(M.matmul(rotation(tn)).scale(params.epsilon));
    m.sym_part().scale(tn.cos())
}

/// Exact pseudo-potential of the stable linear force, P(0) = 0.
pub fn ou_pseudo_potential(params: &OUParams, q: Vec2) -> Result<f64, QuasiError> {
    if !params.origin_stable() {
        return Err(QuasiError::UnstableOrigin);
    }
    Ok(0.5 * ou_hessian(params).quad_form(q))
}

/// Path-independent escape action P(q_f) - P(q_i) of the linear force.
pub fn ou_escape_action(params: &OUParams, q_i: Vec2, q_f: Vec2) -> Result<f64, QuasiError> {
    Ok(ou_pseudo_potential(params, q_f)? - ou_pseudo_potential(params, q_i)?)
}

/// Source-dependent approximate pseudo-potential of the Kerr force under the
/// frozen-θ ansatz.
///
/// With θ locked at the source's stationary angle, p(q) = (e^{θ₀J} - 1) f(q)/2
/// has the form (A + |q|² B) q with constant matrices. Its gradient part is the
/// symmetric linear piece plus the radial |q|²q piece of the cubic part; the
/// rotational |q|²Jq piece is pure curl and is discarded.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrozenThetaField {
    pub theta0: f64,
    pub source_label: FpLabel,
    /// Symmetric quadratic form of the potential.
    pub quadratic_part: Mat2,
    /// Coefficient c₄ of |q|⁴ in the potential.
    pub quartic_coefficient: f64,
    params: KerrParams,
}

impl FrozenThetaField {
    pub fn potential(&self, q: Vec2) -> f64 {
        let r2 = q.norm_sq();
        0.5 * self.quadratic_part.quad_form(q) + self.quartic_coefficient * r2 * r2
    }

    /// Gradient of the stored potential.
    pub fn gradient(&self, q: Vec2) -> Vec2 {
        self.quadratic_part.apply(q) + 4.0 * self.quartic_coefficient * q.norm_sq() * q
    }

    /// The full locked-angle momentum field (e^{θ₀J} - 1) f(q) / 2,
    /// including the discarded curl part.
    pub fn momentum_field(&self, q: Vec2) -> Vec2 {
        let e = rotation(self.theta0).sub(Mat2::IDENTITY);
        0.5 * e.apply(kerr_force(&self.params, q))
    }
}

/// Builds the frozen-θ pseudo-potential anchored at a stable source.
pub fn frozen_theta_field(
    params: &KerrParams,
    source: &FixedPoint,
) -> Result<FrozenThetaField, QuasiError> {
    if source.kind != Stability::Stable {
        return Err(QuasiError::Precondition(format!(
            "frozen-θ field needs a stable source, got {:?}",
            source.kind
        )));
    }
    let theta0 = stationary_angle(&helmholtz_laplacians(params, source.q))?;
    let e = rotation(theta0).sub(Mat2::IDENTITY);
    // linear part: A = -(e^{θ₀J} - 1)(γ + δJ + εM)/2
    let lin = ou_matrix(&params.linearized());
    let a = e.matmul(lin).scale(-0.5);
    // cubic part: (γ/4)(sin θ₀ I + (1 - cos θ₀) J); only the I piece is a gradient
    let beta_i = 0.25 * params.gamma * theta0.sin();
    Ok(FrozenThetaField {
        theta0,
        source_label: source.label,
        quadratic_part: a.sym_part(),
        quartic_coefficient: beta_i / 4.0,
        params: *params,
    })
}

/// Frozen-θ escape action P(target) - P(source) in the source's field.
pub fn frozen_theta_action(
    params: &KerrParams,
    source: &FixedPoint,
    target: &FixedPoint,
) -> Result<f64, QuasiError> {
    let field = frozen_theta_field(params, source)?;
    Ok(field.potential(target.q) - field.potential(source.q))
}

/// LHS - RHS of the implicit analytic boundary equation, exactly as printed:
///
/// ```text
/// δ (√(ε²-γ²) + δ)² (γ² + (2√(ε²-γ²) - δ)²) / (4 √(ε²-γ²) (γ² + δ²))
///   = ε² - γ² - (δ - √(ε²-γ²) + γ √((δ² - ε² + γ²)/ε²))²
/// ```
pub fn boundary_residual(delta: f64, epsilon: f64, gamma: f64) -> Result<f64, QuasiError> {
    if !(epsilon > gamma) {
        return Err(QuasiError::Domain(format!(
            "epsilon > gamma violated: epsilon = {epsilon}, gamma = {gamma}"
        )));
    }
    let s = (epsilon * epsilon - gamma * gamma).sqrt();
    if !(delta <= -s) {
        return Err(QuasiError::Domain(format!(
            "delta <= -sqrt(epsilon^2 - gamma^2) violated: delta = {delta}, -sqrt = {}",
            -s
        )));
    }
    let nu_sq = gamma * gamma + delta * delta;
    let lhs = delta * (s + delta).powi(2) * (gamma * gamma + (2.0 * s - delta).powi(2))
        / (4.0 * s * nu_sq);
    let inner = ((delta * delta - epsilon * epsilon + gamma * gamma) / (epsilon * epsilon)).sqrt();
    let rhs = epsilon * epsilon - gamma * gamma - (delta - s + gamma * inner).powi(2);
    Ok(lhs - rhs)
}

/// Root of [`boundary_residual`] in ε over the bistable strip, by Brent's
/// method on the a-priori bracket (γ, √(γ²+δ²)).
pub fn boundary_epsilon(delta: f64, gamma: f64, tol: f64) -> Result<BoundaryPoint, QuasiError> {
    if !(delta < 0.0) {
        return Err(QuasiError::Domain(format!("delta < 0 violated: delta = {delta}")));
    }
    let lo = 1.000001 * gamma;
    let hi = 0.999999 * (gamma * gamma + delta * delta).sqrt();
    if hi <= lo {
        return Err(QuasiError::NoRoot { delta });
    }
    let f = |eps: f64| boundary_residual(delta, eps, gamma).unwrap_or(f64::NAN);
    let (fa, fb) = (f(lo), f(hi));
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(QuasiError::NoRoot { delta });
    }
    let eps = brent_root(f, lo, hi, tol, 200).map_err(|_| QuasiError::NoRoot { delta })?;
    let residual = boundary_residual(delta, eps, gamma)?;
    Ok(BoundaryPoint {
        delta,
        epsilon_star: eps,
        gamma,
        method: BoundaryMethodTag::AnalyticEq11,
        residual,
    })
}

/// [`boundary_epsilon`] over a δ grid; failed points are reported as gaps,
/// never aborting the sweep.
pub fn trace_boundary(
    delta_grid: &[f64],
    gamma: f64,
    tol: f64,
) -> Vec<(f64, Result<BoundaryPoint, QuasiError>)> {
    delta_grid
        .par_iter()
        .map(|&d| (d, boundary_epsilon(d, gamma, tol)))
        .collect()
}
