//! Model parameters, 2D phase-space primitives and force fields.
//!
//! The classical limit of the two-photon driven Kerr oscillator reduces to a
//! particle at position `q = 2(Re α, Im α)` subject to the deterministic force
//!
//! ```text
//! f(q) = -(γ + (δ + γ|q|²/2) J + ε M) q,     J = [[0,-1],[1,0]],  M = [[0,1],[1,0]]
//! ```
//!
//! The force splits into a pure gradient and a pure curl part,
//! `f = -∇U - J∇V`, with `U = γ|q|²/2 + εxy` and `V = δ|q|²/2 + γ|q|⁴/8`.
//! The Laplacians of `U` and `V` drive the constraint-angle dynamics used by
//! the pseudo-potential machinery.
//!
//! Everything here is a pure function of its inputs; all values are plain
//! `Copy` data and freely shareable across threads.

use serde::Serialize;
use std::ops::{Add, Mul, Neg, Sub};

/// Physical parameters of the Kerr oscillator in the drive frame.
///
/// `gamma` sets the unit of time; `delta` is the detuning, `epsilon` the
/// two-photon drive amplitude and `u` the photon-photon interaction, which
/// doubles as the noise strength of the equivalent Langevin process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KerrParams {
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub u: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("u = 0 leaves the photon-number scale undefined")]
    UndefinedScale,
}

impl KerrParams {
    pub fn new(gamma: f64, delta: f64, epsilon: f64, u: f64) -> Result<Self, ModelError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(ModelError::InvalidParams(format!("gamma must be > 0, got {gamma}")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(ModelError::InvalidParams(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(u >= 0.0) || !u.is_finite() {
            return Err(ModelError::InvalidParams(format!("u must be >= 0, got {u}")));
        }
        if !delta.is_finite() {
            return Err(ModelError::InvalidParams("delta must be finite".into()));
        }
        Ok(Self { gamma, delta, epsilon, u })
    }

    /// Canonical γ = 1 parameter set from the dimensionless ratios δ/γ, ε/γ, U/γ.
    pub fn from_ratios(delta_over_gamma: f64, epsilon_over_gamma: f64, u_over_gamma: f64) -> Result<Self, ModelError> {
        Self::new(1.0, delta_over_gamma, epsilon_over_gamma, u_over_gamma)
    }

    /// Drops the cubic term, keeping the linear (Ornstein-Uhlenbeck) force.
    pub fn linearized(&self) -> OUParams {
        OUParams { gamma: self.gamma, delta: self.delta, epsilon: self.epsilon }
    }
}

/// Parameters of the linear (Ornstein-Uhlenbeck) force `f = -(γ + δJ + εM) q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OUParams {
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl OUParams {
    pub fn new(gamma: f64, delta: f64, epsilon: f64) -> Result<Self, ModelError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(ModelError::InvalidParams(format!("gamma must be > 0, got {gamma}")));
        }
        if !delta.is_finite() || !epsilon.is_finite() {
            return Err(ModelError::InvalidParams("delta, epsilon must be finite".into()));
        }
        Ok(Self { gamma, delta, epsilon })
    }

    /// Polar modulus ν = √(γ² + δ²) of the decay-detuning pair.
    pub fn nu(&self) -> f64 {
        self.gamma.hypot(self.delta)
    }

    /// Polar angle θ_ν with γ = ν cos θ_ν, δ = ν sin θ_ν.
    pub fn theta_nu(&self) -> f64 {
        self.delta.atan2(self.gamma)
    }

    /// The origin is a stable focus iff ε < ν.
    pub fn origin_stable(&self) -> bool {
        self.epsilon < self.nu()
    }
}

/// A point or vector in the two-dimensional classical phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product, `self.x * o.y - self.y * o.x`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// A real 2x2 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2 {
    pub a: f64, // row 0, col 0
    pub b: f64, // row 0, col 1
    pub c: f64, // row 1, col 0
    pub d: f64, // row 1, col 1
}

/// The symplectic rotation generator, J² = -I.
pub const J: Mat2 = Mat2 { a: 0.0, b: -1.0, c: 1.0, d: 0.0 };
/// The mirror matrix coupling to the two-photon drive, M² = I.
pub const M: Mat2 = Mat2 { a: 0.0, b: 1.0, c: 1.0, d: 0.0 };

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn matmul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn sym_part(self) -> Mat2 {
        let off = 0.5 * (self.b + self.c);
        Mat2::new(self.a, off, off, self.d)
    }

    pub fn solve(self, rhs: Vec2) -> Option<Vec2> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(Vec2::new(
            (self.d * rhs.x - self.b * rhs.y) / det,
            (self.a * rhs.y - self.c * rhs.x) / det,
        ))
    }

    /// Quadratic form qᵀ A q.
    pub fn quad_form(self, q: Vec2) -> f64 {
        q.dot(self.apply(q))
    }

    /// Eigenvalues as (re, im) pairs; complex pairs share the real part.
    pub fn eigenvalues(self) -> [(f64, f64); 2] {
        let tr = self.trace();
        let disc = tr * tr - 4.0 * self.det();
        if disc >= 0.0 {
            let r = disc.sqrt();
            [((tr + r) / 2.0, 0.0), ((tr - r) / 2.0, 0.0)]
        } else {
            let w = (-disc).sqrt() / 2.0;
            [(tr / 2.0, w), (tr / 2.0, -w)]
        }
    }
}

/// Rotation ​e^{θJ} = cos θ · I + sin θ · J.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Laplacians of the gradient potential U and the curl potential V at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelmholtzData {
    pub lap_u: f64,
    pub lap_v: f64,
}

/// Linear-plus-cubic matrix γ + (δ + γ|q|²/2)J + εM acting in `f = -A(q) q`.
fn force_matrix(params: &KerrParams, q: Vec2) -> Mat2 {
    let eff_detuning = params.delta + 0.5 * params.gamma * q.norm_sq();
    Mat2::IDENTITY
        .scale(params.gamma)
        .add(J.scale(eff_detuning))
        .add(M.scale(params.epsilon))
}

/// Deterministic mean-field force of the Kerr oscillator.
///
/// Antisymmetric under q → -q (the Z₂ symmetry of the two-photon drive).
pub fn kerr_force(params: &KerrParams, q: Vec2) -> Vec2 {
    -force_matrix(params, q).apply(q)
}

/// Jacobian ∂f/∂q of the Kerr force.
///
/// The cubic term contributes -γ (Jq) qᵀ on top of the linear matrix.
pub fn kerr_jacobian(params: &KerrParams, q: Vec2) -> Mat2 {
    let lin = force_matrix(params, q).scale(-1.0);
    let jq = J.apply(q);
    let outer = Mat2::new(jq.x * q.x, jq.x * q.y, jq.y * q.x, jq.y * q.y);
    lin.sub(outer.scale(params.gamma))
}

/// Laplacians (ΔU, ΔV) of the Helmholtz potentials of the Kerr force.
///
/// Closed forms ΔU = 2γ and ΔV = 2δ + 2γ|q|², derived by matching
/// `-∇U - J∇V` to the force and pinned by finite-difference tests.
pub fn helmholtz_laplacians(params: &KerrParams, q: Vec2) -> HelmholtzData {
    HelmholtzData {
        lap_u: 2.0 * params.gamma,
        lap_v: 2.0 * params.delta + 2.0 * params.gamma * q.norm_sq(),
    }
}

/// Gradient potential U(q) = γ|q|²/2 + ε x y of the Kerr force.
pub fn potential_u(params: &KerrParams, q: Vec2) -> f64 {
    0.5 * params.gamma * q.norm_sq() + params.epsilon * q.x * q.y
}

/// Curl potential V(q) = δ|q|²/2 + γ|q|⁴/8 of the Kerr force.
pub fn potential_v(params: &KerrParams, q: Vec2) -> f64 {
    let r2 = q.norm_sq();
    0.5 * params.delta * r2 + params.gamma * r2 * r2 / 8.0
}

/// Linear Ornstein-Uhlenbeck force `-(γ + δJ + εM) q`.
pub fn ou_force(params: &OUParams, q: Vec2) -> Vec2 {
    -ou_matrix(params).apply(q)
}

/// The matrix γ + δJ + εM of the linear force.
pub fn ou_matrix(params: &OUParams) -> Mat2 {
    Mat2::IDENTITY
        .scale(params.gamma)
        .add(J.scale(params.delta))
        .add(M.scale(params.epsilon))
}

/// Physical photon number ⟨a†a⟩ = γ|q|²/(4U) of a classical position.
pub fn photon_number_estimate(params: &KerrParams, q: Vec2) -> Result<f64, ModelError> {
    if params.u <= 0.0 {
        return Err(ModelError::UndefinedScale);
    }
    Ok(params.gamma * q.norm_sq() / (4.0 * params.u))
}
