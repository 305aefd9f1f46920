//! Interchangeable strategies for locating the first-order phase boundary.
//!
//! Three methods produce the same artifact, a (δ, ε*) point on the transition
//! line: the analytic implicit equation, the equal-action condition on
//! numerically shot instantons, and the maximum-photon-slope criterion on the
//! Lindblad oracle. Each sits behind [`BoundaryMethod`] and is registered by
//! name, so sweeps and the CLI select them at runtime.

use crate::instanton::{shoot_escape, InstantonError, ShootingSchedule};
use crate::meanfield::{find_fixed_points, FpLabel};
use crate::model::KerrParams;
use crate::numerics::brent_root;
use rayon::prelude::*;
use serde::Serialize;

/// Which algorithm produced a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMethodTag {
    AnalyticEq11,
    EqualActionNumeric,
    LindbladOracle,
}

impl BoundaryMethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryMethodTag::AnalyticEq11 => "analytic_eq11",
            BoundaryMethodTag::EqualActionNumeric => "equal_action_numeric",
            BoundaryMethodTag::LindbladOracle => "lindblad_oracle",
        }
    }
}

/// A located transition point ε*(δ), tagged by its method.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryPoint {
    pub delta: f64,
    pub epsilon_star: f64,
    pub gamma: f64,
    pub method: BoundaryMethodTag,
    /// Method-specific closure measure: equation residual, action imbalance,
    /// or final grid spacing.
    pub residual: f64,
}

impl BoundaryPoint {
    /// ε* must lie strictly inside the bistable strip γ < ε < √(γ²+δ²).
    pub fn in_strip(&self) -> bool {
        self.epsilon_star > self.gamma
            && self.epsilon_star < self.gamma.hypot(self.delta)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Analytic(#[from] crate::quasipotential::QuasiError),
    #[error(transparent)]
    Lindblad(#[from] crate::lindblad::LindbladError),
    #[error("instanton shooting failed at epsilon = {epsilon}: {source}")]
    Shooting { epsilon: f64, source: InstantonError },
    #[error("no equal-action crossing inside the bistable strip for delta = {delta}")]
    NoCrossing { delta: f64 },
    #[error("{0}")]
    Other(String),
}

/// One boundary-locating algorithm, selectable by name.
pub trait BoundaryMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn tag(&self) -> BoundaryMethodTag;
    fn locate(&self, delta: f64, gamma: f64) -> Result<BoundaryPoint, BoundaryError>;
}

/// Analytic implicit-equation root (delegates to the quasipotential module).
#[derive(Debug, Clone)]
pub struct AnalyticEq11 {
    pub tol: f64,
}

impl Default for AnalyticEq11 {
    fn default() -> Self {
        Self { tol: 1e-10 }
    }
}

impl BoundaryMethod for AnalyticEq11 {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn tag(&self) -> BoundaryMethodTag {
        BoundaryMethodTag::AnalyticEq11
    }

    fn locate(&self, delta: f64, gamma: f64) -> Result<BoundaryPoint, BoundaryError> {
        Ok(crate::quasipotential::boundary_epsilon(delta, gamma, self.tol * gamma)?)
    }
}

/// Equal numerical escape actions from vacuum and bright states.
#[derive(Debug, Clone)]
pub struct EqualActionNumeric {
    pub schedule: ShootingSchedule,
    /// Absolute ε tolerance of the root, in units of γ.
    pub eps_tol: f64,
    /// Fraction of the strip width kept away from both edges when bracketing.
    pub edge_margin: f64,
    /// Bracketing scan resolution.
    pub scan_points: usize,
}

impl Default for EqualActionNumeric {
    fn default() -> Self {
        Self {
            schedule: ShootingSchedule::default(),
            eps_tol: 2e-4,
            edge_margin: 0.12,
            scan_points: 5,
        }
    }
}

impl EqualActionNumeric {
    /// S_vacuum→saddle - S_bright→saddle at one drive amplitude. The bright
    /// state may connect to either saddle of the symmetric pair; the escape
    /// action is the smaller of the two converged shots.
    pub fn action_gap(&self, delta: f64, gamma: f64, epsilon: f64) -> Result<f64, BoundaryError> {
        let params = KerrParams::new(gamma, delta, epsilon, 0.0)
            .map_err(|e| BoundaryError::Other(e.to_string()))?;
        let set = find_fixed_points(&params);
        let missing = |what: &str| BoundaryError::Other(format!("no {what} at epsilon = {epsilon}"));
        let vacuum = *set.vacuum();
        let bright = *set.get(FpLabel::BrightPlus).ok_or_else(|| missing("bright state"))?;
        let sad_p = *set.get(FpLabel::SaddlePlus).ok_or_else(|| missing("saddle"))?;
        let sad_m = *set.get(FpLabel::SaddleMinus).ok_or_else(|| missing("saddle"))?;

        let s_vac = shoot_escape(&params, &vacuum, &sad_p, &self.schedule)
            .map_err(|source| BoundaryError::Shooting { epsilon, source })?
            .total_action();

        let mut s_bright = f64::INFINITY;
        let mut last_err = None;
        for target in [&sad_p, &sad_m] {
            match shoot_escape(&params, &bright, target, &self.schedule) {
                Ok(path) => s_bright = s_bright.min(path.total_action()),
                Err(e) => last_err = Some(e),
            }
        }
        if !s_bright.is_finite() {
            return Err(BoundaryError::Shooting {
                epsilon,
                source: last_err.unwrap_or(InstantonError::Precondition("no bright escape".into())),
            });
        }
        Ok(s_vac - s_bright)
    }
}

impl BoundaryMethod for EqualActionNumeric {
    fn name(&self) -> &'static str {
        "equal-action"
    }

    fn tag(&self) -> BoundaryMethodTag {
        BoundaryMethodTag::EqualActionNumeric
    }

    fn locate(&self, delta: f64, gamma: f64) -> Result<BoundaryPoint, BoundaryError> {
        let strip_hi = gamma.hypot(delta);
        let width = strip_hi - gamma;
        let lo = gamma + self.edge_margin * width;
        let hi = strip_hi - self.edge_margin * width;
        // the gap S_vac - S_bright decreases through zero across the strip;
        // scan for a sign change, then polish with Brent
        let n = self.scan_points.max(3);
        let mut prev: Option<(f64, f64)> = None;
        let mut bracket = None;
        for i in 0..n {
            let eps = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let g = self.action_gap(delta, gamma, eps)?;
            if let Some((e0, g0)) = prev {
                if g0.signum() != g.signum() {
                    bracket = Some((e0, eps));
                    break;
                }
            }
            prev = Some((eps, g));
        }
        let (a, b) = bracket.ok_or(BoundaryError::NoCrossing { delta })?;
        let mut failure = None;
        let root = brent_root(
            |eps| match self.action_gap(delta, gamma, eps) {
                Ok(g) => g,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            },
            a,
            b,
            self.eps_tol * gamma,
            60,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let eps = root.map_err(|_| BoundaryError::NoCrossing { delta })?;
        let residual = self.action_gap(delta, gamma, eps)?;
        Ok(BoundaryPoint {
            delta,
            epsilon_star: eps,
            gamma,
            method: BoundaryMethodTag::EqualActionNumeric,
            residual,
        })
    }
}

/// Maximum-photon-slope point of the Lindblad steady state at finite U.
#[derive(Debug, Clone)]
pub struct LindbladOracle {
    pub u_over_gamma: f64,
    pub tol: f64,
    /// Fraction of the strip width kept away from both edges.
    pub edge_margin: f64,
}

impl Default for LindbladOracle {
    fn default() -> Self {
        Self { u_over_gamma: 0.2, tol: 5e-3, edge_margin: 0.04 }
    }
}

impl BoundaryMethod for LindbladOracle {
    fn name(&self) -> &'static str {
        "lindblad"
    }

    fn tag(&self) -> BoundaryMethodTag {
        BoundaryMethodTag::LindbladOracle
    }

    fn locate(&self, delta: f64, gamma: f64) -> Result<BoundaryPoint, BoundaryError> {
        let strip_hi = gamma.hypot(delta);
        let width = strip_hi - gamma;
        let range = (gamma + self.edge_margin * width, strip_hi - self.edge_margin * width);
        Ok(crate::lindblad::locate_numeric_boundary(
            delta,
            gamma,
            self.u_over_gamma * gamma,
            range,
            self.tol,
        )?)
    }
}

/// Name-keyed registry of boundary strategies.
#[derive(Default)]
pub struct BoundaryRegistry {
    methods: Vec<Box<dyn BoundaryMethod>>,
}

impl BoundaryRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// All three strategies with the given Lindblad interaction strength.
    pub fn with_defaults(u_over_gamma: f64) -> Self {
        let mut reg = Self::new();
        reg.register(Box::new(AnalyticEq11::default()));
        reg.register(Box::new(EqualActionNumeric::default()));
        reg.register(Box::new(LindbladOracle { u_over_gamma, ..Default::default() }));
        reg
    }

    pub fn register(&mut self, method: Box<dyn BoundaryMethod>) {
        self.methods.push(method);
    }

    pub fn get(&self, name: &str) -> Option<&dyn BoundaryMethod> {
        self.methods.iter().find(|m| m.name() == name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn BoundaryMethod> {
        self.methods.iter().map(|b| b.as_ref())
    }
}

/// Applies one method across a δ grid; failed points are gaps, not aborts.
pub fn trace_method(
    method: &dyn BoundaryMethod,
    delta_grid: &[f64],
    gamma: f64,
) -> Vec<(f64, Result<BoundaryPoint, BoundaryError>)> {
    delta_grid
        .par_iter()
        .map(|&d| (d, method.locate(d, gamma)))
        .collect()
}

/// Pairwise relative ε* differences between methods at one δ.
pub fn relative_differences(points: &[BoundaryPoint]) -> Vec<(BoundaryMethodTag, BoundaryMethodTag, f64)> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let (a, b) = (&points[i], &points[j]);
            let rel = (a.epsilon_star - b.epsilon_star).abs()
                / a.epsilon_star.abs().max(b.epsilon_star.abs());
            out.push((a.method, b.method, rel));
        }
    }
    out
}
