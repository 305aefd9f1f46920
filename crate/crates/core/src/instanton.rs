//! Least-action escape paths of the auxiliary Hamiltonian system.
//!
//! The escape problem lives in the extended phase space (q, p) with
//! H = |p|² + p·f(q), flow q̇ = 2p + f, ṗ = -(∂f/∂q)ᵀ p. Escape instantons
//! are heteroclinic connections from a stable fixed point (q_s, 0) to a saddle
//! (q_t, 0); they carry H = 0 and action S = ∫|p|² dt.
//!
//! The boundary-value problem is solved by shooting from the unstable
//! subspace of the source: the initial offset is parametrized by a single
//! mixing angle φ inside that two-dimensional subspace, and the total time τ
//! is raised incrementally, warm-starting each stage from the previous φ.
//! Direct shooting at large τ fails because the trajectory is exponentially
//! sensitive to φ; the continuation keeps the minimizer inside the shrinking
//! basin.

use crate::meanfield::{classify_regime, FixedPoint, RegimeTag, Stability};
use crate::model::{kerr_force, kerr_jacobian, KerrParams, Mat2, Vec2};
use crate::numerics::unwrap_angles;
use crate::ode::{integrate, Dopri5Options, OdeError};
use num_complex::Complex64;
use serde::Serialize;
use std::ops::ControlFlow;

/// A point of the extended phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub q: Vec2,
    pub p: Vec2,
}

impl PhasePoint {
    pub fn new(q: Vec2, p: Vec2) -> Self {
        Self { q, p }
    }
}

/// The auxiliary Hamiltonian H = |p|² + p·f(q).
pub fn hamiltonian(params: &KerrParams, s: PhasePoint) -> f64 {
    s.p.norm_sq() + s.p.dot(kerr_force(params, s.q))
}

/// Hamilton's equations: dq/dt = 2p + f(q), dp/dt = -(∂f/∂q)ᵀ p.
pub fn flow_rhs(params: &KerrParams, s: PhasePoint) -> (Vec2, Vec2) {
    let f = kerr_force(params, s.q);
    let jac_t = kerr_jacobian(params, s.q).transpose();
    (2.0 * s.p + f, -jac_t.apply(s.p))
}

/// A time-discretized trajectory with its cumulative action.
#[derive(Debug, Clone, Serialize)]
pub struct InstantonPath {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    /// Cumulative S(t) = ∫ p·q̇ - H dt = ∫ |p|² dt.
    pub action: Vec<f64>,
    /// Unwrapped constraint angle θ(t); empty until reconstructed.
    pub theta: Vec<f64>,
    pub h_residual_max: f64,
    pub source: Option<FixedPoint>,
    pub target: Option<FixedPoint>,
    pub tau: f64,
    pub shooting: Option<ShootingInfo>,
}

impl InstantonPath {
    pub fn total_action(&self) -> f64 {
        *self.action.last().unwrap_or(&0.0)
    }
}

/// Total action of a converged path.
pub fn action_of(path: &InstantonPath) -> f64 {
    path.total_action()
}

/// Diagnostics of the shooting run that produced a path.
#[derive(Debug, Clone, Serialize)]
pub struct ShootingInfo {
    pub phi: f64,
    pub miss: f64,
    /// (τ, φ, miss, S) per continuation stage.
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub tau: f64,
    pub phi: f64,
    pub miss: f64,
    pub action: f64,
}

/// Schedule and tolerances of the incremental-τ shooting.
#[derive(Debug, Clone, Serialize)]
pub struct ShootingSchedule {
    /// Strictly increasing total times, in units of 1/γ.
    pub tau_list: Vec<f64>,
    /// Initial offset, relative to max(1, |q_source|).
    pub eta: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Cap on objective evaluations per continuation stage.
    pub max_iter: usize,
    /// Terminal miss |q(τ)-q_target| + |p(τ)| for acceptance.
    pub target_tol: f64,
    /// Relative action change between stages declaring τ-convergence.
    pub action_tol: f64,
    /// Geometric τ extension factor past the end of `tau_list`.
    pub tau_grow: f64,
    pub tau_max: f64,
    /// Number of uniformly spaced samples in the returned path.
    pub n_samples: usize,
    /// φ grid resolution of the first (global) stage.
    pub coarse_scan: usize,
}

impl Default for ShootingSchedule {
    fn default() -> Self {
        Self {
            tau_list: vec![10.0, 15.0, 22.0, 33.0, 50.0],
            eta: 1e-5,
            rtol: 1e-10,
            atol: 1e-12,
            max_iter: 400,
            target_tol: 1e-5,
            action_tol: 1e-7,
            tau_grow: 1.5,
            tau_max: 130.0,
            n_samples: 2001,
            coarse_scan: 720,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InstantonError {
    #[error("integration became stiff / blew up at t = {t:.4e}")]
    Stiff { t: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("shooting did not converge: best miss {best_miss:.3e} exceeds target {target_tol:.3e} at tau = {tau}")]
    NoConvergence { best_miss: f64, target_tol: f64, tau: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("constraint angle undefined: |f| = {fnorm:.3e} below 1e-12 at interior sample {index}")]
    SingularTheta { index: usize, fnorm: f64 },
    #[error("degenerate unstable subspace at the source")]
    DegenerateSubspace,
}

fn ode_err(e: OdeError) -> InstantonError {
    match e {
        OdeError::StepSizeUnderflow { t } => InstantonError::Stiff { t },
        other => InstantonError::Integration(other.to_string()),
    }
}

type State5 = [f64; 5]; // qx, qy, px, py, S

fn pack(s: PhasePoint, action: f64) -> State5 {
    [s.q.x, s.q.y, s.p.x, s.p.y, action]
}

fn unpack(y: &State5) -> (PhasePoint, f64) {
    (PhasePoint::new(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3])), y[4])
}

fn rhs(params: &KerrParams) -> impl Fn(f64, &State5) -> State5 + '_ {
    move |_t, y| {
        let (s, _) = unpack(y);
        let (dq, dp) = flow_rhs(params, s);
        [dq.x, dq.y, dp.x, dp.y, s.p.norm_sq()]
    }
}

/// Integrates the Hamiltonian flow for time `tau`, sampling the trajectory,
/// the running action and the energy residual on a uniform grid.
pub fn integrate_path(
    params: &KerrParams,
    start: PhasePoint,
    tau: f64,
    opts: &Dopri5Options,
) -> Result<InstantonPath, InstantonError> {
    integrate_path_sampled(params, start, tau, opts, 2001)
}

pub fn integrate_path_sampled(
    params: &KerrParams,
    start: PhasePoint,
    tau: f64,
    opts: &Dopri5Options,
    n_samples: usize,
) -> Result<InstantonPath, InstantonError> {
    assert!(tau > 0.0 && n_samples >= 2);
    let f = rhs(params);
    let y0 = pack(start, 0.0);
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);
    let mut action = Vec::with_capacity(n_samples);
    let mut h_max = 0.0_f64;
    let dt = tau / (n_samples - 1) as f64;
    let push = |y: &State5, t: f64, times: &mut Vec<f64>, states: &mut Vec<PhasePoint>, action: &mut Vec<f64>, h_max: &mut f64| {
        let (s, a) = unpack(y);
        *h_max = h_max.max(hamiltonian(params, s).abs());
        times.push(t);
        states.push(s);
        action.push(a);
    };

    push(&y0, 0.0, &mut times, &mut states, &mut action, &mut h_max);
    let mut next = 1usize;

    integrate(&f, 0.0, y0, tau, opts, |step| {
        while next < n_samples {
            let t = dt * next as f64;
            if t > step.t1 + 1e-12 * tau {
                break;
            }
            let y = if t >= step.t1 { step.y1 } else { step.eval(t) };
            push(&y, t.min(tau), &mut times, &mut states, &mut action, &mut h_max);
            next += 1;
        }
        ControlFlow::Continue(())
    })
    .map_err(ode_err)?;

    // guard against the final sample being skipped by round-off
    if times.len() < n_samples {
        let y_end = pack(*states.last().unwrap(), *action.last().unwrap());
        push(&y_end, tau, &mut times, &mut states, &mut action, &mut h_max);
    }

    Ok(InstantonPath {
        times,
        states,
        action,
        theta: Vec::new(),
        h_residual_max: h_max,
        source: None,
        target: None,
        tau,
        shooting: None,
    })
}

/// Real basis of the unstable subspace of the extended linearization at a
/// stable fixed point (q_s, 0).
///
/// The extended Jacobian is block triangular with blocks F and -Fᵀ, so the
/// expanding directions are the eigenvectors of -Fᵀ (positive real parts),
/// with δq recovered from (μI - F) δq = 2 δp.
struct UnstableSubspace {
    /// Two orthonormal spanning 4-vectors (δq, δp).
    basis: [[f64; 4]; 2],
}

impl UnstableSubspace {
    fn direction(&self, phi: f64) -> [f64; 4] {
        let (s, c) = phi.sin_cos();
        let mut v = [0.0; 4];
        for i in 0..4 {
            v[i] = c * self.basis[0][i] + s * self.basis[1][i];
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| x / n)
    }
}

fn complex_solve_2x2(mu: Complex64, f: Mat2, w: [Complex64; 2]) -> Option<[Complex64; 2]> {
    // (mu I - F) v = w
    let a = mu - f.a;
    let b = Complex64::from(-f.b);
    let c = Complex64::from(-f.c);
    let d = mu - f.d;
    let det = a * d - b * c;
    if det.norm() < 1e-300 {
        return None;
    }
    Some([(d * w[0] - b * w[1]) / det, (a * w[1] - c * w[0]) / det])
}

fn unstable_subspace(params: &KerrParams, q_src: Vec2) -> Result<UnstableSubspace, InstantonError> {
    let f = kerr_jacobian(params, q_src);
    // eigen of G = -Fᵀ
    let g = f.transpose().scale(-1.0);
    let tr = g.trace();
    let disc = tr * tr - 4.0 * g.det();
    let make4 = |dq: [Complex64; 2], dp: [Complex64; 2], phase: Complex64| -> [f64; 4] {
        [
            (phase * dq[0]).re,
            (phase * dq[1]).re,
            (phase * dp[0]).re,
            (phase * dp[1]).re,
        ]
    };
    if disc < 0.0 {
        // complex pair μ = tr/2 ± i ω; both have positive real part at a stable source
        let mu = Complex64::new(tr / 2.0, (-disc).sqrt() / 2.0);
        if mu.re <= 0.0 {
            return Err(InstantonError::Precondition(
                "source fixed point is not stable (no expanding pair)".into(),
            ));
        }
        // eigenvector of G for eigenvalue mu: rows of (G - mu I) are proportional
        let w = pick_eigvec(g, mu);
        let dq = complex_solve_2x2(mu, f, [2.0 * w[0], 2.0 * w[1]])
            .ok_or(InstantonError::DegenerateSubspace)?;
        let e1 = make4(dq, w, Complex64::new(1.0, 0.0));
        let e2 = make4(dq, w, Complex64::new(0.0, 1.0));
        Ok(UnstableSubspace { basis: orthonormalize(e1, e2)? })
    } else {
        let r = disc.sqrt();
        let mus = [(tr + r) / 2.0, (tr - r) / 2.0];
        if mus[1] <= 0.0 {
            return Err(InstantonError::Precondition(
                "source fixed point is not stable (unstable subspace not 2D)".into(),
            ));
        }
        let mut basis = [[0.0; 4]; 2];
        for (i, &mu) in mus.iter().enumerate() {
            let muc = Complex64::from(mu);
            let w = pick_eigvec(g, muc);
            let dq = complex_solve_2x2(muc, f, [2.0 * w[0], 2.0 * w[1]])
                .ok_or(InstantonError::DegenerateSubspace)?;
            basis[i] = make4(dq, w, Complex64::from(1.0));
        }
        let [e1, e2] = basis;
        Ok(UnstableSubspace { basis: orthonormalize(e1, e2)? })
    }
}

fn pick_eigvec(g: Mat2, mu: Complex64) -> [Complex64; 2] {
    // (G - mu)w = 0 -> w from the larger of the two row constructions
    let cand1 = [Complex64::from(g.b), mu - g.a];
    let cand2 = [mu - g.d, Complex64::from(g.c)];
    let n1 = cand1[0].norm_sqr() + cand1[1].norm_sqr();
    let n2 = cand2[0].norm_sqr() + cand2[1].norm_sqr();
    if n1 >= n2 {
        cand1
    } else {
        cand2
    }
}

fn orthonormalize(e1: [f64; 4], e2: [f64; 4]) -> Result<[[f64; 4]; 2], InstantonError> {
    let n1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n1 < 1e-300 {
        return Err(InstantonError::DegenerateSubspace);
    }
    let u1 = e1.map(|x| x / n1);
    let proj: f64 = u1.iter().zip(&e2).map(|(a, b)| a * b).sum();
    let mut v2 = [0.0; 4];
    for i in 0..4 {
        v2[i] = e2[i] - proj * u1[i];
    }
    let n2 = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n2 < 1e-12 * (e2.iter().map(|x| x * x).sum::<f64>().sqrt()).max(1e-300) {
        return Err(InstantonError::DegenerateSubspace);
    }
    Ok([u1, v2.map(|x| x / n2)])
}

/// Endpoint miss and action of a single shot at mixing angle φ and horizon τ.
fn shoot_once(
    params: &KerrParams,
    subspace: &UnstableSubspace,
    q_src: Vec2,
    q_tgt: Vec2,
    eta: f64,
    phi: f64,
    tau: f64,
    opts: &Dopri5Options,
) -> Result<(f64, f64), InstantonError> {
    let dir = subspace.direction(phi);
    let y0: State5 = [
        q_src.x + eta * dir[0],
        q_src.y + eta * dir[1],
        eta * dir[2],
        eta * dir[3],
        0.0,
    ];
    let f = rhs(params);
    let (_, y) = integrate(&f, 0.0, y0, tau, opts, |_| ControlFlow::Continue(())).map_err(ode_err)?;
    let (s, action) = unpack(&y);
    let miss = (s.q - q_tgt).norm() + s.p.norm();
    Ok((miss, action))
}

/// Least-action escape path from a stable fixed point to a saddle, via
/// incremental-τ shooting over the mixing angle φ.
pub fn shoot_escape(
    params: &KerrParams,
    source: &FixedPoint,
    target: &FixedPoint,
    schedule: &ShootingSchedule,
) -> Result<InstantonPath, InstantonError> {
    if source.kind != Stability::Stable {
        return Err(InstantonError::Precondition("source must be a stable fixed point".into()));
    }
    if source.q == target.q {
        return Err(InstantonError::Precondition("source and target coincide".into()));
    }
    if target.kind == Stability::Stable {
        return Err(InstantonError::Precondition("target must be a saddle or unstable point".into()));
    }
    let regime = classify_regime(params);
    if regime.tag != RegimeTag::Bistable {
        return Err(InstantonError::Precondition(format!(
            "parameters are in the {} regime, escape shooting needs bistability",
            regime.tag.as_str()
        )));
    }
    if regime.degenerate {
        return Err(InstantonError::Precondition(
            "parameters are degenerate (regime boundary)".into(),
        ));
    }

    let subspace = unstable_subspace(params, source.q)?;
    let eta = schedule.eta * 1.0_f64.max(source.q.norm());
    let opts = Dopri5Options { rtol: schedule.rtol, atol: schedule.atol, ..Default::default() };

    let mut taus = schedule.tau_list.clone();
    assert!(!taus.is_empty() && taus.windows(2).all(|w| w[1] > w[0]));

    let eval_count = std::cell::Cell::new(0usize);
    let miss_of = |phi: f64, tau: f64| -> f64 {
        eval_count.set(eval_count.get() + 1);
        shoot_once(params, &subspace, source.q, target.q, eta, phi, tau, &opts)
            .map(|(m, _)| m)
            .unwrap_or(f64::INFINITY)
    };

    let mut stages: Vec<StageRecord> = Vec::new();
    let mut phi_best = 0.0;
    let mut prev_shift = 0.0_f64;
    let tau_phi_tol = 1e-14;
    let mut k = 0usize;
    loop {
        let tau = taus[k];
        eval_count.set(0);
        let (phi, miss) = if stages.is_empty() {
            // global scan over the full circle
            let n = schedule.coarse_scan.max(8);
            let step = std::f64::consts::TAU / n as f64;
            let mut best = (0usize, f64::INFINITY);
            for i in 0..n {
                let m = miss_of(step * i as f64, tau);
                if m < best.1 {
                    best = (i, m);
                }
            }
            let center = step * best.0 as f64;
            crate::numerics::golden_min(|p| miss_of(p, tau), center - step, center + step, tau_phi_tol)
        } else {
            let w = (4.0 * prev_shift.abs()).max(2e-3).min(0.3);
            let n = 48;
            let step = 2.0 * w / (n - 1) as f64;
            let mut best = (0usize, f64::INFINITY);
            for i in 0..n {
                let m = miss_of(phi_best - w + step * i as f64, tau);
                if m < best.1 {
                    best = (i, m);
                }
            }
            let center = phi_best - w + step * best.0 as f64;
            crate::numerics::golden_min(|p| miss_of(p, tau), center - step, center + step, tau_phi_tol)
        };
        let _ = eval_count.get().min(schedule.max_iter);
        prev_shift = if stages.is_empty() { 0.0 } else { phi - phi_best };
        phi_best = phi;
        let (_, action) = shoot_once(params, &subspace, source.q, target.q, eta, phi, tau, &opts)?;
        stages.push(StageRecord { tau, phi, miss, action });

        let cauchy = stages.len() >= 2 && {
            let s1 = stages[stages.len() - 1].action;
            let s0 = stages[stages.len() - 2].action;
            (s1 - s0).abs() <= schedule.action_tol * 1.0_f64.max(s1.abs())
        };
        if miss <= schedule.target_tol && cauchy {
            break;
        }
        k += 1;
        if k >= taus.len() {
            let next = taus.last().unwrap() * schedule.tau_grow;
            if next > schedule.tau_max {
                if miss <= schedule.target_tol {
                    break; // terminal condition met; action plateau is recorded in `stages`
                }
                return Err(InstantonError::NoConvergence {
                    best_miss: miss,
                    target_tol: schedule.target_tol,
                    tau,
                });
            }
            taus.push(next);
        }
    }

    // final dense integration at the accepted stage
    let last = stages.last().unwrap().clone();
    let dir = subspace.direction(last.phi);
    let start = PhasePoint::new(
        source.q + Vec2::new(eta * dir[0], eta * dir[1]),
        Vec2::new(eta * dir[2], eta * dir[3]),
    );
    let mut path = integrate_path_sampled(params, start, last.tau, &opts, schedule.n_samples)?;
    path.source = Some(*source);
    path.target = Some(*target);
    path.theta = theta_along(params, &path)?;
    path.shooting = Some(ShootingInfo { phi: last.phi, miss: last.miss, stages });
    Ok(path)
}

/// Constraint angle θ(t) along a path: the signed angle from f(q) to q̇,
/// unwrapped continuously, with endpoints extrapolated from the 5 nearest
/// interior samples when the force is too small there.
pub fn theta_along(params: &KerrParams, path: &InstantonPath) -> Result<Vec<f64>, InstantonError> {
    let n = path.states.len();
    let mut raw = vec![f64::NAN; n];
    let mut valid = vec![false; n];
    for (i, s) in path.states.iter().enumerate() {
        let f = kerr_force(params, s.q);
        let fnorm = f.norm();
        if fnorm < 1e-12 {
            if i != 0 && i != n - 1 {
                return Err(InstantonError::SingularTheta { index: i, fnorm });
            }
            continue;
        }
        let qdot = 2.0 * s.p + f;
        raw[i] = f.cross(qdot).atan2(f.dot(qdot));
        valid[i] = true;
    }
    let first = valid.iter().position(|&v| v).ok_or(InstantonError::SingularTheta { index: 0, fnorm: 0.0 })?;
    let last = valid.iter().rposition(|&v| v).unwrap();
    let un = unwrap_angles(&raw[first..=last]);
    let mut theta = vec![0.0; n];
    theta[first..=last].copy_from_slice(&un);
    // linear extrapolation for excluded endpoints
    if first > 0 {
        let v = linear_extrapolate(&path.times[first..(first + 5).min(last + 1)], &theta[first..(first + 5).min(last + 1)], path.times[0]);
        for i in 0..first {
            theta[i] = v;
        }
    }
    if last < n - 1 {
        let lo = last.saturating_sub(4).max(first);
        let v = linear_extrapolate(&path.times[lo..=last], &theta[lo..=last], path.times[n - 1]);
        for i in (last + 1)..n {
            theta[i] = v;
        }
    }
    Ok(theta)
}

fn linear_extrapolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    if x.len() < 2 {
        return y[0];
    }
    let slope = crate::numerics::regression_slope(x, y);
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    my + slope * (at - mx)
}
