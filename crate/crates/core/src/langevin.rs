//! Euler-Maruyama sampling of the equivalent classical stochastic process.
//!
//! Integrating out the pseudo-momentum leaves the Langevin equation
//! dq = f(q) dt + √(2U) dW with independent noise on both components; the
//! noise amplitude is fixed by requiring the stationary density of the linear
//! force to be exp(-P/U) with P the Ornstein-Uhlenbeck pseudo-potential
//! (equivalently, the |p|² term of the auxiliary Hamiltonian). This is the
//! truncated-Wigner layer of the artifact.
//!
//! Trajectories are independent work items with one counter-seeded RNG stream
//! each, so parallel and serial runs produce bit-identical statistics.

use crate::model::{kerr_force, ou_force, KerrParams, Mat2, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Which deterministic force drives the Langevin particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    /// Full Kerr force with the cubic term.
    Kerr,
    /// Linear Ornstein-Uhlenbeck force (cubic term dropped).
    Linear,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LangevinConfig {
    /// Step size in units of 1/γ.
    pub dt: f64,
    pub n_steps: usize,
    pub n_traj: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub record_stride: usize,
    /// Initial condition shared by all trajectories.
    pub start: Vec2,
    pub force: ForceKind,
}

impl Default for LangevinConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            n_steps: 200_000,
            n_traj: 64,
            burn_in: 20_000,
            seed: 1,
            record_stride: 10,
            start: Vec2::ZERO,
            force: ForceKind::Kerr,
        }
    }
}

impl LangevinConfig {
    pub fn validate(&self) -> Result<(), LangevinError> {
        if !(self.dt > 0.0) {
            return Err(LangevinError::BadConfig("dt must be > 0".into()));
        }
        if self.n_steps <= self.burn_in {
            return Err(LangevinError::BadConfig("n_steps must exceed burn_in".into()));
        }
        if self.n_traj == 0 || self.record_stride == 0 {
            return Err(LangevinError::BadConfig("n_traj and record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LangevinError {
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("sampling requires u > 0")]
    NoiseRequired,
    #[error("trajectory {traj} blew up at step {step} (|q| > 1e6); reduce dt")]
    BlowUp { traj: usize, step: usize },
}

/// Regular 2D binning grid for steady-state densities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HistogramSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    /// Probability density per cell, row-major over (ix, iy), normalized so
    /// that Σ density · cell_area = 1.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let dx = (self.spec.x_max - self.spec.x_min) / self.spec.nx as f64;
        let dy = (self.spec.y_max - self.spec.y_min) / self.spec.ny as f64;
        (0..self.spec.nx).flat_map(move |ix| {
            (0..self.spec.ny).map(move |iy| {
                (
                    self.spec.x_min + dx * (ix as f64 + 0.5),
                    self.spec.y_min + dy * (iy as f64 + 0.5),
                    self.density[ix * self.spec.ny + iy],
                )
            })
        })
    }
}

/// Ensemble steady-state statistics with trajectory-batched standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct SteadyStats {
    pub mean_q: Vec2,
    /// Centered second moments of q.
    pub covariance: Mat2,
    pub mean_abs_q2: f64,
    pub photon_estimate: f64,
    pub se_mean_q: Vec2,
    pub se_mean_abs_q2: f64,
    pub se_photon_estimate: f64,
    pub n_samples: u64,
    pub histogram: Option<Histogram>,
}

/// One Euler-Maruyama update q + f(q) dt + √(2 U dt) ξ.
pub fn em_step(params: &KerrParams, q: Vec2, dt: f64, noise: Vec2) -> Vec2 {
    let amp = (2.0 * params.u * dt).sqrt();
    q + dt * kerr_force(params, q) + amp * noise
}

#[inline]
fn force_of(kind: ForceKind, params: &KerrParams, q: Vec2) -> Vec2 {
    match kind {
        ForceKind::Kerr => kerr_force(params, q),
        ForceKind::Linear => ou_force(&params.linearized(), q),
    }
}

/// Marsaglia polar method; two independent standard normals per call.
fn normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    loop {
        let u: f64 = rng.gen_range(-1.0..1.0);
        let v: f64 = rng.gen_range(-1.0..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let k = (-2.0 * s.ln() / s).sqrt();
            return (u * k, v * k);
        }
    }
}

fn stream_rng(seed: u64, traj: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(traj as u64 + 1);
    rng
}

#[derive(Debug, Clone, Default)]
struct MomentAcc {
    n: u64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
    sr2: f64,
    hist: Vec<u64>,
}

impl MomentAcc {
    fn push(&mut self, q: Vec2, spec: Option<&HistogramSpec>) {
        self.n += 1;
        self.sx += q.x;
        self.sy += q.y;
        self.sxx += q.x * q.x;
        self.sxy += q.x * q.y;
        self.syy += q.y * q.y;
        self.sr2 += q.norm_sq();
        if let Some(s) = spec {
            let fx = (q.x - s.x_min) / (s.x_max - s.x_min);
            let fy = (q.y - s.y_min) / (s.y_max - s.y_min);
            if (0.0..1.0).contains(&fx) && (0.0..1.0).contains(&fy) {
                let ix = (fx * s.nx as f64) as usize;
                let iy = (fy * s.ny as f64) as usize;
                self.hist[ix * s.ny + iy] += 1;
            }
        }
    }

    fn merge(&mut self, o: &MomentAcc) {
        self.n += o.n;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.sxy += o.sxy;
        self.syy += o.syy;
        self.sr2 += o.sr2;
        for (a, b) in self.hist.iter_mut().zip(&o.hist) {
            *a += b;
        }
    }
}

fn run_trajectory(
    params: &KerrParams,
    cfg: &LangevinConfig,
    traj: usize,
    spec: Option<&HistogramSpec>,
) -> Result<MomentAcc, LangevinError> {
    let mut rng = stream_rng(cfg.seed, traj);
    let mut q = cfg.start;
    let mut acc = MomentAcc {
        hist: spec.map(|s| vec![0u64; s.nx * s.ny]).unwrap_or_default(),
        ..Default::default()
    };
    let amp = (2.0 * params.u * cfg.dt).sqrt();
    for step in 0..cfg.n_steps {
        let (n1, n2) = normal_pair(&mut rng);
        q = q + cfg.dt * force_of(cfg.force, params, q) + amp * Vec2::new(n1, n2);
        if q.norm_sq() > 1e12 {
            return Err(LangevinError::BlowUp { traj, step });
        }
        if step >= cfg.burn_in && (step - cfg.burn_in) % cfg.record_stride == 0 {
            acc.push(q, spec);
        }
    }
    Ok(acc)
}

/// Trajectory-ensemble steady-state statistics after burn-in.
///
/// Deterministic for a fixed seed: trajectories use independent RNG streams
/// and the reduction order is fixed by the trajectory index.
pub fn sample_steady_state(
    params: &KerrParams,
    cfg: &LangevinConfig,
    hist: Option<HistogramSpec>,
) -> Result<SteadyStats, LangevinError> {
    cfg.validate()?;
    if params.u <= 0.0 {
        return Err(LangevinError::NoiseRequired);
    }
    let per_traj: Vec<Result<MomentAcc, LangevinError>> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|t| run_trajectory(params, cfg, t, hist.as_ref()))
        .collect();

    let mut accs = Vec::with_capacity(cfg.n_traj);
    for r in per_traj {
        accs.push(r?);
    }

    // ordered merge keeps parallel and serial runs bitwise identical
    let mut total = MomentAcc {
        hist: hist.map(|s| vec![0u64; s.nx * s.ny]).unwrap_or_default(),
        ..Default::default()
    };
    for a in &accs {
        total.merge(a);
    }
    let n = total.n as f64;
    let mean_q = Vec2::new(total.sx / n, total.sy / n);
    let cov = Mat2::new(
        total.sxx / n - mean_q.x * mean_q.x,
        total.sxy / n - mean_q.x * mean_q.y,
        total.sxy / n - mean_q.x * mean_q.y,
        total.syy / n - mean_q.y * mean_q.y,
    );
    let mean_abs_q2 = total.sr2 / n;
    let photon = params.gamma * mean_abs_q2 / (4.0 * params.u);

    // standard errors from 16 trajectory batches (autocorrelation-safe)
    let n_batches = 16.min(cfg.n_traj);
    let mut bx = vec![0.0; n_batches];
    let mut by = vec![0.0; n_batches];
    let mut br2 = vec![0.0; n_batches];
    let mut bn = vec![0.0; n_batches];
    for (i, a) in accs.iter().enumerate() {
        let b = i * n_batches / cfg.n_traj;
        bx[b] += a.sx;
        by[b] += a.sy;
        br2[b] += a.sr2;
        bn[b] += a.n as f64;
    }
    let se = |sums: &[f64], mean: f64| -> f64 {
        if n_batches < 2 {
            return f64::NAN;
        }
        let mut var = 0.0;
        for b in 0..n_batches {
            let m = sums[b] / bn[b];
            var += (m - mean) * (m - mean);
        }
        (var / (n_batches as f64 * (n_batches as f64 - 1.0))).sqrt()
    };
    let se_r2 = se(&br2, mean_abs_q2);

    let histogram = hist.map(|spec| {
        let cell = (spec.x_max - spec.x_min) / spec.nx as f64 * (spec.y_max - spec.y_min)
            / spec.ny as f64;
        let density = total.hist.iter().map(|&c| c as f64 / (n * cell)).collect();
        Histogram { spec, density }
    });

    Ok(SteadyStats {
        mean_q,
        covariance: cov,
        mean_abs_q2,
        photon_estimate: photon,
        se_mean_q: Vec2::new(se(&bx, mean_q.x), se(&by, mean_q.y)),
        se_mean_abs_q2: se_r2,
        se_photon_estimate: params.gamma * se_r2 / (4.0 * params.u),
        n_samples: total.n,
        histogram,
    })
}

/// First-passage statistics into a union of absorbing disks.
#[derive(Debug, Clone, Serialize)]
pub struct FirstPassageStats {
    /// Hitting times of the escaped trajectories, in trajectory order.
    pub times: Vec<f64>,
    /// Trajectories that never hit the absorbing set within n_steps.
    pub censored: usize,
    pub n_traj: usize,
    pub mean_time: f64,
    pub log_mean_time: f64,
}

/// Simulates first hitting times from `start` into disks of radius
/// `absorb_radius` around `absorb_about` and its Z₂ image -absorb_about.
///
/// Both images are absorbed because the two-photon drive makes the rival
/// attractor a symmetric pair; counting only one image would double the
/// apparent escape time. Censored runs are counted, never dropped.
pub fn first_passage(
    params: &KerrParams,
    start: Vec2,
    absorb_about: Vec2,
    absorb_radius: f64,
    cfg: &LangevinConfig,
) -> Result<FirstPassageStats, LangevinError> {
    cfg.validate()?;
    if params.u <= 0.0 {
        return Err(LangevinError::NoiseRequired);
    }
    let r2 = absorb_radius * absorb_radius;
    let hit = move |q: Vec2| (q - absorb_about).norm_sq() <= r2 || (q + absorb_about).norm_sq() <= r2;

    let outcomes: Vec<Result<Option<f64>, LangevinError>> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|traj| {
            if hit(start) {
                return Ok(Some(0.0));
            }
            let mut rng = stream_rng(cfg.seed, traj);
            let mut q = start;
            let amp = (2.0 * params.u * cfg.dt).sqrt();
            for step in 0..cfg.n_steps {
                let (n1, n2) = normal_pair(&mut rng);
                q = q + cfg.dt * force_of(cfg.force, params, q) + amp * Vec2::new(n1, n2);
                if q.norm_sq() > 1e12 {
                    return Err(LangevinError::BlowUp { traj, step });
                }
                if hit(q) {
                    return Ok(Some((step + 1) as f64 * cfg.dt));
                }
            }
            Ok(None)
        })
        .collect();

    let mut times = Vec::new();
    let mut censored = 0usize;
    for o in outcomes {
        match o? {
            Some(t) => times.push(t),
            None => censored += 1,
        }
    }
    let mean_time = if times.is_empty() {
        f64::NAN
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    };
    Ok(FirstPassageStats {
        times,
        censored,
        n_traj: cfg.n_traj,
        mean_time,
        log_mean_time: mean_time.ln(),
    })
}

/// Arrhenius scan: log mean first-passage time against 1/U.
///
/// Returns the regression slope (the effective activation action) and the
/// per-U statistics.
pub fn arrhenius_scan(
    base: &KerrParams,
    u_values: &[f64],
    start: Vec2,
    absorb_about: Vec2,
    absorb_radius: f64,
    cfg: &LangevinConfig,
) -> Result<(f64, Vec<(f64, FirstPassageStats)>), LangevinError> {
    let mut inv_u = Vec::new();
    let mut log_t = Vec::new();
    let mut all = Vec::new();
    for &u in u_values {
        let params = KerrParams { u, ..*base };
        let fp = first_passage(&params, start, absorb_about, absorb_radius, cfg)?;
        if fp.times.is_empty() {
            return Err(LangevinError::BadConfig(format!(
                "no escapes observed at u = {u}; raise n_steps"
            )));
        }
        inv_u.push(1.0 / u);
        log_t.push(fp.log_mean_time);
        all.push((u, fp));
    }
    Ok((crate::numerics::regression_slope(&inv_u, &log_t), all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasipotential::ou_hessian;
    use approx::assert_relative_eq;

    #[test]
    fn em_step_deterministic_limit() {
        let p = KerrParams::new(1.0, -10.0, 3.2, 0.0).unwrap();
        let q = Vec2::new(2.0, 0.0);
        let out = em_step(&p, q, 0.01, Vec2::new(5.0, -3.0));
        let euler = q + 0.01 * kerr_force(&p, q);
        assert_eq!(out, euler);
    }

    #[test]
    fn em_step_pure_diffusion_arithmetic() {
        // at the origin f = 0; dt = 1, U = 0.5 gives amplitude √(2·0.5·1) = 1
        let p = KerrParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let out = em_step(&p, Vec2::ZERO, 1.0, Vec2::new(1.0, 1.0));
        assert_relative_eq!(out.x, 1.0, max_relative = 1e-15);
        assert_relative_eq!(out.y, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn normal_pair_moments() {
        let mut rng = stream_rng(9, 0);
        let n = 200_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = normal_pair(&mut rng);
            m1 += a + b;
            m2 += a * a + b * b;
            m4 += a * a * a * a + b * b * b * b;
        }
        let cnt = (2 * n) as f64;
        assert!((m1 / cnt).abs() < 0.01);
        assert_relative_eq!(m2 / cnt, 1.0, max_relative = 0.01);
        assert_relative_eq!(m4 / cnt, 3.0, max_relative = 0.05);
    }

    #[test]
    fn ou_covariance_matches_lyapunov_solution() {
        // stationary covariance U · (Hess P)⁻¹ for the linear force
        let p = KerrParams::new(1.0, 1.0, 0.5, 0.1).unwrap();
        let cfg = LangevinConfig {
            dt: 1e-3,
            n_steps: 200_000,
            burn_in: 10_000,
            n_traj: 256,
            seed: 12,
            record_stride: 50,
            start: Vec2::ZERO,
            force: ForceKind::Linear,
        };
        let stats = sample_steady_state(&p, &cfg, None).unwrap();
        let h = ou_hessian(&p.linearized());
        let det = h.det();
        let sigma = Mat2::new(h.d / det, -h.b / det, -h.c / det, h.a / det).scale(p.u);
        for (got, want) in [
            (stats.covariance.a, sigma.a),
            (stats.covariance.b, sigma.b),
            (stats.covariance.d, sigma.d),
        ] {
            assert!(
                (got - want).abs() <= 0.05 * want.abs().max(sigma.a.abs()),
                "cov {got} vs lyapunov {want}"
            );
        }
    }

    #[test]
    fn deep_vacuum_mean_is_compatible_with_zero() {
        let p = KerrParams::new(1.0, 5.0, 0.5, 0.05).unwrap();
        let cfg = LangevinConfig {
            n_steps: 60_000,
            burn_in: 5_000,
            n_traj: 64,
            seed: 3,
            ..Default::default()
        };
        let stats = sample_steady_state(&p, &cfg, None).unwrap();
        assert!(stats.mean_q.x.abs() < 5.0 * stats.se_mean_q.x);
        assert!(stats.mean_q.y.abs() < 5.0 * stats.se_mean_q.y);
    }

    #[test]
    fn identical_seeds_are_bitwise_identical() {
        let p = KerrParams::new(1.0, 1.0, 0.5, 0.1).unwrap();
        let cfg = LangevinConfig { n_steps: 5_000, burn_in: 500, n_traj: 8, seed: 77, ..Default::default() };
        let spec = HistogramSpec { x_min: -2.0, x_max: 2.0, y_min: -2.0, y_max: 2.0, nx: 16, ny: 16 };
        let a = sample_steady_state(&p, &cfg, Some(spec)).unwrap();
        let b = sample_steady_state(&p, &cfg, Some(spec)).unwrap();
        assert_eq!(a.mean_q, b.mean_q);
        assert_eq!(a.covariance, b.covariance);
        assert_eq!(a.mean_abs_q2, b.mean_abs_q2);
        assert_eq!(a.histogram.unwrap().density, b.histogram.unwrap().density);
    }

    #[test]
    fn different_seeds_are_statistically_compatible() {
        let p = KerrParams::new(1.0, 1.0, 0.5, 0.1).unwrap();
        let mk = |seed| LangevinConfig {
            n_steps: 100_000,
            burn_in: 10_000,
            n_traj: 64,
            seed,
            ..Default::default()
        };
        let a = sample_steady_state(&p, &mk(1), None).unwrap();
        let b = sample_steady_state(&p, &mk(2), None).unwrap();
        let spread = (a.mean_abs_q2 - b.mean_abs_q2).abs();
        let bound = 3.0 * (a.se_mean_abs_q2 + b.se_mean_abs_q2);
        assert!(spread < bound, "spread {spread} vs {bound}");
    }

    #[test]
    fn absorbing_set_containing_start_hits_immediately() {
        let p = KerrParams::new(1.0, 1.0, 0.5, 0.1).unwrap();
        let cfg = LangevinConfig { n_steps: 100, burn_in: 0, n_traj: 4, ..Default::default() };
        let fp = first_passage(&p, Vec2::ZERO, Vec2::new(0.1, 0.0), 0.5, &cfg).unwrap();
        assert_eq!(fp.censored, 0);
        assert!(fp.times.iter().all(|&t| t == 0.0));
        assert_eq!(fp.mean_time, 0.0);
    }

    #[test]
    fn censored_runs_are_counted() {
        // far-away absorber, too few steps: everything is censored
        let p = KerrParams::new(1.0, 1.0, 0.5, 0.01).unwrap();
        let cfg = LangevinConfig { n_steps: 50, burn_in: 0, n_traj: 6, ..Default::default() };
        let fp = first_passage(&p, Vec2::ZERO, Vec2::new(50.0, 0.0), 0.1, &cfg).unwrap();
        assert_eq!(fp.censored, 6);
        assert!(fp.times.is_empty());
        assert!(fp.mean_time.is_nan());
    }

    #[test]
    fn config_validation() {
        let bad = LangevinConfig { n_steps: 10, burn_in: 20, ..Default::default() };
        assert!(bad.validate().is_err());
        let p = KerrParams::new(1.0, 1.0, 0.5, 0.0).unwrap();
        assert!(matches!(
            sample_steady_state(&p, &LangevinConfig::default(), None),
            Err(LangevinError::NoiseRequired)
        ));
    }
}
