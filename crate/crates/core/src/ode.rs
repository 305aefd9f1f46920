//! Adaptive Dormand-Prince 5(4) integration with a 4th-order continuous
//! extension.
//!
//! The instanton flow is a small (4- or 5-dimensional) but very stiffness-free
//! oscillatory system that must be resolved to ~1e-10 relative accuracy, so an
//! explicit embedded Runge-Kutta pair with dense output is the right tool.
//! State vectors are fixed-size arrays; the right-hand side is any closure.

use std::ops::ControlFlow;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (stiffness or blow-up)")]
    StepSizeUnderflow { t: f64 },
    #[error("exceeded {max} steps at t = {t:.6e}")]
    MaxSteps { t: f64, max: usize },
}

/// One accepted step together with its interpolation polynomial.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Dense-output evaluation for t in [t0, t1].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let theta = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1 * (self.cont[2][i] + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        out
    }
}

// Dormand-Prince coefficients (Hairer, Norsett & Wanner, DOPRI5).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn axpy<const N: usize>(y: &[f64; N], k: &[[f64; N]; 7], coeffs: &[f64], h: f64) -> [f64; N] {
    let mut out = *y;
    for (j, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[j][i];
            }
        }
    }
    out
}

/// Integrates dy/dt = f(t, y) from t0 to t_end.
///
/// `on_step` sees every accepted step (with dense output) and can stop the
/// integration early; the return value is the state at the end of the last
/// accepted step.
pub fn integrate<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Dopri5Options,
    mut on_step: impl FnMut(&Step<N>) -> ControlFlow<()>,
) -> Result<(f64, [f64; N]), OdeError> {
    assert!(t_end > t0, "forward integration only");
    let mut t = t0;
    let mut y = y0;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);

    let mut h = initial_step(f, t, &y, &k[0], opts).min(t_end - t0).min(opts.h_max);
    let mut n_steps = 0usize;
    let mut last_rejected = false;

    while t < t_end {
        if n_steps >= opts.max_steps {
            return Err(OdeError::MaxSteps { t, max: opts.max_steps });
        }
        n_steps += 1;
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) * 16.0 {
            return Err(OdeError::StepSizeUnderflow { t });
        }

        for s in 0..6 {
            let ys = axpy(&y, &k, &A[s][..=s], h);
            k[s + 1] = f(t + C[s] * h, &ys);
        }
        // stage 7 state is the 5th-order solution (FSAL)
        let y1 = axpy(&y, &k, &A[5], h);

        let mut err_sq = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            // dense-output coefficients
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y1[i] - y[i];
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = h * k[0][i] - dy;
                cont[3][i] = dy - h * k[6][i] - cont[2][i];
                let mut r5 = 0.0;
                for j in 0..7 {
                    r5 += D[j] * k[j][i];
                }
                cont[4][i] = h * r5;
            }
            let step = Step { t0: t, t1: t + h, y0: y, y1, cont };
            t += h;
            y = y1;
            k[0] = k[6]; // FSAL
            let flow = on_step(&step);

            let fac = 0.9 * err.max(1e-30).powf(-0.2);
            let fac = fac.clamp(0.2, if last_rejected { 1.0 } else { 10.0 });
            h = (h * fac).min(opts.h_max);
            last_rejected = false;

            if let ControlFlow::Break(()) = flow {
                return Ok((t, y));
            }
        } else {
            // k[0] still holds f(t, y); only stages 1..=6 were clobbered
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }
    Ok((t, y))
}

fn initial_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    opts: &Dopri5Options,
) -> f64 {
    // standard two-evaluation guess (Hairer II.4)
    let sc: Vec<f64> = y0.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = (y0.iter().zip(&sc).map(|(v, s)| (v / s) * (v / s)).sum::<f64>() / N as f64).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s) * (v / s)).sum::<f64>() / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = *y0;
    for i in 0..N {
        y1[i] += h0 * f0[i];
    }
    let f1 = f(t0 + h0, &y1);
    let d2 = (f1
        .iter()
        .zip(f0.iter())
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s) * ((a - b) / s))
        .sum::<f64>()
        / N as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Locates the first zero crossing of `g` within an accepted step by bisection
/// on the dense output. Returns `(t, y)` at the crossing if the sign changes.
pub fn locate_event<const N: usize>(
    step: &Step<N>,
    g: impl Fn(f64, &[f64; N]) -> f64,
) -> Option<(f64, [f64; N])> {
    let g0 = g(step.t0, &step.y0);
    let g1 = g(step.t1, &step.y1);
    if g0 == 0.0 {
        return Some((step.t0, step.y0));
    }
    if g0.signum() == g1.signum() {
        return None;
    }
    let (mut lo, mut hi) = (step.t0, step.t1);
    let mut glo = g0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let ym = step.eval(mid);
        let gm = g(mid, &ym);
        if gm == 0.0 || (hi - lo) < 1e-14 * hi.abs().max(1.0) {
            return Some((mid, ym));
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let tm = 0.5 * (lo + hi);
    Some((tm, step.eval(tm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_matches_exact() {
        let f = |_t: f64, y: &[f64; 1]| [-2.0 * y[0]];
        let opts = Dopri5Options::default();
        let (t, y) = integrate(&f, 0.0, [1.0], 3.0, &opts, |_| ControlFlow::Continue(())).unwrap();
        assert_eq!(t, 3.0);
        assert_relative_eq!(y[0], (-6.0_f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let opts = Dopri5Options { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let (_, y) = integrate(&f, 0.0, [1.0, 0.0], 50.0, &opts, |_| ControlFlow::Continue(())).unwrap();
        let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((energy - 0.5).abs() < 1e-8, "energy drift {}", (energy - 0.5).abs());
        assert_relative_eq!(y[0], 50.0_f64.cos(), epsilon = 1e-7);
    }

    #[test]
    fn dense_output_interpolates_accurately() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let opts = Dopri5Options { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let mut worst = 0.0_f64;
        integrate(&f, 0.0, [0.0, 1.0], 20.0, &opts, |step| {
            for k in 1..4 {
                let t = step.t0 + (step.t1 - step.t0) * k as f64 / 4.0;
                let y = step.eval(t);
                worst = worst.max((y[0] - t.sin()).abs());
            }
            ControlFlow::Continue(())
        })
        .unwrap();
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn early_stop_returns_state_at_break() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let opts = Dopri5Options::default();
        let (t, _) = integrate(&f, 0.0, [1.0], 100.0, &opts, |step| {
            if step.t1 > 1.0 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert!(t > 1.0 && t < 100.0);
    }

    #[test]
    fn event_location_is_sharp() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let opts = Dopri5Options { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let mut hit = None;
        integrate(&f, 0.0, [0.0, 1.0], 10.0, &opts, |step| {
            // first crossing of y[0] = 0.5 going up: t = pi/6
            if let Some((t, y)) = locate_event(step, |_, y| y[0] - 0.5) {
                hit = Some((t, y));
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })
        .unwrap();
        let (t, _) = hit.expect("event found");
        assert_relative_eq!(t, std::f64::consts::FRAC_PI_6, max_relative = 1e-9);
    }

    #[test]
    fn max_steps_is_enforced() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let opts = Dopri5Options { max_steps: 10, ..Default::default() };
        let err = integrate(&f, 0.0, [1.0], 1e6, &opts, |_| ControlFlow::Continue(())).unwrap_err();
        assert!(matches!(err, OdeError::MaxSteps { .. }));
    }

    #[test]
    fn accuracy_improves_with_tolerance() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut errs = Vec::new();
        for rtol in [1e-6, 1e-9, 1e-12] {
            let opts = Dopri5Options { rtol, atol: rtol * 1e-2, ..Default::default() };
            let (_, y) = integrate(&f, 0.0, [1.0, 0.0], 10.0, &opts, |_| ControlFlow::Continue(())).unwrap();
            errs.push((y[0] - 10.0_f64.cos()).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }
}
