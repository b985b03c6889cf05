//! Classical fourth-order Runge–Kutta stepping with exact landing on the
//! requested output times.

use crate::error::{Error, Result};
use crate::grid::DensityField;

/// An autonomous ODE system `y' = F(y)`.
pub trait OdeSystem {
    fn rhs(&self, y: &[f64], dy: &mut [f64]);

    /// `true` when `F(y) ≡ 0`, allowing the integrator to fast-forward.
    fn is_stationary(&self, _y: &[f64]) -> bool {
        false
    }
}

/// Sampled solution of a density evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<DensityField>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn first(&self) -> &DensityField {
        &self.samples[0]
    }

    pub fn last(&self) -> &DensityField {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DensityField> {
        self.samples.iter()
    }
}

/// `n + 1` equally spaced times covering `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

pub(crate) fn check_output_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no output times requested".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter(
            "output times must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("output times must be sorted".into()));
    }
    Ok(())
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

fn rk4_step<S: OdeSystem>(sys: &S, y: &mut [f64], dt: f64, w: &mut Workspace) {
    let n = y.len();
    sys.rhs(y, &mut w.k1);
    for i in 0..n {
        w.tmp[i] = y[i] + 0.5 * dt * w.k1[i];
    }
    sys.rhs(&w.tmp, &mut w.k2);
    for i in 0..n {
        w.tmp[i] = y[i] + 0.5 * dt * w.k2[i];
    }
    sys.rhs(&w.tmp, &mut w.k3);
    for i in 0..n {
        w.tmp[i] = y[i] + dt * w.k3[i];
    }
    sys.rhs(&w.tmp, &mut w.k4);
    for i in 0..n {
        y[i] += dt / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

/// Integrates from `(0, y0)` and calls `on_sample(t, y)` at every output
/// time. Each output interval is split into equal steps no longer than
/// `dt_max`.
pub fn rk4_sampled<S: OdeSystem>(
    sys: &S,
    mut y: Vec<f64>,
    dt_max: f64,
    output_times: &[f64],
    mut on_sample: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<()> {
    check_output_times(output_times)?;
    if !(dt_max > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt_max}")));
    }
    let n = y.len();
    let mut w = Workspace {
        k1: vec![0.0; n],
        k2: vec![0.0; n],
        k3: vec![0.0; n],
        k4: vec![0.0; n],
        tmp: vec![0.0; n],
    };
    let mut t = 0.0;
    let mut frozen = false;
    for &t_out in output_times {
        let span = t_out - t;
        if span > 0.0 && !frozen {
            if sys.is_stationary(&y) {
                frozen = true;
            } else {
                let steps = (span / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                let dt = span / steps as f64;
                for _ in 0..steps {
                    rk4_step(sys, &mut y, dt, &mut w);
                }
                if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NumericalInstability(format!(
                        "non-finite state component {i} at t = {t_out}"
                    )));
                }
            }
        }
        t = t_out;
        on_sample(t, &y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);

    impl OdeSystem for Decay {
        fn rhs(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = -self.0 * y[0];
        }
    }

    #[test]
    fn fourth_order_convergence_on_linear_decay() {
        let err = |dt: f64| {
            let mut out = 0.0;
            rk4_sampled(&Decay(2.0), vec![1.0], dt, &[1.0], |_, y| {
                out = y[0];
                Ok(())
            })
            .unwrap();
            (out - (-2.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn lands_on_output_times() {
        let mut times = Vec::new();
        rk4_sampled(&Decay(1.0), vec![1.0], 0.3, &[0.0, 0.25, 1.0], |t, _| {
            times.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(times, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn rejects_unsorted_times() {
        let r = rk4_sampled(&Decay(1.0), vec![1.0], 0.1, &[1.0, 0.5], |_, _| Ok(()));
        assert!(r.is_err());
    }

    #[test]
    fn uniform_times_cover_interval() {
        assert_eq!(uniform_times(1.0, 4), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
