//! Explicit SSPRK(3,3) in Shu-Osher form and a CFL-driven time loop.

use thiserror::Error;

pub const DEFAULT_CFL: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("time step {0} is not positive")]
    BadStep(f64),
    #[error("non-finite state after stage {stage} at t = {t}")]
    NonFinite { stage: usize, t: f64 },
    #[error("bad time loop: {0}")]
    BadLoop(String),
}

fn check(u: &[f64], stage: usize, t: f64) -> Result<(), StepError> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StepError::NonFinite { stage, t })
    }
}

/// One SSPRK(3,3) step. `rhs(u, t, out)` writes `du/dt` into `out`.
pub fn ssprk33_step<F>(rhs: &mut F, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>, StepError>
where
    F: FnMut(&[f64], f64, &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(StepError::BadStep(dt));
    }
    let n = u.len();
    let mut k = vec![0.0; n];

    rhs(u, t, &mut k);
    let u1: Vec<f64> = u.iter().zip(&k).map(|(a, b)| a + dt * b).collect();
    check(&u1, 1, t)?;

    rhs(&u1, t + dt, &mut k);
    let u2: Vec<f64> = (0..n).map(|i| 0.75 * u[i] + 0.25 * (u1[i] + dt * k[i])).collect();
    check(&u2, 2, t + dt)?;

    rhs(&u2, t + 0.5 * dt, &mut k);
    let out: Vec<f64> = (0..n)
        .map(|i| u[i] / 3.0 + 2.0 / 3.0 * (u2[i] + dt * k[i]))
        .collect();
    check(&out, 3, t + 0.5 * dt)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeLoop {
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
}

impl TimeLoop {
    /// `dt = cfl * h / max(|a| + kappa_max / h, floor)`.
    pub fn from_cfl(cfl: f64, h: f64, a: f64, kappa_max: f64, t_end: f64) -> Result<Self, StepError> {
        const FLOOR: f64 = 1e-12;
        if !(cfl > 0.0 && h > 0.0 && t_end > 0.0 && kappa_max >= 0.0) {
            return Err(StepError::BadLoop(format!(
                "cfl {cfl}, h {h}, t_end {t_end}, kappa_max {kappa_max}"
            )));
        }
        let speed = (a.abs() + kappa_max / h).max(FLOOR);
        Ok(Self {
            dt: cfl * h / speed,
            t_end,
            cfl,
        })
    }

    pub fn with_dt(dt: f64, t_end: f64) -> Result<Self, StepError> {
        if !(dt > 0.0 && t_end > 0.0) {
            return Err(StepError::BadLoop(format!("dt {dt}, t_end {t_end}")));
        }
        Ok(Self { dt, t_end, cfl: f64::NAN })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).ceil() as usize
    }

    /// `(t, dt)` of each step; the last one lands exactly on `t_end`.
    pub fn schedule(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.steps();
        (0..n).map(move |i| {
            let t = i as f64 * self.dt;
            let dt = if i + 1 == n { self.t_end - t } else { self.dt };
            (t, dt)
        })
    }

    /// Integrate, calling `observe(step, t, u)` after every step (and with
    /// step 0 before the first one).
    pub fn run<F, O>(&self, rhs: &mut F, u0: Vec<f64>, mut observe: O) -> Result<Vec<f64>, StepError>
    where
        F: FnMut(&[f64], f64, &mut [f64]),
        O: FnMut(usize, f64, &[f64]),
    {
        let mut u = u0;
        observe(0, 0.0, &u);
        let n = self.steps();
        for (i, (t, dt)) in self.schedule().enumerate() {
            u = ssprk33_step(rhs, &u, t, dt)?;
            let t_next = if i + 1 == n { self.t_end } else { t + dt };
            observe(i + 1, t_next, &u);
        }
        Ok(u)
    }
}
