//! Method-of-steps integration of the delayed dynamics with classical RK4
//! and cubic Hermite dense output.
//!
//! The step size must satisfy `dt <= tau_min/4` (smallest positive delay),
//! which keeps every delayed lookup strictly inside already-completed steps.
//! Zero delays are read from the current RK stage value instead of the
//! history, so the delay-free system degenerates to a plain ODE solve.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{full_rhs_into, mode_rhs, RingParams};

/// Integration halts once any state magnitude exceeds this cap; the
/// trajectory is then marked truncated and the run is unstable by overflow.
pub const OVERFLOW_CAP: f64 = 1e12;

/// Default step: min(0.01, tau_min/8), or 0.01 when both delays vanish.
pub fn default_dt(params: &RingParams) -> f64 {
    match params.tau_min_positive() {
        Some(tau) => (tau / 8.0).min(0.01),
        None => 0.01,
    }
}

/// State that the generic stepper can integrate: a fixed-size linear
/// container over f64 scalars.
pub trait OdeState: Clone {
    fn copy_from(&mut self, src: &Self);
    fn scale(&mut self, a: f64);
    /// self += a * other
    fn add_scaled(&mut self, a: f64, other: &Self);
    fn max_abs(&self) -> f64;
    fn all_finite(&self) -> bool;
}

impl OdeState for Vec<f64> {
    fn copy_from(&mut self, src: &Self) {
        self.copy_from_slice(src);
    }
    fn scale(&mut self, a: f64) {
        for v in self.iter_mut() {
            *v *= a;
        }
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        for (v, o) in self.iter_mut().zip(other) {
            *v += a * o;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for Complex64 {
    fn copy_from(&mut self, src: &Self) {
        *self = *src;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
    fn max_abs(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn all_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Fixed-step trajectory with stored derivatives for Hermite interpolation.
///
/// Sample `m` lives at time `t0 + m*dt`; `derivs[m]` is the RHS evaluated at
/// that node. When the overflow cap halts the run early, `truncated_at`
/// records the time of the first offending (or non-finite) step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    t0: f64,
    dt: f64,
    samples: Vec<S>,
    derivs: Vec<S>,
    truncated_at: Option<f64>,
}

impl<S: OdeState> Trajectory<S> {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn derivatives(&self) -> &[S] {
        &self.derivs
    }

    pub fn time_at(&self, m: usize) -> f64 {
        self.t0 + m as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len() - 1)
    }

    pub fn truncated_at(&self) -> Option<f64> {
        self.truncated_at
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated_at.is_some()
    }

    pub fn iter_timed(&self) -> impl Iterator<Item = (f64, &S)> + '_ {
        self.samples.iter().enumerate().map(|(m, s)| (self.time_at(m), s))
    }

    /// Evaluates the trajectory at `t` in `[t0, end_time]`, writing into `buf`.
    /// Node times reproduce the stored sample exactly; interior points use
    /// cubic Hermite interpolation on the bracketing nodes.
    fn eval_into(&self, t: f64, buf: &mut S) -> Result<()> {
        let last = self.samples.len() - 1;
        if t < self.t0 || t > self.end_time() {
            return Err(Error::TimeOutOfRange { t, lo: self.t0, hi: self.end_time() });
        }
        let s = (t - self.t0) / self.dt;
        let near = s.round();
        let m = near as usize;
        if m <= last && self.time_at(m) == t {
            buf.copy_from(&self.samples[m]);
            return Ok(());
        }
        let m = (s.floor() as usize).min(last - 1);
        let th = (t - self.time_at(m)) / self.dt;
        let (th2, th3) = (th * th, th * th * th);
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        buf.copy_from(&self.samples[m]);
        buf.scale(h00);
        buf.add_scaled(h10 * self.dt, &self.derivs[m]);
        buf.add_scaled(h01, &self.samples[m + 1]);
        buf.add_scaled(h11 * self.dt, &self.derivs[m + 1]);
        Ok(())
    }

    /// Allocating convenience wrapper around [`Trajectory::eval_into`].
    pub fn eval(&self, t: f64) -> Result<S> {
        let mut buf = self.samples[0].clone();
        self.eval_into(t, &mut buf)?;
        Ok(buf)
    }
}

/// Initial data on `[-tau_max, t0]`: either a constant state or a previously
/// computed trajectory segment (for continuation runs).
#[derive(Debug, Clone)]
pub enum History<S> {
    Constant(S),
    Sampled(Trajectory<S>),
}

impl<S: OdeState> History<S> {
    fn eval_into(&self, t: f64, buf: &mut S) -> Result<()> {
        match self {
            // A constant history is defined for every t at or before the
            // integration start; the dynamics only query [-tau_max, 0].
            History::Constant(v) => {
                buf.copy_from(v);
                Ok(())
            }
            History::Sampled(traj) => traj.eval_into(t, buf),
        }
    }

    fn initial_state(&self, t0: f64) -> Result<S> {
        match self {
            History::Constant(v) => Ok(v.clone()),
            History::Sampled(traj) => traj.eval(t0),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            History::Constant(v) => v.all_finite(),
            History::Sampled(traj) => traj.samples.iter().all(|s| s.all_finite()),
        }
    }
}

/// Evaluates the combined (history + computed trajectory) solution at `t`.
///
/// Times at or before `t0` fall through to the initial history; times inside
/// the computed range interpolate the trajectory; later times are an error.
pub fn history_eval<S: OdeState>(traj: &Trajectory<S>, history: &History<S>, t: f64) -> Result<S> {
    let mut buf = traj.samples[0].clone();
    if t >= traj.t0 {
        traj.eval_into(t, &mut buf)?;
    } else {
        history.eval_into(t, &mut buf)?;
    }
    Ok(buf)
}

/// Outcome of one completed integration step.
enum StepOutcome {
    Ok,
    Truncated,
}

/// Delayed-state lookup at time `t_stage - tau`. Zero delay reads the
/// current stage state itself instead of the history.
fn delayed_into<S: OdeState>(
    traj: &Trajectory<S>,
    history: &History<S>,
    t_stage: f64,
    tau: f64,
    stage_state: &S,
    buf: &mut S,
) -> Result<()> {
    if tau == 0.0 {
        buf.copy_from(stage_state);
        return Ok(());
    }
    let t = t_stage - tau;
    if t >= traj.t0 {
        traj.eval_into(t, buf)
    } else {
        history.eval_into(t, buf)
    }
}

/// Generic method-of-steps RK4 driver. `rhs(now, delayed1, delayed2, out)`
/// evaluates the vector field into `out`.
struct Stepper<'h, S, F> {
    tau1: f64,
    tau2: f64,
    dt: f64,
    rhs: F,
    history: &'h History<S>,
    traj: Trajectory<S>,
    // scratch buffers, reused across steps
    stage: S,
    xd1: S,
    xd2: S,
    k: [S; 4],
}

impl<'h, S: OdeState, F: Fn(&S, &S, &S, &mut S)> Stepper<'h, S, F> {
    fn new(
        tau1: f64,
        tau2: f64,
        t0: f64,
        dt: f64,
        rhs: F,
        history: &'h History<S>,
    ) -> Result<Self> {
        let y0 = history.initial_state(t0)?;
        let traj = Trajectory {
            t0,
            dt,
            samples: vec![y0.clone()],
            derivs: Vec::new(),
            truncated_at: None,
        };
        let mut s = Self {
            tau1,
            tau2,
            dt,
            rhs,
            history,
            traj,
            stage: y0.clone(),
            xd1: y0.clone(),
            xd2: y0.clone(),
            k: [y0.clone(), y0.clone(), y0.clone(), y0],
        };
        // derivative at the initial node
        let mut d0 = s.stage.clone();
        delayed_into(&s.traj, s.history, t0, s.tau1, &s.traj.samples[0], &mut s.xd1)?;
        delayed_into(&s.traj, s.history, t0, s.tau2, &s.traj.samples[0], &mut s.xd2)?;
        (s.rhs)(&s.traj.samples[0], &s.xd1, &s.xd2, &mut d0);
        s.traj.derivs.push(d0);
        Ok(s)
    }

    fn step(&mut self) -> Result<StepOutcome> {
        let m = self.traj.samples.len() - 1;
        let t = self.traj.time_at(m);
        let t_half = t + 0.5 * self.dt;
        let t_next = self.traj.time_at(m + 1);

        // k1 is the stored derivative of the current node.
        let k1 = self.traj.derivs[m].clone();

        // k2 at t + dt/2
        self.stage.copy_from(&self.traj.samples[m]);
        self.stage.add_scaled(0.5 * self.dt, &k1);
        delayed_into(&self.traj, self.history, t_half, self.tau1, &self.stage, &mut self.xd1)?;
        delayed_into(&self.traj, self.history, t_half, self.tau2, &self.stage, &mut self.xd2)?;
        let mut k2 = self.k[1].clone();
        (self.rhs)(&self.stage, &self.xd1, &self.xd2, &mut k2);

        // k3 at t + dt/2
        self.stage.copy_from(&self.traj.samples[m]);
        self.stage.add_scaled(0.5 * self.dt, &k2);
        delayed_into(&self.traj, self.history, t_half, self.tau1, &self.stage, &mut self.xd1)?;
        delayed_into(&self.traj, self.history, t_half, self.tau2, &self.stage, &mut self.xd2)?;
        let mut k3 = self.k[2].clone();
        (self.rhs)(&self.stage, &self.xd1, &self.xd2, &mut k3);

        // k4 at t + dt; the delayed values at t + dt are reused for the
        // next node's stored derivative.
        self.stage.copy_from(&self.traj.samples[m]);
        self.stage.add_scaled(self.dt, &k3);
        delayed_into(&self.traj, self.history, t_next, self.tau1, &self.stage, &mut self.xd1)?;
        delayed_into(&self.traj, self.history, t_next, self.tau2, &self.stage, &mut self.xd2)?;
        let mut k4 = self.k[3].clone();
        (self.rhs)(&self.stage, &self.xd1, &self.xd2, &mut k4);

        let mut y_next = self.traj.samples[m].clone();
        y_next.add_scaled(self.dt / 6.0, &k1);
        y_next.add_scaled(self.dt / 3.0, &k2);
        y_next.add_scaled(self.dt / 3.0, &k3);
        y_next.add_scaled(self.dt / 6.0, &k4);

        if !y_next.all_finite() {
            // Non-finite values are never stored.
            self.traj.truncated_at = Some(t_next);
            return Ok(StepOutcome::Truncated);
        }

        let overflowed = y_next.max_abs() > OVERFLOW_CAP;

        // Derivative at the new node. Zero-delay terms use y_next itself;
        // positive delays reuse the t + dt lookups above.
        if self.tau1 == 0.0 {
            self.xd1.copy_from(&y_next);
        }
        if self.tau2 == 0.0 {
            self.xd2.copy_from(&y_next);
        }
        let mut d_next = self.k[0].clone();
        (self.rhs)(&y_next, &self.xd1, &self.xd2, &mut d_next);

        self.traj.samples.push(y_next);
        self.traj.derivs.push(d_next);

        if overflowed {
            self.traj.truncated_at = Some(t_next);
            return Ok(StepOutcome::Truncated);
        }
        Ok(StepOutcome::Ok)
    }
}

fn step_count(t_end: f64, dt: f64) -> usize {
    let raw = t_end / dt;
    let steps = if (raw - raw.round()).abs() < 1e-9 * raw.max(1.0) {
        raw.round()
    } else {
        raw.ceil()
    };
    (steps as usize).max(1)
}

fn validate_run(params: &RingParams, t_end: f64, dt: f64) -> Result<()> {
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be > 0, got {t_end}")));
    }
    if let Some(tau_min) = params.tau_min_positive() {
        if dt > tau_min / 4.0 {
            return Err(Error::Config(format!(
                "dt={dt} violates the method-of-steps bound dt <= tau_min/4 = {}",
                tau_min / 4.0
            )));
        }
    }
    Ok(())
}

fn drive<S: OdeState, F: Fn(&S, &S, &S, &mut S)>(
    mut stepper: Stepper<'_, S, F>,
    steps: usize,
) -> Result<Trajectory<S>> {
    for _ in 0..steps {
        match stepper.step()? {
            StepOutcome::Ok => {}
            StepOutcome::Truncated => break,
        }
    }
    Ok(stepper.traj)
}

/// Integrates the full N-agent system on `[0, t_end]` (times start at 0 for
/// a constant history, or at the history trajectory's end for continuation).
pub fn integrate_full(
    params: &RingParams,
    history: &History<Vec<f64>>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<Vec<f64>>> {
    validate_run(params, t_end, dt)?;
    if !history.all_finite() {
        return Err(Error::NonFinite("initial history"));
    }
    let t0 = match history {
        History::Constant(v) => {
            if v.len() != params.n {
                return Err(Error::DimensionMismatch { expected: params.n, got: v.len() });
            }
            0.0
        }
        History::Sampled(traj) => {
            if traj.samples[0].len() != params.n {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    got: traj.samples[0].len(),
                });
            }
            traj.end_time()
        }
    };
    let p = *params;
    let rhs = move |x: &Vec<f64>, d1: &Vec<f64>, d2: &Vec<f64>, out: &mut Vec<f64>| {
        full_rhs_into(x, d1, d2, &p, out);
    };
    let stepper = Stepper::new(params.tau1, params.tau2, t0, dt, rhs, history)?;
    drive(stepper, step_count(t_end, dt))
}

/// Integrates a single circulant mode with phase angle `theta` from a
/// constant complex history.
pub fn integrate_mode(
    theta: f64,
    params: &RingParams,
    history: Complex64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory<Complex64>> {
    validate_run(params, t_end, dt)?;
    let hist = History::Constant(history);
    if !hist.all_finite() {
        return Err(Error::NonFinite("initial history"));
    }
    let p = *params;
    let rhs = move |z: &Complex64, d1: &Complex64, d2: &Complex64, out: &mut Complex64| {
        *out = mode_rhs(*z, *d1, *d2, theta, &p);
    };
    let stepper = Stepper::new(params.tau1, params.tau2, 0.0, dt, rhs, &hist)?;
    drive(stepper, step_count(t_end, dt))
}
