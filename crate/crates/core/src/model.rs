//! Ring network model: parameters and the right-hand side of the delayed
//! dynamics, both for the full N-agent system and for a single Fourier mode.
//!
//! The full system is
//!
//! ```text
//! dx_i/dt = -(K_p - K_n) x_i(t) + K_p x_{i+1}(t - tau1) - K_n x_{i-1}(t - tau2)
//! ```
//!
//! with periodic indices, and each circulant mode z_k obeys
//!
//! ```text
//! dz_k/dt = -(K_p - K_n) z_k(t) + K_p e^{i theta_k} z_k(t - tau1)
//!           - K_n e^{-i theta_k} z_k(t - tau2),     theta_k = 2 pi k / N.
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Agent states of the full system. Length must equal `RingParams::n`.
pub type StateVector = Vec<f64>;

/// Model parameters of the signed directed ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingParams {
    /// Number of agents (>= 2).
    pub n: usize,
    /// Cooperative coupling strength K_p (> 0), units 1/time.
    pub k_p: f64,
    /// Antagonistic coupling strength K_n (>= 0), units 1/time.
    pub k_n: f64,
    /// Forward delay tau1 (>= 0), time units.
    pub tau1: f64,
    /// Backward delay tau2 (>= 0), time units.
    pub tau2: f64,
}

impl RingParams {
    /// Builds a parameter set, rejecting values outside the model's domain.
    ///
    /// `k_n = 0` is accepted: it reduces the model to the purely cooperative
    /// ring protocol, which several sanity checks rely on.
    pub fn new(n: usize, k_p: f64, k_n: f64, tau1: f64, tau2: f64) -> Result<Self> {
        let p = Self { n, k_p, k_n, tau1, tau2 };
        p.validate()?;
        Ok(p)
    }

    /// Default desk-scale parameter set without delays: N = 20, K_p = 1, K_n = 0.5.
    pub fn default_couplings() -> Self {
        Self { n: 20, k_p: 1.0, k_n: 0.5, tau1: 0.0, tau2: 0.0 }
    }

    /// Same couplings with the given delays.
    pub fn with_delays(mut self, tau1: f64, tau2: f64) -> Self {
        self.tau1 = tau1;
        self.tau2 = tau2;
        self
    }

    /// Checks all invariants, returning a configuration error on violation.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        for (name, v) in [
            ("k_p", self.k_p),
            ("k_n", self.k_n),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.k_p <= 0.0 {
            return Err(Error::Config(format!("k_p must be > 0, got {}", self.k_p)));
        }
        if self.k_n < 0.0 {
            return Err(Error::Config(format!("k_n must be >= 0, got {}", self.k_n)));
        }
        if self.tau1 < 0.0 || self.tau2 < 0.0 {
            return Err(Error::Config(format!(
                "delays must be >= 0, got tau1={}, tau2={}",
                self.tau1, self.tau2
            )));
        }
        Ok(())
    }

    /// Largest delay.
    pub fn tau_max(&self) -> f64 {
        self.tau1.max(self.tau2)
    }

    /// Smallest strictly positive delay, if any.
    pub fn tau_min_positive(&self) -> Option<f64> {
        match (self.tau1 > 0.0, self.tau2 > 0.0) {
            (true, true) => Some(self.tau1.min(self.tau2)),
            (true, false) => Some(self.tau1),
            (false, true) => Some(self.tau2),
            (false, false) => None,
        }
    }
}

/// Phase angle theta_k = 2 pi k / n of circulant mode `k`.
pub fn theta_k(k: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * k as f64 / n as f64
}

/// A single circulant mode: index, phase angle, and complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoordinate {
    pub k: usize,
    pub theta: f64,
    pub amplitude: Complex64,
}

impl ModeCoordinate {
    /// The phase angle is derived from (k, n), never stored independently.
    pub fn new(k: usize, n: usize, amplitude: Complex64) -> Self {
        Self { k, theta: theta_k(k, n), amplitude }
    }
}

fn check_len(len: usize, n: usize) -> Result<()> {
    if len != n {
        return Err(Error::DimensionMismatch { expected: n, got: len });
    }
    Ok(())
}

/// Right-hand side of the full delayed system.
///
/// `x_now` is the instantaneous state, `x_tau1` the state at `t - tau1`,
/// `x_tau2` the state at `t - tau2`. Indices wrap periodically: agent `i`
/// listens to `i+1 (mod n)` through the cooperative channel and to
/// `i-1 (mod n)` through the antagonistic one.
pub fn full_rhs(
    x_now: &[f64],
    x_tau1: &[f64],
    x_tau2: &[f64],
    params: &RingParams,
) -> Result<StateVector> {
    let n = params.n;
    check_len(x_now.len(), n)?;
    check_len(x_tau1.len(), n)?;
    check_len(x_tau2.len(), n)?;
    let mut out = vec![0.0; n];
    full_rhs_into(x_now, x_tau1, x_tau2, params, &mut out);
    Ok(out)
}

/// Allocation-free variant used by the integrator's inner loop.
/// All slices must have length `params.n`.
pub(crate) fn full_rhs_into(
    x_now: &[f64],
    x_tau1: &[f64],
    x_tau2: &[f64],
    params: &RingParams,
    out: &mut [f64],
) {
    let n = params.n;
    let a = params.k_p - params.k_n;
    for i in 0..n {
        let fwd = if i + 1 == n { 0 } else { i + 1 };
        let bwd = if i == 0 { n - 1 } else { i - 1 };
        out[i] = -a * x_now[i] + params.k_p * x_tau1[fwd] - params.k_n * x_tau2[bwd];
    }
}

/// Right-hand side of a single circulant mode with phase angle `theta`.
pub fn mode_rhs(
    z_now: Complex64,
    z_tau1: Complex64,
    z_tau2: Complex64,
    theta: f64,
    params: &RingParams,
) -> Complex64 {
    let a = params.k_p - params.k_n;
    let fwd = Complex64::from_polar(1.0, theta);
    let bwd = Complex64::from_polar(1.0, -theta);
    -a * z_now + params.k_p * fwd * z_tau1 - params.k_n * bwd * z_tau2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
    }

    /// Literal loop translation of the expanded model equation, kept separate
    /// from the production path on purpose.
    fn oracle_rhs(x: &[f64], y1: &[f64], y2: &[f64], p: &RingParams) -> Vec<f64> {
        let n = p.n;
        let mut dx = Vec::with_capacity(n);
        for i in 0..n {
            let ip1 = (i + 1) % n;
            let im1 = (i + n - 1) % n;
            dx.push(-(p.k_p - p.k_n) * x[i] + p.k_p * y1[ip1] - p.k_n * y2[im1]);
        }
        dx
    }

    #[test]
    fn uniform_state_is_equilibrium() {
        let p = RingParams::default_couplings();
        for c in [0.0, 1.0, -3.5] {
            let x = vec![c; p.n];
            let dx = full_rhs(&x, &x, &x, &p).unwrap();
            assert!(dx.iter().all(|&v| v == 0.0), "c={c}: {dx:?}");
        }
    }

    #[test]
    fn two_agent_cooperative_hand_case() {
        let p = RingParams::new(2, 1.0, 0.0, 0.0, 0.0).unwrap();
        let x = vec![1.0, -1.0];
        let dx = full_rhs(&x, &x, &x, &p).unwrap();
        assert_eq!(dx, vec![-2.0, 2.0]);
    }

    #[test]
    fn full_rhs_matches_oracle_loop() {
        let p = RingParams::new(20, 1.0, 0.5, 0.3, 0.7).unwrap();
        let x = random_state(20, 1);
        let y1 = random_state(20, 2);
        let y2 = random_state(20, 3);
        let dx = full_rhs(&x, &y1, &y2, &p).unwrap();
        let expected = oracle_rhs(&x, &y1, &y2, &p);
        for (a, b) in dx.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = RingParams::default_couplings();
        let x = vec![0.0; 19];
        let y = vec![0.0; 20];
        assert!(matches!(
            full_rhs(&x, &y, &y, &p),
            Err(Error::DimensionMismatch { expected: 20, got: 19 })
        ));
    }

    #[test]
    fn mode_rhs_consensus_mode_vanishes() {
        let p = RingParams::default_couplings();
        let one = Complex64::new(1.0, 0.0);
        let dz = mode_rhs(one, one, one, 0.0, &p);
        assert_eq!(dz, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mode_rhs_theta_pi_hand_case() {
        let p = RingParams::new(2, 1.0, 0.5, 0.0, 0.0).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let dz = mode_rhs(one, one, one, std::f64::consts::PI, &p);
        assert!((dz.re + 1.0).abs() < 1e-15 && dz.im.abs() < 1e-15, "{dz}");
    }

    #[test]
    fn mode_rhs_matches_tuple_arithmetic_oracle() {
        // Same expression evaluated with (re, im) pairs instead of Complex64.
        let p = RingParams::default_couplings();
        let th = theta_k(1, 20);
        let z = (1.0, 0.0);
        let z1 = (0.9, 0.1);
        let z2 = (0.8, -0.2);
        let a = p.k_p - p.k_n;
        let mul = |(ar, ai): (f64, f64), (br, bi): (f64, f64)| (ar * br - ai * bi, ar * bi + ai * br);
        let e_fwd = (th.cos(), th.sin());
        let e_bwd = (th.cos(), -th.sin());
        let t1 = mul(e_fwd, z1);
        let t2 = mul(e_bwd, z2);
        let expect = (
            -a * z.0 + p.k_p * t1.0 - p.k_n * t2.0,
            -a * z.1 + p.k_p * t1.1 - p.k_n * t2.1,
        );
        let got = mode_rhs(
            Complex64::new(z.0, z.1),
            Complex64::new(z1.0, z1.1),
            Complex64::new(z2.0, z2.1),
            th,
            &p,
        );
        assert!((got.re - expect.0).abs() < 1e-15);
        assert!((got.im - expect.1).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(RingParams::new(1, 1.0, 0.5, 0.0, 0.0).is_err());
        assert!(RingParams::new(20, 0.0, 0.5, 0.0, 0.0).is_err());
        assert!(RingParams::new(20, 1.0, -0.1, 0.0, 0.0).is_err());
        assert!(RingParams::new(20, 1.0, 0.5, -1.0, 0.0).is_err());
        assert!(RingParams::new(20, 1.0, 0.5, 0.0, f64::NAN).is_err());
        assert!(RingParams::new(20, 1.0, 0.0, 0.5, 0.5).is_ok());
        // Equal couplings are allowed: the self term vanishes.
        assert!(RingParams::new(20, 1.0, 1.0, 0.5, 0.5).is_ok());
    }

    #[test]
    fn theta_k_values() {
        assert_eq!(theta_k(0, 20), 0.0);
        assert!((theta_k(10, 20) - std::f64::consts::PI).abs() < 1e-15);
        let m = ModeCoordinate::new(3, 20, Complex64::new(0.0, 0.0));
        assert_eq!(m.theta, theta_k(3, 20));
    }
}
