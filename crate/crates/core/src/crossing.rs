//! Stability switching curves: loci in the (tau1, tau2) plane where a mode
//! has a purely imaginary characteristic root lambda = i omega.
//!
//! Substituting lambda = i omega into the characteristic equation asks for
//!
//! ```text
//! K_p e^{i(theta_k - omega tau1)} - K_n e^{-i(theta_k + omega tau2)}
//!     = (K_p - K_n) + i omega =: A(omega)
//! ```
//!
//! which is a two-circle intersection problem: the K_p vector must land on
//! the intersection of a circle of radius K_p around the origin with a
//! circle of radius K_n around A. Solutions exist iff
//! |K_p - K_n| <= |A| <= K_p + K_n, i.e. omega^2 <= 4 K_p K_n, and each
//! solution angle fixes tau1 and tau2 up to integer multiples of 2 pi/omega
//! (the branch integers). This yields every crossing point explicitly, with
//! no path following.

use serde::{Deserialize, Serialize};

use crate::charroots::char_eval;
use crate::error::{Error, Result};
use crate::model::{theta_k, RingParams};
use num_complex::Complex64;

/// Residual bound every emitted crossing point must satisfy.
pub const CROSSING_RESIDUAL_TOL: f64 = 1e-10;

/// Rectangle in the (tau1, tau2) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayWindow {
    pub tau1: (f64, f64),
    pub tau2: (f64, f64),
}

impl DelayWindow {
    pub fn new(tau1: (f64, f64), tau2: (f64, f64)) -> Result<Self> {
        let w = Self { tau1, tau2 };
        if !(tau1.0 >= 0.0 && tau1.0 <= tau1.1 && tau2.0 >= 0.0 && tau2.0 <= tau2.1) {
            return Err(Error::Config(format!("invalid delay window {w:?}")));
        }
        Ok(w)
    }

    pub fn square(hi: f64) -> Self {
        Self { tau1: (0.0, hi), tau2: (0.0, hi) }
    }

    pub fn contains(&self, tau1: f64, tau2: f64) -> bool {
        tau1 >= self.tau1.0 && tau1 <= self.tau1.1 && tau2 >= self.tau2.0 && tau2 <= self.tau2.1
    }
}

/// A purely-imaginary-root solution of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingPoint {
    /// Crossing frequency (rad/time), nonzero.
    pub omega: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub k: usize,
    /// 2 pi / omega shift indices applied to tau1 and tau2.
    pub branch: (i64, i64),
    /// Which of the two circle intersections was taken (+1 or -1).
    pub sign_choice: i8,
    /// |char_eval(i omega)| at (tau1, tau2).
    pub residual: f64,
}

/// One connected piece of a switching curve, traced over an omega grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingCurve {
    pub k: usize,
    pub sign_choice: i8,
    pub branch: (i64, i64),
    pub points: Vec<CrossingPoint>,
    pub window: DelayWindow,
}

/// Whether frequency `omega` admits crossing points at all:
/// omega^2 <= 4 K_p K_n (the lower annulus bound holds identically).
pub fn crossing_feasible(omega: f64, params: &RingParams) -> bool {
    omega * omega <= 4.0 * params.k_p * params.k_n
}

/// Largest feasible crossing frequency, 2 sqrt(K_p K_n).
pub fn omega_max(params: &RingParams) -> f64 {
    2.0 * (params.k_p * params.k_n).sqrt()
}

/// Whether mode `k` can cross the axis at omega = 0. The condition
/// char_eval(0, theta_k) = 0 is delay independent; for a transverse mode it
/// holds only in the degenerate case K_p = K_n with theta_k = pi.
pub fn zero_frequency_crossing(k: usize, params: &RingParams) -> bool {
    let v = char_eval(Complex64::new(0.0, 0.0), theta_k(k, params.n), params);
    v.norm() < 1e-12 * (params.k_p + params.k_n).max(1.0)
}

/// The two solved circle-intersection angles for frequency `omega`:
/// phi1 for the K_p vector and phi2 for the K_n vector, given the sign
/// choice. Cosines are clamped against rounding at the tangency.
fn intersection_angles(omega: f64, params: &RingParams, sign: i8) -> (f64, f64) {
    let (kp, kn) = (params.k_p, params.k_n);
    let a = Complex64::new(kp - kn, omega);
    let amod = a.norm();
    let psi = a.arg();
    let s = sign as f64;
    let cos_g1 = ((amod * amod + kp * kp - kn * kn) / (2.0 * amod * kp)).clamp(-1.0, 1.0);
    let gamma1 = cos_g1.acos();
    let cos_b = ((amod * amod + kn * kn - kp * kp) / (2.0 * amod * kn)).clamp(-1.0, 1.0);
    let beta = cos_b.acos();
    let phi1 = psi + s * gamma1;
    // Closure K_n v = K_p u - A puts the K_n vector at psi + s (pi - beta).
    let phi2 = psi + s * (std::f64::consts::PI - beta);
    (phi1, phi2)
}

/// Crossing point of mode `k` at frequency `omega` for one branch and sign
/// choice, or `None` when the resulting delay pair has a negative entry or
/// the point cannot be certified to [`CROSSING_RESIDUAL_TOL`]. The latter
/// happens only within ~1e-8 of the tangency omega_max, where the two
/// circle intersections merge and the angle is not resolvable in f64.
///
/// Preconditions: `omega` feasible and nonzero (the omega = 0 branch is
/// degenerate and handled by [`zero_frequency_crossing`]).
pub fn crossing_points(
    omega: f64,
    k: usize,
    params: &RingParams,
    branch: (i64, i64),
    sign_choice: i8,
) -> Result<Option<CrossingPoint>> {
    params.validate()?;
    if omega == 0.0 {
        return Err(Error::Config("omega = 0 is a degenerate crossing branch".into()));
    }
    if !crossing_feasible(omega, params) {
        return Err(Error::Config(format!(
            "omega={omega} outside the feasible band |omega| <= {}",
            omega_max(params)
        )));
    }
    if !(sign_choice == 1 || sign_choice == -1) {
        return Err(Error::Config(format!("sign_choice must be +-1, got {sign_choice}")));
    }
    let th = theta_k(k, params.n);
    let (phi1, phi2) = intersection_angles(omega, params, sign_choice);
    let two_pi = 2.0 * std::f64::consts::PI;
    let tau1 = (th - phi1 + two_pi * branch.0 as f64) / omega;
    let tau2 = (-th - phi2 + two_pi * branch.1 as f64) / omega;
    if tau1 < 0.0 || tau2 < 0.0 {
        return Ok(None);
    }
    let probe = params.with_delays(tau1, tau2);
    let residual = char_eval(Complex64::new(0.0, omega), th, &probe).norm();
    if residual >= CROSSING_RESIDUAL_TOL {
        return Ok(None);
    }
    Ok(Some(CrossingPoint {
        omega,
        tau1,
        tau2,
        k,
        branch,
        sign_choice,
        residual,
    }))
}

/// Branch integers m with lo <= (base + 2 pi m)/omega <= hi.
fn branch_range(base: f64, omega: f64, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let m_lo = ((omega * lo - base) / two_pi).ceil() as i64;
    let m_hi = ((omega * hi - base) / two_pi).floor() as i64;
    m_lo..=m_hi
}

/// Traces all switching curves of mode `k` that intersect `window`,
/// sweeping omega over (0, omega_max] with `omega_samples` points and
/// enumerating every branch pair that lands inside the window. Points are
/// grouped into curves by (sign, m1, m2); a branch that leaves the window
/// and re-enters is split into separate curve pieces.
pub fn trace_curves(
    k: usize,
    params: &RingParams,
    window: DelayWindow,
    omega_samples: usize,
) -> Result<Vec<CrossingCurve>> {
    params.validate()?;
    if omega_samples < 16 {
        return Err(Error::Config(format!(
            "omega_samples must be >= 16, got {omega_samples}"
        )));
    }
    let mut w_max = omega_max(params);
    if w_max == 0.0 {
        return Ok(Vec::new()); // K_n = 0: no feasible nonzero frequency
    }
    // sqrt rounding can push w_max^2 one ulp past 4 K_p K_n; nudge down so
    // every emitted point satisfies the squared feasibility bound literally
    while w_max * w_max > 4.0 * params.k_p * params.k_n {
        w_max = w_max.next_down();
    }
    let th = theta_k(k, params.n);

    // (sign, m1, m2) -> points with their omega-grid index, in sweep order
    let mut groups: std::collections::BTreeMap<(i8, i64, i64), Vec<(usize, CrossingPoint)>> =
        std::collections::BTreeMap::new();
    for i in 1..=omega_samples {
        let omega = w_max * i as f64 / omega_samples as f64;
        for sign in [1i8, -1] {
            let (phi1, phi2) = intersection_angles(omega, params, sign);
            for m1 in branch_range(th - phi1, omega, window.tau1.0, window.tau1.1) {
                for m2 in branch_range(-th - phi2, omega, window.tau2.0, window.tau2.1) {
                    if let Some(pt) = crossing_points(omega, k, params, (m1, m2), sign)? {
                        if window.contains(pt.tau1, pt.tau2) {
                            groups.entry((sign, m1, m2)).or_default().push((i, pt));
                        }
                    }
                }
            }
        }
    }

    let mut curves = Vec::new();
    for ((sign, m1, m2), pts) in groups {
        let mut piece: Vec<CrossingPoint> = Vec::new();
        let mut prev_idx = 0usize;
        for (idx, pt) in pts {
            if !piece.is_empty() && idx != prev_idx + 1 {
                curves.push(CrossingCurve {
                    k,
                    sign_choice: sign,
                    branch: (m1, m2),
                    points: std::mem::take(&mut piece),
                    window,
                });
            }
            piece.push(pt);
            prev_idx = idx;
        }
        if !piece.is_empty() {
            curves.push(CrossingCurve { k, sign_choice: sign, branch: (m1, m2), points: piece, window });
        }
    }
    Ok(curves)
}

/// Switching curves of every transverse mode (k = 1..n-1) in the window.
pub fn trace_all_modes(
    params: &RingParams,
    window: DelayWindow,
    omega_samples: usize,
) -> Result<Vec<CrossingCurve>> {
    let mut all = Vec::new();
    for k in 1..params.n {
        all.extend(trace_curves(k, params, window, omega_samples)?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charroots::{rightmost_roots, spectral_abscissa, RootScanOptions};

    fn default_params() -> RingParams {
        RingParams::default_couplings()
    }

    #[test]
    fn feasibility_band() {
        let p = default_params();
        assert!(crossing_feasible(0.0, &p));
        let bound = 2.0 * 0.5f64.sqrt();
        assert!((omega_max(&p) - bound).abs() < 1e-15);
        assert!(crossing_feasible(bound * 0.999, &p));
        assert!(!crossing_feasible(bound * 1.01, &p));
    }

    #[test]
    fn feasibility_matches_dense_circle_sampling() {
        // Oracle: scan both unit-circle angles densely and measure how close
        // K_p u - K_n v can get to A(omega) just inside and outside the bound.
        let p = default_params();
        let bound = omega_max(&p);
        let closest = |omega: f64| {
            let a = Complex64::new(p.k_p - p.k_n, omega);
            let mut best = f64::INFINITY;
            let n = 2000;
            for i in 0..n {
                let u = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / n as f64);
                // best K_n v for this u points from A toward K_p u
                let d = p.k_p * u - a;
                best = best.min((d.norm() - p.k_n).abs());
            }
            best
        };
        assert!(closest(bound * 0.99) < 1e-3);
        assert!(closest(bound * 1.05) > 1e-3);
    }

    #[test]
    fn known_point_mode_one_omega_one() {
        // At omega = 1 the intersection angles collapse to exact values:
        // phi1 = atan(2) + atan(1/2) = pi/2 and phi2 = pi, so the smallest
        // nonnegative branch is tau1 = theta + 3 pi/2, tau2 = pi - theta.
        let p = default_params();
        let th = theta_k(1, 20);
        let pt = crossing_points(1.0, 1, &p, (1, 1), 1).unwrap().unwrap();
        assert!((pt.tau1 - (th + 1.5 * std::f64::consts::PI)).abs() < 1e-12);
        assert!((pt.tau2 - (std::f64::consts::PI - th)).abs() < 1e-12);
        assert!(pt.residual < CROSSING_RESIDUAL_TOL);
    }

    /// 2-D Newton on the real/imaginary split of the crossing equations,
    /// independent of the two-circle construction.
    fn newton_2d(p: &RingParams, k: usize, omega: f64, start: (f64, f64)) -> Option<(f64, f64)> {
        let th = theta_k(k, p.n);
        let f = |t1: f64, t2: f64| {
            (
                p.k_p * (th - omega * t1).cos() - p.k_n * (th + omega * t2).cos() - (p.k_p - p.k_n),
                p.k_p * (th - omega * t1).sin() + p.k_n * (th + omega * t2).sin() - omega,
            )
        };
        let (mut t1, mut t2) = start;
        for _ in 0..100 {
            let (f1, f2) = f(t1, t2);
            if f1.abs().max(f2.abs()) < 1e-14 {
                return Some((t1, t2));
            }
            let j11 = p.k_p * omega * (th - omega * t1).sin();
            let j12 = p.k_n * omega * (th + omega * t2).sin();
            let j21 = -p.k_p * omega * (th - omega * t1).cos();
            let j22 = p.k_n * omega * (th + omega * t2).cos();
            let det = j11 * j22 - j12 * j21;
            if det.abs() < 1e-14 {
                return None;
            }
            t1 -= (f1 * j22 - f2 * j12) / det;
            t2 -= (j11 * f2 - j21 * f1) / det;
        }
        None
    }

    #[test]
    fn two_circle_solution_matches_2d_newton_oracle() {
        let p = default_params();
        let (k, omega) = (1usize, 1.0f64);
        let pt = crossing_points(omega, k, &p, (1, 1), 1).unwrap().unwrap();
        // coarse scan for the oracle's starting point near the solver output
        let mut best = (f64::INFINITY, (0.0, 0.0));
        for i in 0..40 {
            for j in 0..40 {
                let t1 = pt.tau1 - 0.5 + i as f64 * 0.025;
                let t2 = pt.tau2 - 0.5 + j as f64 * 0.025;
                let th = theta_k(k, p.n);
                let r1 = p.k_p * (th - omega * t1).cos()
                    - p.k_n * (th + omega * t2).cos()
                    - (p.k_p - p.k_n);
                let r2 =
                    p.k_p * (th - omega * t1).sin() + p.k_n * (th + omega * t2).sin() - omega;
                let r = r1.hypot(r2);
                if r < best.0 {
                    best = (r, (t1, t2));
                }
            }
        }
        let (t1, t2) = newton_2d(&p, k, omega, best.1).expect("oracle converged");
        assert!((t1 - pt.tau1).abs() < 1e-8, "{t1} vs {}", pt.tau1);
        assert!((t2 - pt.tau2).abs() < 1e-8, "{t2} vs {}", pt.tau2);
    }

    #[test]
    fn sign_flip_gives_valid_or_absent_point() {
        let p = default_params();
        for i in 1..=32 {
            let omega = omega_max(&p) * i as f64 / 33.0;
            for sign in [1i8, -1] {
                for m1 in 0..3i64 {
                    for m2 in 0..3i64 {
                        if let Some(pt) = crossing_points(omega, 7, &p, (m1, m2), sign).unwrap() {
                            assert!(pt.residual < CROSSING_RESIDUAL_TOL, "{pt:?}");
                            assert!(pt.tau1 >= 0.0 && pt.tau2 >= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn infeasible_and_zero_omega_are_rejected() {
        let p = default_params();
        assert!(crossing_points(5.0, 1, &p, (0, 0), 1).is_err());
        assert!(crossing_points(0.0, 1, &p, (0, 0), 1).is_err());
    }

    #[test]
    fn stable_window_has_no_curves() {
        // Window with margin inside the consensus region: spectral abscissa
        // verified negative at corners and center, so no curve may enter.
        let p = default_params();
        let window = DelayWindow::square(0.04);
        for (t1, t2) in [(0.0, 0.0), (0.04, 0.0), (0.0, 0.04), (0.04, 0.04), (0.02, 0.02)] {
            let q = p.with_delays(t1, t2);
            let opts = RootScanOptions::for_params(&q);
            let (alpha, _) = spectral_abscissa(&q, &opts).unwrap();
            assert!(alpha < 0.0, "abscissa {alpha} at ({t1},{t2})");
        }
        for k in 1..20 {
            assert!(trace_curves(k, &p, window, 64).unwrap().is_empty(), "k={k}");
        }
    }

    #[test]
    fn default_window_has_curves_and_all_points_certified() {
        let p = default_params();
        let window = DelayWindow::square(3.0);
        let curves = trace_all_modes(&p, window, 128).unwrap();
        assert!(!curves.is_empty());
        let mut n_points = 0;
        for c in &curves {
            for (a, b) in c.points.iter().zip(c.points.iter().skip(1)) {
                assert!(b.omega > a.omega, "omega not monotone in curve");
            }
            for pt in &c.points {
                n_points += 1;
                assert!(pt.residual < CROSSING_RESIDUAL_TOL, "{pt:?}");
                assert!(window.contains(pt.tau1, pt.tau2));
                assert!(pt.omega * pt.omega <= 4.0 * p.k_p * p.k_n + 1e-12);
            }
        }
        assert!(n_points > 100);
    }

    #[test]
    fn crossing_point_agrees_with_root_scan() {
        // At a crossing point the mode must own a near-imaginary root at
        // i omega.
        let p = default_params();
        let window = DelayWindow::square(3.0);
        let curves = trace_curves(5, &p, window, 64).unwrap();
        let pt = curves
            .iter()
            .flat_map(|c| &c.points)
            .min_by(|a, b| (a.tau1 + a.tau2).partial_cmp(&(b.tau1 + b.tau2)).unwrap())
            .expect("mode 5 has curves in [0,3]^2");
        let q = p.with_delays(pt.tau1, pt.tau2);
        let opts = RootScanOptions::for_params(&q);
        let roots = rightmost_roots(5, &q, &opts, 6).unwrap();
        let target = Complex64::new(0.0, pt.omega);
        let nearest = roots
            .iter()
            .min_by(|a, b| {
                (a.lam - target).norm().partial_cmp(&(b.lam - target).norm()).unwrap()
            })
            .unwrap();
        assert!(nearest.lam.re.abs() < 1e-6, "root {} not near i omega", nearest.lam);
        assert!((nearest.lam.im - pt.omega).abs() < 1e-6);
    }

    #[test]
    fn zero_frequency_crossing_only_in_degenerate_case() {
        let p = default_params();
        for k in 1..20 {
            assert!(!zero_frequency_crossing(k, &p), "k={k}");
        }
        let q = RingParams::new(20, 1.0, 1.0, 0.5, 0.5).unwrap();
        assert!(zero_frequency_crossing(10, &q));
        assert!(!zero_frequency_crossing(3, &q));
    }
}
