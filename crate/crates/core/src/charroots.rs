//! Characteristic roots of the transcendental mode equation
//!
//! ```text
//! lambda + (K_p - K_n) - K_p e^{-lambda tau1} e^{i theta_k}
//!                      + K_n e^{-lambda tau2} e^{-i theta_k} = 0
//! ```
//!
//! Explicit root expressions do not exist once a delay is positive, so roots
//! are located in two stages: eigenvalues of a Chebyshev pseudospectral
//! collocation of the scalar mode DDE provide global seeds, and complex
//! Newton iteration on the exact characteristic function refines them. Every
//! accepted root is certified by its exact residual, independent of the
//! discretization error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{theta_k, RingParams};

/// Residual bound for a root to be accepted.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// Roots closer than this are considered duplicates.
pub const DEDUP_RADIUS: f64 = 1e-8;
/// |d char/d lambda| below this at convergence flags a suspected multiple root.
pub const MULTIPLE_ROOT_DERIV_TOL: f64 = 1e-6;

/// Rectangle in the complex plane delimiting which seeds are refined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

/// Options of the two-stage root scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootScanOptions {
    /// Polynomial degree of the collocation on [-tau_max, 0].
    pub discretization_order: usize,
    pub search_box: SearchBox,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
}

impl RootScanOptions {
    /// Defaults scaled to the coupling strengths: the box spans everything
    /// that can matter for stability, with imaginary extent covering the
    /// first few crossing branches.
    pub fn for_params(params: &RingParams) -> Self {
        let s = params.k_p + params.k_n;
        let w = 4.0 * s + 2.0 * std::f64::consts::PI / params.tau_max().max(0.1);
        Self {
            discretization_order: 24,
            search_box: SearchBox {
                re_min: -10.0 * s,
                re_max: 2.0 * s,
                im_min: -w,
                im_max: w,
            },
            newton_max_iter: 50,
            newton_tol: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.discretization_order < 8 {
            return Err(Error::Config(format!(
                "discretization_order must be >= 8, got {}",
                self.discretization_order
            )));
        }
        let b = &self.search_box;
        if !(b.re_min < b.re_max && b.im_min < b.im_max) {
            return Err(Error::Config("search box is empty".into()));
        }
        if self.newton_max_iter == 0 || !(self.newton_tol > 0.0) {
            return Err(Error::Config("invalid Newton options".into()));
        }
        Ok(())
    }
}

/// Whether a refined root looks simple or suspiciously multiple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Simple,
    SuspectedMultiple,
}

/// An accepted characteristic root of mode `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRoot {
    pub lam: Complex64,
    pub k: usize,
    /// |char_eval(lam)| at acceptance.
    pub residual: f64,
    pub multiplicity: Multiplicity,
}

/// Result of refining one seed: a certified root, or the seed's rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefineOutcome {
    Accepted(ComplexRoot),
    Rejected { seed: Complex64, last: Complex64, residual: f64 },
}

impl RefineOutcome {
    pub fn accepted(self) -> Option<ComplexRoot> {
        match self {
            RefineOutcome::Accepted(r) => Some(r),
            RefineOutcome::Rejected { .. } => None,
        }
    }
}

/// Characteristic function of the mode with phase angle `theta`.
pub fn char_eval(lam: Complex64, theta: f64, params: &RingParams) -> Complex64 {
    let fwd = Complex64::from_polar(1.0, theta);
    let bwd = Complex64::from_polar(1.0, -theta);
    lam + (params.k_p - params.k_n) - params.k_p * (-lam * params.tau1).exp() * fwd
        + params.k_n * (-lam * params.tau2).exp() * bwd
}

/// Derivative of [`char_eval`] with respect to lambda.
pub fn char_deriv(lam: Complex64, theta: f64, params: &RingParams) -> Complex64 {
    let fwd = Complex64::from_polar(1.0, theta);
    let bwd = Complex64::from_polar(1.0, -theta);
    Complex64::new(1.0, 0.0)
        + params.k_p * params.tau1 * (-lam * params.tau1).exp() * fwd
        - params.k_n * params.tau2 * (-lam * params.tau2).exp() * bwd
}

/// Closed-form root of mode `k` when both delays vanish.
pub fn delay_free_root(k: usize, params: &RingParams) -> Complex64 {
    let th = theta_k(k, params.n);
    Complex64::new(-(params.k_p - params.k_n), 0.0)
        + params.k_p * Complex64::from_polar(1.0, th)
        - params.k_n * Complex64::from_polar(1.0, -th)
}

/// Newton iteration on the exact characteristic function of mode `k`.
///
/// A seed is accepted only when the final residual passes
/// [`ROOT_RESIDUAL_TOL`]; non-convergence yields a rejection value rather
/// than an error. A vanishing derivative at convergence marks the root as a
/// suspected multiple.
pub fn newton_refine(
    lam0: Complex64,
    k: usize,
    params: &RingParams,
    opts: &RootScanOptions,
) -> RefineOutcome {
    let th = theta_k(k, params.n);
    let mut lam = lam0;
    let mut deriv_underflow = false;
    let mut converged = false;
    for _ in 0..opts.newton_max_iter {
        let f = char_eval(lam, th, params);
        let df = char_deriv(lam, th, params);
        if df.norm() < 1e-14 {
            deriv_underflow = true;
            break;
        }
        let delta = f / df;
        lam -= delta;
        if delta.norm() < opts.newton_tol {
            converged = true;
            break;
        }
    }
    let residual = char_eval(lam, th, params).norm();
    if residual < ROOT_RESIDUAL_TOL && (converged || deriv_underflow || residual == 0.0) {
        let df = char_deriv(lam, th, params).norm();
        let multiplicity = if df < MULTIPLE_ROOT_DERIV_TOL {
            Multiplicity::SuspectedMultiple
        } else {
            Multiplicity::Simple
        };
        RefineOutcome::Accepted(ComplexRoot { lam, k, residual, multiplicity })
    } else {
        RefineOutcome::Rejected { seed: lam0, last: lam, residual }
    }
}

/// Chebyshev-Lobatto differentiation matrix for nodes x_j = cos(j pi / n),
/// j = 0..n, row-major, length (n+1)^2.
fn chebyshev_diff_matrix(n: usize) -> Vec<f64> {
    let np1 = n + 1;
    let x: Vec<f64> = (0..np1)
        .map(|j| (j as f64 * std::f64::consts::PI / n as f64).cos())
        .collect();
    let mut c = vec![1.0; np1];
    c[0] = 2.0;
    c[n] = 2.0;
    let mut d = vec![0.0; np1 * np1];
    for i in 0..np1 {
        for j in 0..np1 {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[i * np1 + j] = (c[i] / c[j]) * sign / (x[i] - x[j]);
            }
        }
    }
    for i in 0..np1 {
        let sum: f64 = (0..np1).filter(|&j| j != i).map(|j| d[i * np1 + j]).sum();
        d[i * np1 + i] = -sum;
    }
    d
}

/// Barycentric Lagrange evaluation weights l_j(s) on the given nodes
/// (Chebyshev-Lobatto barycentric weights: (-1)^j, halved at the ends).
fn lagrange_row(nodes: &[f64], s: f64) -> Vec<f64> {
    let n = nodes.len() - 1;
    if let Some(j) = nodes.iter().position(|&t| t == s) {
        let mut row = vec![0.0; n + 1];
        row[j] = 1.0;
        return row;
    }
    let mut row = vec![0.0; n + 1];
    let mut denom = 0.0;
    for (j, &t) in nodes.iter().enumerate() {
        let scale = if j == 0 || j == n { 0.5 } else { 1.0 };
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * scale / (s - t);
        row[j] = w;
        denom += w;
    }
    for w in row.iter_mut() {
        *w /= denom;
    }
    row
}

/// Eigenvalue seeds from a pseudospectral collocation of the scalar mode DDE
/// dz/dt = a z(t) + b z(t - tau1) + c z(t - tau2) on [-tau_max, 0].
///
/// The complex collocation matrix is realified (doubling the dimension) so
/// the eigenproblem runs in real arithmetic; that adds the conjugate
/// spectrum, which is harmless for seeding.
fn collocation_seeds(theta: f64, params: &RingParams, order: usize) -> Vec<Complex64> {
    let tau_max = params.tau_max();
    debug_assert!(tau_max > 0.0);
    let mut a = Complex64::new(-(params.k_p - params.k_n), 0.0);
    let b = params.k_p * Complex64::from_polar(1.0, theta);
    let c = -params.k_n * Complex64::from_polar(1.0, -theta);
    // Zero-delay terms are instantaneous and merge into the self coefficient.
    let mut delayed: Vec<(f64, Complex64)> = Vec::new();
    for (tau, coeff) in [(params.tau1, b), (params.tau2, c)] {
        if tau == 0.0 {
            a += coeff;
        } else {
            delayed.push((tau, coeff));
        }
    }

    let n = order;
    let np1 = n + 1;
    let nodes: Vec<f64> = (0..np1)
        .map(|j| ((j as f64 * std::f64::consts::PI / n as f64).cos() - 1.0) * tau_max / 2.0)
        .collect();
    let d_std = chebyshev_diff_matrix(n);
    let scale = 2.0 / tau_max;

    // Complex matrix: differentiation rows everywhere except the row of the
    // node at t = 0, which carries the spliced boundary condition.
    let mut m = vec![Complex64::new(0.0, 0.0); np1 * np1];
    for i in 1..np1 {
        for j in 0..np1 {
            m[i * np1 + j] = Complex64::new(scale * d_std[i * np1 + j], 0.0);
        }
    }
    m[0] = a;
    for &(tau, coeff) in &delayed {
        let row = lagrange_row(&nodes, -tau);
        for (j, w) in row.iter().enumerate() {
            m[j] += coeff * *w;
        }
    }

    // Realified 2(n+1) x 2(n+1) block matrix [[P, -Q], [Q, P]].
    let dim = 2 * np1;
    let mut r = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for i in 0..np1 {
        for j in 0..np1 {
            let z = m[i * np1 + j];
            r[(i, j)] = z.re;
            r[(i, j + np1)] = -z.im;
            r[(i + np1, j)] = z.im;
            r[(i + np1, j + np1)] = z.re;
        }
    }
    r.complex_eigenvalues().iter().copied().collect()
}

fn dedup_and_sort(mut roots: Vec<ComplexRoot>) -> Vec<ComplexRoot> {
    roots.sort_by(|a, b| b.lam.re.partial_cmp(&a.lam.re).unwrap());
    let mut kept: Vec<ComplexRoot> = Vec::new();
    for r in roots {
        if kept.iter().all(|q| (q.lam - r.lam).norm() >= DEDUP_RADIUS) {
            kept.push(r);
        }
    }
    kept
}

/// The `count` rightmost characteristic roots of mode `k`, sorted by
/// decreasing real part. With both delays zero the closed-form root is
/// returned directly.
pub fn rightmost_roots(
    k: usize,
    params: &RingParams,
    opts: &RootScanOptions,
    count: usize,
) -> Result<Vec<ComplexRoot>> {
    params.validate()?;
    opts.validate()?;
    if count == 0 {
        return Err(Error::Config("count must be >= 1".into()));
    }
    let th = theta_k(k, params.n);
    if params.tau1 == 0.0 && params.tau2 == 0.0 {
        let lam = delay_free_root(k, params);
        let residual = char_eval(lam, th, params).norm();
        return Ok(vec![ComplexRoot { lam, k, residual, multiplicity: Multiplicity::Simple }]);
    }

    let mut seeds = collocation_seeds(th, params, opts.discretization_order);
    // Structural seeds: the consensus root and the delay-free root are free
    // and catch the cases the discretization handles worst.
    seeds.push(Complex64::new(0.0, 0.0));
    seeds.push(delay_free_root(k, params));

    let mut accepted = Vec::new();
    let mut best_rejected = f64::INFINITY;
    let mut refined = 0usize;
    for seed in seeds.iter().filter(|z| opts.search_box.contains(**z)) {
        refined += 1;
        match newton_refine(*seed, k, params, opts) {
            RefineOutcome::Accepted(root) => accepted.push(root),
            RefineOutcome::Rejected { residual, .. } => best_rejected = best_rejected.min(residual),
        }
    }
    if accepted.is_empty() {
        return Err(Error::NumericalFailure(format!(
            "no root accepted for mode k={k}: {refined} seeds refined \
             (of {} raw), best rejected residual {best_rejected:e}",
            seeds.len()
        )));
    }
    let mut kept = dedup_and_sort(accepted);
    kept.truncate(count);
    Ok(kept)
}

/// Transverse spectral abscissa: the largest real part over the rightmost
/// roots of all modes k != 0, with the achieving root. Mode 0 moves along
/// the consensus manifold and is excluded.
pub fn spectral_abscissa(params: &RingParams, opts: &RootScanOptions) -> Result<(f64, ComplexRoot)> {
    let mut best: Option<ComplexRoot> = None;
    for k in 1..params.n {
        let r = rightmost_roots(k, params, opts, 1)?[0];
        if best.map_or(true, |b| r.lam.re > b.lam.re) {
            best = Some(r);
        }
    }
    let root = best.expect("n >= 2 guarantees at least one transverse mode");
    Ok((root.lam.re, root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_params(tau1: f64, tau2: f64) -> RingParams {
        RingParams::new(20, 1.0, 0.5, tau1, tau2).unwrap()
    }

    #[test]
    fn consensus_mode_has_zero_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let p = RingParams::new(
                20,
                rng.gen_range(0.05..5.0),
                rng.gen_range(0.05..5.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
            )
            .unwrap();
            let v = char_eval(Complex64::new(0.0, 0.0), 0.0, &p);
            assert!(v.norm() < 1e-14, "residual {:e} for {p:?}", v.norm());
        }
    }

    #[test]
    fn delay_free_closed_form_is_root() {
        let p = default_params(0.0, 0.0);
        for k in 0..20 {
            let lam = delay_free_root(k, &p);
            let v = char_eval(lam, theta_k(k, 20), &p);
            assert!(v.norm() < 1e-14, "k={k}: {:e}", v.norm());
        }
    }

    #[test]
    fn char_eval_matches_independent_expression() {
        // Same formula assembled from real cos/sin pieces.
        let p = default_params(0.5, 0.5);
        let th = theta_k(1, 20);
        let lam = Complex64::new(0.1, 1.0);
        let exp_term = |tau: f64| {
            let e = (-lam.re * tau).exp();
            (e * (lam.im * tau).cos(), -e * (lam.im * tau).sin())
        };
        let (e1r, e1i) = exp_term(p.tau1);
        let (e2r, e2i) = exp_term(p.tau2);
        let (ct, st) = (th.cos(), th.sin());
        // e^{-lam tau1} e^{i th} and e^{-lam tau2} e^{-i th}
        let f1 = (e1r * ct - e1i * st, e1r * st + e1i * ct);
        let f2 = (e2r * ct + e2i * st, -e2r * st + e2i * ct);
        let want = (
            lam.re + (p.k_p - p.k_n) - p.k_p * f1.0 + p.k_n * f2.0,
            lam.im - p.k_p * f1.1 + p.k_n * f2.1,
        );
        let got = char_eval(lam, th, &p);
        assert!((got.re - want.0).abs() < 1e-14);
        assert!((got.im - want.1).abs() < 1e-14);
    }

    #[test]
    fn char_deriv_trivial_cases() {
        let p = default_params(0.0, 0.0);
        let d = char_deriv(Complex64::new(0.3, -2.0), 1.0, &p);
        assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let p = default_params(0.7, 0.2);
        let d = char_deriv(Complex64::new(0.0, 0.0), 0.0, &p);
        let want = 1.0 + p.k_p * p.tau1 - p.k_n * p.tau2;
        assert!((d - Complex64::new(want, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn char_deriv_matches_finite_differences() {
        let p = default_params(1.2, 0.4);
        let th = theta_k(3, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..20 {
            let lam = Complex64::new(rng.gen_range(-2.0..1.0), rng.gen_range(-4.0..4.0));
            let fd = (char_eval(lam + Complex64::new(h, 0.0), th, &p)
                - char_eval(lam - Complex64::new(h, 0.0), th, &p))
                / (2.0 * h);
            let an = char_deriv(lam, th, &p);
            assert!((fd - an).norm() / an.norm().max(1.0) < 1e-6, "lam={lam}");
        }
    }

    #[test]
    fn newton_converges_to_consensus_root() {
        let p = default_params(0.3, 0.3);
        let opts = RootScanOptions::for_params(&p);
        let out = newton_refine(Complex64::new(0.01, 0.0), 0, &p, &opts);
        let root = out.accepted().expect("seed near 0 must converge");
        assert!(root.lam.norm() < 1e-10);
        assert!(root.residual < 1e-12);
    }

    #[test]
    fn newton_accepts_exact_seed_immediately() {
        let p = default_params(0.0, 0.0);
        let opts = RootScanOptions::for_params(&p);
        let lam = delay_free_root(4, &p);
        let out = newton_refine(lam, 4, &p, &opts);
        let root = out.accepted().unwrap();
        assert!((root.lam - lam).norm() < 1e-12);
    }

    #[test]
    fn rightmost_roots_delay_free_closed_form() {
        let p = default_params(0.0, 0.0);
        let opts = RootScanOptions::for_params(&p);
        for k in 0..20 {
            let roots = rightmost_roots(k, &p, &opts, 6).unwrap();
            assert_eq!(roots.len(), 1);
            let th = theta_k(k, 20);
            let want = Complex64::new(
                -(p.k_p - p.k_n) * (1.0 - th.cos()),
                (p.k_p + p.k_n) * th.sin(),
            );
            assert!((roots[0].lam - want).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn consensus_root_present_with_delays() {
        for (t1, t2) in [(0.3, 0.3), (1.0, 0.2), (2.0, 2.0)] {
            let p = default_params(t1, t2);
            let opts = RootScanOptions::for_params(&p);
            let roots = rightmost_roots(0, &p, &opts, 6).unwrap();
            assert!(
                roots.iter().any(|r| r.lam.norm() < 1e-9),
                "lambda=0 missing for delays ({t1},{t2}): {roots:?}"
            );
        }
    }

    #[test]
    fn roots_satisfy_residual_bound() {
        let p = default_params(0.9, 0.4);
        let opts = RootScanOptions::for_params(&p);
        for k in [1, 5, 10, 19] {
            for r in rightmost_roots(k, &p, &opts, 6).unwrap() {
                assert!(r.residual < ROOT_RESIDUAL_TOL);
                let v = char_eval(r.lam, theta_k(k, 20), &p);
                assert!(v.norm() < ROOT_RESIDUAL_TOL);
            }
        }
    }

    #[test]
    fn conjugate_symmetry_across_mode_pairs() {
        let p = default_params(0.8, 0.5);
        let opts = RootScanOptions::for_params(&p);
        for k in [1usize, 3, 7] {
            let a = rightmost_roots(k, &p, &opts, 4).unwrap();
            let b = rightmost_roots(20 - k, &p, &opts, 4).unwrap();
            assert_eq!(a.len(), b.len());
            for (ra, rb) in a.iter().zip(&b) {
                assert!(
                    (ra.lam - rb.lam.conj()).norm() < 1e-8,
                    "k={k}: {} vs conj {}",
                    ra.lam,
                    rb.lam
                );
            }
        }
    }

    #[test]
    fn spectral_abscissa_delay_free() {
        let p = default_params(0.0, 0.0);
        let opts = RootScanOptions::for_params(&p);
        let (alpha, root) = spectral_abscissa(&p, &opts).unwrap();
        let want = -(p.k_p - p.k_n) * (1.0 - theta_k(1, 20).cos());
        assert!((alpha - want).abs() < 1e-12);
        assert!(root.k == 1 || root.k == 19);

        let p = RingParams::new(20, 1.0, 1.0, 0.0, 0.0).unwrap();
        let (alpha, _) = spectral_abscissa(&p, &opts).unwrap();
        assert!(alpha.abs() < 1e-12);
    }

    #[test]
    fn seed_sufficiency_order_24_vs_48() {
        for (t1, t2) in [(0.3, 0.3), (1.5, 0.5), (2.5, 2.5)] {
            let p = default_params(t1, t2);
            let mut opts = RootScanOptions::for_params(&p);
            for k in [1, 5, 10] {
                opts.discretization_order = 24;
                let a = rightmost_roots(k, &p, &opts, 1).unwrap()[0];
                opts.discretization_order = 48;
                let b = rightmost_roots(k, &p, &opts, 1).unwrap()[0];
                assert!(
                    (a.lam - b.lam).norm() < 1e-8,
                    "k={k}, delays ({t1},{t2}): {} vs {}",
                    a.lam,
                    b.lam
                );
            }
        }
    }
}
