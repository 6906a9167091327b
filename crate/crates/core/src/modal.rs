//! Transform between agent-space states and circulant Fourier modes.
//!
//! The forward transform carries the 1/n factor, so `z_0` is the network
//! mean and the transverse energy `sum_{k!=0} |z_k|^2` equals the consensus
//! error exactly (Parseval). A direct O(n^2) summation is used: at desk
//! scale an FFT buys nothing and adds radix constraints.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{theta_k, StateVector};

/// Tolerance on the imaginary residue of an inverse transform that is
/// expected to produce a real vector.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Complex mode amplitudes z_0 .. z_{n-1} of a state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    amps: Vec<Complex64>,
}

impl ModeSpectrum {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, k: usize) -> Complex64 {
        self.amps[k]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Energy in the transverse modes: sum over k != 0 of |z_k|^2.
    pub fn transverse_energy(&self) -> f64 {
        self.amps.iter().skip(1).map(|z| z.norm_sqr()).sum()
    }
}

/// Forward transform: z_k = (1/n) sum_j x_j e^{-i theta_k j}.
pub fn to_modes(x: &[f64]) -> ModeSpectrum {
    let n = x.len();
    let inv_n = 1.0 / n as f64;
    let amps = (0..n)
        .map(|k| {
            let th = theta_k(k, n);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                acc += xj * Complex64::from_polar(1.0, -th * j as f64);
            }
            acc * inv_n
        })
        .collect();
    ModeSpectrum { amps }
}

/// Inverse transform: x_j = sum_k z_k e^{+i theta_k j}.
///
/// The spectrum is expected to be conjugate symmetric (the transform of a
/// real vector); an imaginary residue above [`IMAG_RESIDUE_TOL`] is a
/// numerical-consistency error.
pub fn from_modes(z: &ModeSpectrum) -> Result<StateVector> {
    let n = z.len();
    let mut out = Vec::with_capacity(n);
    let mut worst_im = 0.0f64;
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &zk) in z.amps.iter().enumerate() {
            acc += zk * Complex64::from_polar(1.0, theta_k(k, n) * j as f64);
        }
        worst_im = worst_im.max(acc.im.abs());
        out.push(acc.re);
    }
    if worst_im > IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue { residue: worst_im, tol: IMAG_RESIDUE_TOL });
    }
    Ok(out)
}

/// Whether mode `k` enters the transverse stability condition.
/// Mode 0 moves along the consensus manifold and is excluded.
pub fn mode_stability_relevant(k: usize) -> bool {
    k != 0
}
