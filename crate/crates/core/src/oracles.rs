//! Closed-form references: free Gaussian spreading, stationary square-barrier
//! transmission and group velocities.
//!
//! The formulas are continuum results (ħ = m = 1). The lattice kinetic energy
//! is `1 - cos k` rather than `k²/2`, so every helper that depends on the
//! dispersion takes a [`Dispersion`] argument and callers say which one they
//! compare against.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::WaveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dispersion {
    /// `E(k) = k²/2`
    Continuum,
    /// `E(k) = 1 - cos k`, the 3-point stencil with unit spacing.
    Lattice,
}

impl Dispersion {
    pub fn energy(self, k: f64) -> f64 {
        match self {
            Dispersion::Continuum => 0.5 * k * k,
            Dispersion::Lattice => 1.0 - k.cos(),
        }
    }

    /// `dE/dk`
    pub fn group_velocity(self, k: f64) -> f64 {
        match self {
            Dispersion::Continuum => k,
            Dispersion::Lattice => k.sin(),
        }
    }
}

/// Continuum group velocity `k0`.
pub fn group_velocity(k0: f64) -> f64 {
    Dispersion::Continuum.group_velocity(k0)
}

/// Lattice group velocity `sin k0`.
pub fn lattice_group_velocity(k0: f64) -> f64 {
    Dispersion::Lattice.group_velocity(k0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeGaussianParams {
    pub x0: f64,
    /// Initial standard deviation of the density.
    pub sigma0: f64,
    pub k0: f64,
}

impl FreeGaussianParams {
    pub fn new(x0: f64, sigma0: f64, k0: f64) -> Result<Self> {
        if !(sigma0 > 0.0) {
            return Err(Error::invalid(
                "sigma",
                format!("must be positive, got {sigma0}"),
            ));
        }
        Ok(FreeGaussianParams { x0, sigma0, k0 })
    }

    pub fn centre(&self, t: f64) -> f64 {
        self.x0 + self.k0 * t
    }

    /// `σ(t)² = σ0² + (t / 2σ0)²`
    pub fn width_squared(&self, t: f64) -> f64 {
        self.sigma0.powi(2) + (t / (2.0 * self.sigma0)).powi(2)
    }

    /// Standard deviation of the packet's wave number, `1 / 2σ0`.
    pub fn momentum_std(&self) -> f64 {
        1.0 / (2.0 * self.sigma0)
    }

    /// Mean position under lattice dynamics. Heisenberg evolution on the
    /// lattice gives `x(t) = x(0) + t·sin p`, so the centre moves with the
    /// average of `sin k` over the Gaussian momentum distribution.
    pub fn lattice_mean_position(&self, t: f64) -> f64 {
        let s = self.momentum_std();
        self.x0 + t * self.k0.sin() * (-0.5 * s * s).exp()
    }

    /// Position variance under lattice dynamics: `σ0² + t² Var(sin k)`.
    /// The unchirped initial state has no position-velocity correlation.
    pub fn lattice_width_squared(&self, t: f64) -> f64 {
        let s = self.momentum_std();
        let mean_sin = self.k0.sin() * (-0.5 * s * s).exp();
        let mean_sin_sq = 0.5 * (1.0 - (2.0 * self.k0).cos() * (-2.0 * s * s).exp());
        self.sigma0.powi(2) + t * t * (mean_sin_sq - mean_sin * mean_sin)
    }
}

/// Density of the exact free continuum solution at position `x` and time `t`.
pub fn free_gaussian_density(params: &FreeGaussianParams, x: f64, t: f64) -> f64 {
    let var = params.width_squared(t);
    let dx = x - params.centre(t);
    (-dx * dx / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Transmission probability of a plane wave with energy `energy` through a
/// square barrier of height `v0` and width `d`.
pub fn plane_wave_transmission(energy: f64, v0: f64, d: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::invalid(
            "energy",
            format!("must be positive, got {energy}"),
        ));
    }
    if !(v0 >= 0.0) || !(d >= 0.0) {
        return Err(Error::invalid(
            "barrier",
            format!("need V0 >= 0 and d >= 0, got V0={v0}, d={d}"),
        ));
    }
    if v0 == 0.0 || d == 0.0 {
        return Ok(1.0);
    }
    // sinh(κd)²/(V0 - E) written as 2d²·(sinh(κd)/(κd))² so the E → V0
    // limit is reached smoothly instead of through 0/0.
    let gap = v0 - energy;
    let x = (2.0 * gap.abs()).sqrt() * d;
    let shape = if x == 0.0 {
        1.0
    } else if gap > 0.0 {
        x.sinh() / x
    } else {
        x.sin() / x
    };
    let t = 1.0 / (1.0 + v0 * v0 * d * d * shape * shape / (2.0 * energy));
    Ok(t)
}

/// Packet-level transmission `∫ |ψ̃0(k)|² T(E(k)) dk` for a Gaussian packet of
/// density width `sigma` centred at `k0` in momentum space. Components with
/// `k <= 0` move away from the barrier and contribute nothing.
pub fn packet_transmission(
    sigma: f64,
    k0: f64,
    v0: f64,
    d: f64,
    dispersion: Dispersion,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("must be positive, got {sigma}"),
        ));
    }
    let s = 1.0 / (2.0 * sigma);
    let lo = (k0 - 12.0 * s).max(0.0);
    let hi = k0 + 12.0 * s;
    let weight = |k: f64| (-(k - k0).powi(2) / (2.0 * s * s)).exp() / ((2.0 * PI).sqrt() * s);
    let integrand = |k: f64| -> Result<f64> {
        let e = dispersion.energy(k);
        if e <= 0.0 {
            return Ok(0.0);
        }
        Ok(weight(k) * plane_wave_transmission(e, v0, d)?)
    };
    simpson(lo, hi, 8000, integrand)
}

fn simpson<F>(lo: f64, hi: f64, intervals: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo)? + f(hi)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Exact free evolution of the lattice Hamiltonian by diagonalizing in
/// Fourier space. Periodic, so only valid while the packet stays clear of the
/// walls; used as an independent check on the time stepper.
pub fn spectral_free_evolution(psi: &WaveFunction, t: f64) -> Vec<Complex64> {
    let n = psi.len();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf = psi.amplitudes().to_vec();
    forward.process(&mut buf);
    for (m, c) in buf.iter_mut().enumerate() {
        let k = 2.0 * PI * m as f64 / n as f64;
        *c *= Complex64::from_polar(1.0 / n as f64, -Dispersion::Lattice.energy(k) * t);
    }
    inverse.process(&mut buf);
    buf
}
