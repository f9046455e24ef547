//! Quantities read off a wave function: peak position, regional norms, the
//! transmitted-peak shift against a free reference, the envelope excess and
//! the momentum spectrum.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Grid, SquareBarrier, WaveFunction, SPACING};

/// Transmitted probability below which a run counts as opaque.
pub const MIN_TRANSMITTED_NORM: f64 = 1e-12;

/// Smallest region accepted by [`momentum_distribution`].
pub const MIN_SPECTRUM_REGION: usize = 16;

/// Position of the density maximum within `region`, refined below the grid
/// spacing by a parabola through the peak and its two neighbours.
///
/// Ties go to the smallest index. A peak on the first or last site of the
/// region is returned unrefined.
pub fn max_position(dens: &[f64], region: Range<usize>) -> Result<f64> {
    if region.start >= region.end || region.end > dens.len() {
        return Err(Error::invalid(
            "region",
            format!(
                "{}..{} is empty or outside {} sites",
                region.start,
                region.end,
                dens.len()
            ),
        ));
    }
    let mut best = region.start;
    for j in region.clone() {
        if dens[j] > dens[best] {
            best = j;
        }
    }
    if !(dens[best] > 0.0) {
        return Err(Error::EmptyRegion {
            start: region.start,
            end: region.end,
        });
    }
    if best == region.start || best + 1 == region.end {
        return Ok(best as f64 * SPACING);
    }
    let (a, b, c) = (dens[best - 1], dens[best], dens[best + 1]);
    let curvature = a - 2.0 * b + c;
    let offset = if curvature < 0.0 {
        0.5 * (a - c) / curvature
    } else {
        0.0
    };
    Ok((best as f64 + offset) * SPACING)
}

/// `Σ_{j ∈ region} |ψ_j|² · spacing`. The region is clipped to the grid.
pub fn region_norm(psi: &WaveFunction, region: Range<usize>) -> f64 {
    let end = region.end.min(psi.len());
    let start = region.start.min(end);
    psi.amplitudes()[start..end]
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        * SPACING
}

/// Transmitted, in-barrier and reflected probability at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySplit {
    pub reflected: f64,
    pub barrier: f64,
    pub transmitted: f64,
}

impl ProbabilitySplit {
    pub fn of(psi: &WaveFunction, barrier: &SquareBarrier, grid: &Grid) -> Self {
        ProbabilitySplit {
            reflected: region_norm(psi, barrier.reflected_region()),
            barrier: region_norm(psi, barrier.start_site..barrier.end_site()),
            transmitted: region_norm(psi, barrier.transmitted_region(grid)),
        }
    }

    pub fn total(&self) -> f64 {
        self.reflected + self.barrier + self.transmitted
    }
}

/// Peak of the transmitted part of `tunneled` minus the peak of the whole
/// `free` packet. Positive means the transmitted maximum leads.
pub fn shift_vs_free(
    tunneled: &WaveFunction,
    free: &WaveFunction,
    barrier: &SquareBarrier,
    grid: &Grid,
) -> Result<f64> {
    let region = barrier.transmitted_region(grid);
    let transmitted = region_norm(tunneled, region.clone());
    if !(transmitted > MIN_TRANSMITTED_NORM) {
        return Err(Error::EmptyRegion {
            start: region.start,
            end: region.end,
        });
    }
    let peak_t = max_position(&tunneled.density(), region)?;
    let peak_f = max_position(&free.density(), 0..free.len())?;
    Ok(peak_t - peak_f)
}

/// Largest pointwise excess `dens_tunneled - dens_free` beyond the barrier.
/// Non-positive values mean the transmitted part stays under the free
/// packet's envelope. Returns `-inf` if nothing lies beyond the barrier.
pub fn envelope_check(dens_tunneled: &[f64], dens_free: &[f64], barrier: &SquareBarrier) -> f64 {
    let start = barrier.end_site();
    dens_tunneled
        .iter()
        .zip(dens_free)
        .skip(start)
        .map(|(t, f)| t - f)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral weight `|ψ̃(k)|²` on the lattice momentum grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumSpectrum {
    /// Wave numbers in (-π, π], ascending.
    pub k: Vec<f64>,
    /// Weight per wave number, normalized so the total equals the region norm.
    pub weight: Vec<f64>,
}

impl MomentumSpectrum {
    /// Weighted mean of `k` over `k > 0`.
    pub fn mean_positive_k(&self) -> f64 {
        let (num, den) = self
            .k
            .iter()
            .zip(&self.weight)
            .filter(|(k, _)| **k > 0.0)
            .fold((0.0, 0.0), |(n, d), (k, w)| (n + k * w, d + w));
        num / den
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }
}

/// Discrete Fourier transform of `psi` restricted to `region` (zero
/// elsewhere) over the full grid length `N`, on `k_m = 2πm/N` folded into
/// (-π, π].
pub fn momentum_distribution(psi: &WaveFunction, region: Range<usize>) -> Result<MomentumSpectrum> {
    let n = psi.len();
    if region.end > n || region.end < region.start + MIN_SPECTRUM_REGION {
        return Err(Error::invalid(
            "region",
            format!(
                "{}..{} must lie inside {n} sites and span at least {MIN_SPECTRUM_REGION}",
                region.start, region.end
            ),
        ));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[region.clone()].copy_from_slice(&psi.amplitudes()[region]);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    // m in (-N/2, N/2] gives k in (-π, π]
    let lowest = -(((n - 1) / 2) as i64);
    let highest = (n / 2) as i64;
    let scale = SPACING / n as f64;
    let (k, weight) = (lowest..=highest)
        .map(|m| {
            let idx = m.rem_euclid(n as i64) as usize;
            (2.0 * PI * m as f64 / n as f64, buf[idx].norm_sqr() * scale)
        })
        .unzip();
    Ok(MomentumSpectrum { k, weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::gaussian_packet;

    #[test]
    fn isolated_peak() {
        let mut d = vec![0.0; 1000];
        d[300] = 1.0;
        assert_eq!(max_position(&d, 0..1000).unwrap(), 300.0);
    }

    #[test]
    fn symmetric_parabola() {
        let mut d = vec![0.0; 200];
        d[99] = 1.0;
        d[100] = 2.0;
        d[101] = 1.0;
        assert_eq!(max_position(&d, 0..200).unwrap(), 100.0);
    }

    #[test]
    fn gaussian_peak_off_grid() {
        let centre = 100.3;
        let d: Vec<f64> = (0..200)
            .map(|j| (-(j as f64 - centre).powi(2) / (2.0 * 10.0f64.powi(2))).exp())
            .collect();
        let p = max_position(&d, 0..200).unwrap();
        assert!((p - centre).abs() < 0.05, "{p}");
    }

    #[test]
    fn ties_and_edges() {
        let d = vec![0.0, 1.0, 0.0, 1.0, 0.0];
        assert_eq!(max_position(&d, 0..5).unwrap(), 1.0);
        let ramp: Vec<f64> = (0..10).map(|j| j as f64).collect();
        assert_eq!(max_position(&ramp, 2..6).unwrap(), 5.0);
        assert_eq!(max_position(&ramp, 2..10).unwrap(), 9.0);
    }

    #[test]
    fn empty_regions_are_errors() {
        let d = vec![0.0; 10];
        assert!(matches!(
            max_position(&d, 0..10),
            Err(Error::EmptyRegion { .. })
        ));
        assert!(max_position(&d, 4..4).is_err());
        assert!(max_position(&d, 5..11).is_err());
    }

    #[test]
    fn region_norms() {
        let grid = Grid::new(2000).unwrap();
        let psi = gaussian_packet(&grid, 800.0, 10.0, 0.5).unwrap();
        assert!((region_norm(&psi, 0..2000) - psi.norm()).abs() < 1e-12);
        assert_eq!(region_norm(&psi, 700..700), 0.0);
        assert!(region_norm(&psi, 881..2000) < 1e-8);
    }

    #[test]
    fn envelope_trivial_cases() {
        let barrier = SquareBarrier::new(10, 5, 1.0).unwrap();
        let free: Vec<f64> = (0..40).map(|j| 1.0 / (1.0 + j as f64)).collect();
        assert_eq!(envelope_check(&free, &free, &barrier), 0.0);
        let zero = vec![0.0; 40];
        assert!(envelope_check(&zero, &free, &barrier) < 0.0);
    }

    #[test]
    fn spectrum_of_real_packet_is_symmetric() {
        let grid = Grid::new(1024).unwrap();
        let psi = gaussian_packet(&grid, 512.0, 10.0, 0.0).unwrap();
        let spec = momentum_distribution(&psi, 0..1024).unwrap();
        assert_eq!(spec.k.len(), 1024);
        assert!(spec.k.windows(2).all(|w| w[0] < w[1]));
        assert!((spec.k[1023] - PI).abs() < 1e-15);
        // k_m and -k_m sit symmetrically around index 511
        for m in 1..512 {
            assert!((spec.weight[511 + m] - spec.weight[511 - m]).abs() < 1e-12);
        }
        assert!((spec.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_mean_tracks_k0() {
        let grid = Grid::new(4096).unwrap();
        let psi = gaussian_packet(&grid, 2048.0, 10.0, 0.5).unwrap();
        let spec = momentum_distribution(&psi, 0..4096).unwrap();
        assert!((spec.mean_positive_k() - 0.5).abs() / 0.5 < 0.02);
    }

    #[test]
    fn spectrum_region_too_small() {
        let grid = Grid::new(100).unwrap();
        let psi = WaveFunction::zeros(&grid);
        assert!(momentum_distribution(&psi, 10..25).is_err());
        assert!(momentum_distribution(&psi, 10..26).is_ok());
    }
}
