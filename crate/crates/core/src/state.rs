//! Lattice, wave function, Gaussian initial state and square barrier.
//!
//! Units: ħ = m = 1 and the lattice spacing is one site, so energies are in
//! ħ²/(m·site²) and wave numbers in 1/site. A packet with wave number `k0`
//! has nominal kinetic energy `k0²/2`; barrier heights are expressed as a
//! multiple `h` of that energy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice spacing in sites. Everything is measured in sites.
pub const SPACING: f64 = 1.0;

/// Largest admissible amplitude magnitude at either wall for a freshly
/// prepared packet.
pub const BOUNDARY_AMPLITUDE_LIMIT: f64 = 1e-8;

/// Minimum distance, in units of sigma, between packet centre and a wall.
pub const MIN_WALL_DISTANCE_SIGMAS: f64 = 8.0;

/// Uniform 1D lattice with hard walls: the wave function is taken to vanish
/// just outside sites `0` and `n_sites - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n_sites: usize,
}

impl Grid {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::invalid(
                "grid_size",
                format!("need at least 3 sites, got {n_sites}"),
            ));
        }
        Ok(Grid { n_sites })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn spacing(&self) -> f64 {
        SPACING
    }

    /// Position of site `j` in sites.
    pub fn position(&self, j: usize) -> f64 {
        j as f64 * SPACING
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_sites).map(move |j| self.position(j))
    }
}

/// Complex amplitude per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: &Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_sites() {
            return Err(Error::LengthMismatch {
                expected: grid.n_sites(),
                actual: amplitudes.len(),
            });
        }
        Ok(WaveFunction { amplitudes })
    }

    pub fn zeros(grid: &Grid) -> Self {
        WaveFunction {
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.n_sites()],
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Total probability `Σ |ψ_j|² · spacing`.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * SPACING
    }

    /// Probability density `|ψ_j|²` per site.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        WaveFunction {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Complex conjugate, i.e. the time-reversed state.
    pub fn conjugate(&self) -> Self {
        WaveFunction {
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
        }
    }

    /// SHA-256 of the little-endian bytes of every amplitude. Used to check
    /// that paired runs start from the same array.
    pub fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for a in &self.amplitudes {
            hasher.update(a.re.to_le_bytes());
            hasher.update(a.im.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub(crate) fn first_non_finite(&self) -> Option<usize> {
        self.amplitudes
            .iter()
            .position(|a| !(a.re.is_finite() && a.im.is_finite()))
    }
}

/// Free function form of [`WaveFunction::norm`].
pub fn norm(psi: &WaveFunction) -> f64 {
    psi.norm()
}

/// Free function form of [`WaveFunction::density`].
pub fn density(psi: &WaveFunction) -> Vec<f64> {
    psi.density()
}

/// Normalized Gaussian packet `ψ_j ∝ exp(-(x_j - x0)² / 4σ²) · exp(i k0 x_j)`.
///
/// `sigma` is the standard deviation of the probability density `|ψ|²`, not
/// of `ψ` itself (those differ by √2). Normalization uses the discrete sum
/// over the lattice, so `norm()` is 1 to rounding. A negative `k0` gives a
/// left-moving packet with the same density.
pub fn gaussian_packet(grid: &Grid, x0: f64, sigma: f64, k0: f64) -> Result<WaveFunction> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(
            "sigma",
            format!("must be positive, got {sigma}"),
        ));
    }
    if !k0.is_finite() {
        return Err(Error::invalid("k0", format!("must be finite, got {k0}")));
    }
    let right_wall = grid.position(grid.n_sites() - 1);
    let margin = MIN_WALL_DISTANCE_SIGMAS * sigma;
    if !x0.is_finite() || x0 - margin < 0.0 || x0 + margin > right_wall {
        return Err(Error::invalid(
            "x0",
            format!("{x0} is closer than {MIN_WALL_DISTANCE_SIGMAS}·sigma = {margin} to a wall of [0, {right_wall}]"),
        ));
    }

    let inv_four_var = 1.0 / (4.0 * sigma * sigma);
    let mut amplitudes: Vec<Complex64> = grid
        .positions()
        .map(|x| {
            let envelope = (-(x - x0).powi(2) * inv_four_var).exp();
            Complex64::from_polar(envelope, k0 * x)
        })
        .collect();
    let total: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * SPACING;
    let scale = 1.0 / total.sqrt();
    for a in &mut amplitudes {
        *a *= scale;
    }

    let edge = amplitudes[0]
        .norm()
        .max(amplitudes[amplitudes.len() - 1].norm());
    if edge >= BOUNDARY_AMPLITUDE_LIMIT {
        return Err(Error::invalid(
            "x0",
            format!("packet amplitude {edge:e} at a wall exceeds {BOUNDARY_AMPLITUDE_LIMIT:e}"),
        ));
    }
    Ok(WaveFunction { amplitudes })
}

/// Square barrier of `width` sites starting at `start_site`. Its height is
/// `height_ratio` times the incident kinetic energy `k0²/2`, so the barrier
/// only becomes an energy once bound to a wave number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareBarrier {
    pub start_site: usize,
    pub width: usize,
    pub height_ratio: f64,
}

impl SquareBarrier {
    pub fn new(start_site: usize, width: usize, height_ratio: f64) -> Result<Self> {
        if !(height_ratio >= 0.0) || !height_ratio.is_finite() {
            return Err(Error::invalid(
                "height_ratio",
                format!("must be finite and non-negative, got {height_ratio}"),
            ));
        }
        Ok(SquareBarrier {
            start_site,
            width,
            height_ratio,
        })
    }

    /// Barrier energy `V0 = h · k0² / 2`.
    pub fn height(&self, k0: f64) -> f64 {
        self.height_ratio * (k0 * k0 / 2.0)
    }

    /// One past the last barrier site.
    pub fn end_site(&self) -> usize {
        self.start_site + self.width
    }

    /// Sites strictly beyond the last barrier site.
    pub fn transmitted_region(&self, grid: &Grid) -> std::ops::Range<usize> {
        self.end_site().min(grid.n_sites())..grid.n_sites()
    }

    /// Sites strictly before the first barrier site.
    pub fn reflected_region(&self) -> std::ops::Range<usize> {
        0..self.start_site
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.start_site + self.width >= grid.n_sites() - 1 {
            return Err(Error::invalid(
                "barrier",
                format!(
                    "sites {}..{} do not fit inside a grid of {} sites",
                    self.start_site,
                    self.end_site(),
                    grid.n_sites()
                ),
            ));
        }
        Ok(())
    }
}

/// Potential energy per site: `h·k0²/2` on `start..start+width`, zero elsewhere.
pub fn sample_potential(barrier: &SquareBarrier, grid: &Grid, k0: f64) -> Result<Vec<f64>> {
    barrier.validate(grid)?;
    let mut potential = vec![0.0; grid.n_sites()];
    let v0 = barrier.height(k0);
    for v in &mut potential[barrier.start_site..barrier.end_site()] {
        *v = v0;
    }
    Ok(potential)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_fewer_than_three_sites() {
        assert!(Grid::new(2).is_err());
        assert!(Grid::new(3).is_ok());
    }

    #[test]
    fn default_packet_is_normalized() {
        let grid = Grid::new(12288).unwrap();
        let psi = gaussian_packet(&grid, 5700.0, 10.0, 0.5).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_momentum_density_is_symmetric() {
        let grid = Grid::new(1024).unwrap();
        let psi = gaussian_packet(&grid, 500.0, 10.0, 0.0).unwrap();
        let dens = psi.density();
        for delta in 1..100 {
            assert!((dens[500 + delta] - dens[500 - delta]).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_is_density_standard_deviation() {
        let grid = Grid::new(4096).unwrap();
        let psi = gaussian_packet(&grid, 2000.0, 10.0, 0.5).unwrap();
        let dens = psi.density();
        let mean: f64 = dens.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        let second: f64 = dens
            .iter()
            .enumerate()
            .map(|(j, p)| (j as f64).powi(2) * p)
            .sum();
        let std = (second - mean * mean).sqrt();
        assert!((std - 10.0).abs() / 10.0 < 1e-3, "std = {std}");
    }

    #[test]
    fn packet_rejects_bad_inputs() {
        let grid = Grid::new(1000).unwrap();
        assert!(matches!(
            gaussian_packet(&grid, 500.0, 0.0, 0.5),
            Err(Error::InvalidParameter { field: "sigma", .. })
        ));
        assert!(matches!(
            gaussian_packet(&grid, 500.0, -1.0, 0.5),
            Err(Error::InvalidParameter { field: "sigma", .. })
        ));
        assert!(matches!(
            gaussian_packet(&grid, 50.0, 10.0, 0.5),
            Err(Error::InvalidParameter { field: "x0", .. })
        ));
        assert!(matches!(
            gaussian_packet(&grid, 950.0, 10.0, 0.5),
            Err(Error::InvalidParameter { field: "x0", .. })
        ));
        assert!(gaussian_packet(&grid, 500.0, 10.0, f64::NAN).is_err());
    }

    #[test]
    fn density_of_single_site() {
        let grid = Grid::new(5).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 5];
        amps[2] = Complex64::new(0.6, 0.8);
        let psi = WaveFunction::new(&grid, amps).unwrap();
        assert!((psi.density()[2] - 1.0).abs() < 1e-15);
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_edge_cases() {
        let grid = Grid::new(64).unwrap();
        assert_eq!(WaveFunction::zeros(&grid).norm(), 0.0);
        let psi = gaussian_packet(&Grid::new(512).unwrap(), 256.0, 5.0, 0.3).unwrap();
        assert_eq!(psi.scaled(2.0).norm(), 4.0 * psi.norm());
        let sum: f64 = psi.density().iter().sum();
        assert!((sum - psi.norm()).abs() < 1e-12);
    }

    #[test]
    fn packet_peaks_at_centre() {
        let grid = Grid::new(2048).unwrap();
        let psi = gaussian_packet(&grid, 1000.0, 10.0, 0.5).unwrap();
        let dens = psi.density();
        let argmax = (0..dens.len())
            .max_by(|&a, &b| dens[a].total_cmp(&dens[b]))
            .unwrap();
        assert_eq!(argmax, 1000);
    }

    #[test]
    fn wave_function_length_is_checked() {
        let grid = Grid::new(8).unwrap();
        assert!(matches!(
            WaveFunction::new(&grid, vec![Complex64::new(0.0, 0.0); 7]),
            Err(Error::LengthMismatch {
                expected: 8,
                actual: 7
            })
        ));
    }

    #[test]
    fn potential_matches_barrier() {
        let grid = Grid::new(12288).unwrap();
        let barrier = SquareBarrier::new(6000, 20, 2.0).unwrap();
        let v = sample_potential(&barrier, &grid, 0.5).unwrap();
        for (j, &vj) in v.iter().enumerate() {
            if (6000..6020).contains(&j) {
                assert_eq!(vj, 0.25);
            } else {
                assert_eq!(vj, 0.0);
            }
        }
    }

    #[test]
    fn degenerate_barriers_give_zero_potential() {
        let grid = Grid::new(12288).unwrap();
        for barrier in [
            SquareBarrier::new(6000, 0, 5.0).unwrap(),
            SquareBarrier::new(6000, 20, 0.0).unwrap(),
        ] {
            let v = sample_potential(&barrier, &grid, 0.5).unwrap();
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn barrier_must_fit() {
        let grid = Grid::new(100).unwrap();
        assert!(sample_potential(&SquareBarrier::new(90, 9, 1.0).unwrap(), &grid, 0.5).is_err());
        assert!(sample_potential(&SquareBarrier::new(90, 8, 1.0).unwrap(), &grid, 0.5).is_ok());
        assert!(SquareBarrier::new(10, 5, -1.0).is_err());
    }

    #[test]
    fn regions_split_around_barrier() {
        let grid = Grid::new(100).unwrap();
        let barrier = SquareBarrier::new(40, 10, 1.0).unwrap();
        assert_eq!(barrier.reflected_region(), 0..40);
        assert_eq!(barrier.transmitted_region(&grid), 50..100);
    }
}
