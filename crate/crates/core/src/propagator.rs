//! Crank-Nicolson propagation for `H = -½ ∂²/∂x² + V(x)` on the lattice.
//!
//! With the 3-point stencil and unit spacing,
//! `(Hψ)_j = (-ψ_{j-1} + 2ψ_j - ψ_{j+1}) / 2 + V_j ψ_j`, with ψ pinned to zero
//! outside the grid. One step solves
//! `(1 + i·dt·H/2) ψ' = (1 - i·dt·H/2) ψ`, a Cayley transform of a real
//! symmetric matrix and therefore unitary.

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Grid, WaveFunction};
use crate::tridiag::TridiagonalFactors;

pub const DEFAULT_DT: f64 = 0.05;

/// Density above which a wall site counts as contaminated.
pub const BOUNDARY_DENSITY_LIMIT: f64 = 1e-8;

/// Precomputed one-step Crank-Nicolson map for a fixed grid, potential and
/// time step. Immutable once built and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Stepper {
    grid: Grid,
    dt: f64,
    potential: Vec<f64>,
    /// Diagonal of `1 + i·dt·H/2`.
    diag: Vec<Complex64>,
    /// Off-diagonal of `1 + i·dt·H/2`; the explicit side uses its negative.
    offdiag: Complex64,
    factors: TridiagonalFactors,
}

pub fn build_stepper(grid: &Grid, potential: &[f64], dt: f64) -> Result<Stepper> {
    Stepper::new(grid, potential, dt)
}

impl Stepper {
    pub fn new(grid: &Grid, potential: &[f64], dt: f64) -> Result<Self> {
        if potential.len() != grid.n_sites() {
            return Err(Error::LengthMismatch {
                expected: grid.n_sites(),
                actual: potential.len(),
            });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if let Some(site) = potential.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "potential",
                format!("non-finite value at site {site}"),
            ));
        }

        let half = Complex64::new(0.0, 0.5 * dt);
        let diag: Vec<Complex64> = potential.iter().map(|v| 1.0 + half * (1.0 + v)).collect();
        let offdiag = half * -0.5;
        let factors = TridiagonalFactors::new(&diag, offdiag)?;
        Ok(Stepper {
            grid: *grid,
            dt,
            potential: potential.to_vec(),
            diag,
            offdiag,
            factors,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn offdiag(&self) -> Complex64 {
        self.offdiag
    }

    fn check_len(&self, psi: &WaveFunction) -> Result<()> {
        if psi.len() != self.grid.n_sites() {
            return Err(Error::LengthMismatch {
                expected: self.grid.n_sites(),
                actual: psi.len(),
            });
        }
        Ok(())
    }

    /// Advance `psi` one step in place. `support` must contain every nonzero
    /// amplitude; the returned range does the same for the new state.
    ///
    /// The explicit half-step is fused into the forward sweep. Outside the
    /// support the sweeps only propagate exact zeros, and amplitudes that
    /// underflow to zero stay zero, so stopping there gives the same values
    /// as sweeping the whole grid.
    fn step_support(
        &self,
        psi: &mut [Complex64],
        g: &mut [Complex64],
        support: Range<usize>,
    ) -> Range<usize> {
        let n = psi.len();
        if support.is_empty() {
            return support;
        }
        let zero = Complex64::new(0.0, 0.0);
        let hop = -self.offdiag;
        let upper = self.factors.upper();
        let inv = self.factors.inv_pivot();
        let start = support.start.saturating_sub(1);

        let mut prev = zero;
        let mut end = n;
        for j in start..n {
            let left = if j > 0 { psi[j - 1] } else { zero };
            let right = if j + 1 < n { psi[j + 1] } else { zero };
            // conj(diag) == 1 - i·dt·(1+V)/2 because diag = 1 + i·(real)
            let r = self.diag[j].conj() * psi[j] + hop * (left + right);
            let gj = r * inv[j] - upper[j] * prev;
            g[j] = gj;
            prev = gj;
            if j > support.end && gj == zero {
                end = j;
                break;
            }
        }

        let mut next = zero;
        let mut lo = 0;
        for j in (0..end).rev() {
            let gj = if j >= start { g[j] } else { zero };
            let v = gj - upper[j] * next;
            psi[j] = v;
            next = v;
            if j < start && v == zero {
                lo = j + 1;
                break;
            }
        }
        lo..end
    }

    fn support_of(psi: &[Complex64]) -> Range<usize> {
        let zero = Complex64::new(0.0, 0.0);
        match psi.iter().position(|a| *a != zero) {
            Some(lo) => {
                let hi = psi.iter().rposition(|a| *a != zero).unwrap_or(lo);
                lo..hi + 1
            }
            None => 0..0,
        }
    }

    /// Advance in place, using `scratch` (same length) as work space.
    fn step_into(&self, psi: &mut WaveFunction, scratch: &mut [Complex64]) {
        let support = Self::support_of(psi.amplitudes());
        self.step_support(psi.amplitudes_mut(), scratch, support);
    }

    /// One Crank-Nicolson step.
    pub fn step(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.check_len(psi)?;
        if let Some(site) = psi.first_non_finite() {
            return Err(Error::NonFinite { site, step: 0 });
        }
        let mut out = psi.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.step_into(&mut out, &mut scratch);
        if let Some(site) = out.first_non_finite() {
            return Err(Error::NonFinite { site, step: 1 });
        }
        Ok(out)
    }

    /// Apply `n_steps` steps.
    pub fn evolve(&self, psi: WaveFunction, n_steps: usize) -> Result<WaveFunction> {
        self.evolve_observed(psi, n_steps, usize::MAX, |_, _| {})
    }

    /// Apply `n_steps` steps, calling `observer(step_index, &psi)` at step 0,
    /// every `stride` steps, and after the final step.
    ///
    /// Fails with [`Error::BoundaryContamination`] as soon as the density at
    /// either wall exceeds [`BOUNDARY_DENSITY_LIMIT`], and with
    /// [`Error::NonFinite`] on blow-up.
    pub fn evolve_observed<F>(
        &self,
        psi: WaveFunction,
        n_steps: usize,
        stride: usize,
        mut observer: F,
    ) -> Result<WaveFunction>
    where
        F: FnMut(usize, &WaveFunction),
    {
        let stride = stride.max(1);
        let mut run = Propagation::new(self, psi)?;
        observer(0, run.psi());
        while run.steps() < n_steps {
            let chunk = (stride - run.steps() % stride).min(n_steps - run.steps());
            run.advance(chunk)?;
            observer(run.steps(), run.psi());
        }
        Ok(run.into_state())
    }

    /// `(Hψ)_j` with hard walls.
    pub fn apply_hamiltonian(&self, psi: &WaveFunction) -> Vec<Complex64> {
        let a = psi.amplitudes();
        let n = a.len();
        let zero = Complex64::new(0.0, 0.0);
        (0..n)
            .map(|j| {
                let left = if j > 0 { a[j - 1] } else { zero };
                let right = if j + 1 < n { a[j + 1] } else { zero };
                (2.0 * a[j] - left - right) * 0.5 + self.potential[j] * a[j]
            })
            .collect()
    }

    /// Energy expectation `⟨ψ|H|ψ⟩` (not divided by the norm).
    pub fn energy(&self, psi: &WaveFunction) -> f64 {
        let h_psi = self.apply_hamiltonian(psi);
        psi.amplitudes()
            .iter()
            .zip(&h_psi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// A wave function being advanced by a borrowed [`Stepper`]. Keeps its own
/// scratch buffer and step count so several runs can be interleaved.
#[derive(Debug)]
pub struct Propagation<'a> {
    stepper: &'a Stepper,
    psi: WaveFunction,
    scratch: Vec<Complex64>,
    support: Range<usize>,
    steps: usize,
}

impl<'a> Propagation<'a> {
    pub fn new(stepper: &'a Stepper, psi: WaveFunction) -> Result<Self> {
        stepper.check_len(&psi)?;
        if let Some(site) = psi.first_non_finite() {
            return Err(Error::NonFinite { site, step: 0 });
        }
        let scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
        let support = Stepper::support_of(psi.amplitudes());
        Ok(Propagation {
            stepper,
            psi,
            scratch,
            support,
            steps: 0,
        })
    }

    pub fn psi(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn into_state(self) -> WaveFunction {
        self.psi
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.stepper.dt
    }

    /// Take `n` steps, checking the wall sites after each one.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        let last = self.psi.len() - 1;
        for _ in 0..n {
            self.support = self.stepper.step_support(
                self.psi.amplitudes_mut(),
                &mut self.scratch,
                self.support.clone(),
            );
            self.steps += 1;
            // A non-finite value anywhere reaches site 0 through the back
            // substitution, so the wall sites suffice for both checks.
            for site in [0, last] {
                let density = self.psi.amplitudes()[site].norm_sqr();
                if !density.is_finite() {
                    return Err(Error::NonFinite {
                        site,
                        step: self.steps,
                    });
                }
                if density > BOUNDARY_DENSITY_LIMIT {
                    return Err(Error::BoundaryContamination {
                        step: self.steps,
                        site,
                        density,
                    });
                }
            }
        }
        Ok(())
    }
}
