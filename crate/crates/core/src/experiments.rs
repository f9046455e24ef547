//! Paired tunneling/free runs and the three parameter sweeps built on them:
//! a barrier-width snapshot, a barrier-height sweep and a width-by-sigma scan.
//!
//! Every sweep point evolves the same initial packet twice, once with the
//! barrier and once without, and compares them at a common snapshot time.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{
    envelope_check, max_position, momentum_distribution, ProbabilitySplit, MIN_TRANSMITTED_NORM,
};
use crate::oracles::{lattice_group_velocity, FreeGaussianParams};
use crate::propagator::{Propagation, Stepper, DEFAULT_DT};
use crate::state::{gaussian_packet, sample_potential, Grid, SquareBarrier, WaveFunction};

/// Relative change of the transmitted norm per 100 steps below which the
/// transmitted part counts as settled.
pub const SETTLED_RELATIVE_CHANGE: f64 = 1e-6;

/// How far, in initial sigmas, the free packet centre must be past the last
/// barrier site at an automatically chosen snapshot.
pub const AUTO_SNAPSHOT_CLEARANCE_SIGMAS: f64 = 5.0;

/// Distance, in current sigmas, the free packet must keep from the right wall.
pub const WALL_CLEARANCE_SIGMAS: f64 = 8.0;

/// Distance, in initial sigmas, between the packet centre and the barrier
/// at preparation.
pub const BARRIER_CLEARANCE_SIGMAS: f64 = 8.0;

/// Incident wave number used by the figure sweeps. At 0.5 the incident
/// energy sits far below h = 2..4 barriers and the wide-barrier runs are
/// opaque; at 0.2 the momentum tail above the barrier top carries the
/// transmitted packet, which is the regime where the shift grows with
/// height and peaks at an intermediate width.
pub const FIGURE_K0: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub grid_size: usize,
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub dt: f64,
    pub barrier_start: usize,
    pub d_list: Vec<usize>,
    pub h_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    /// Snapshot step count; `None` picks one from the clearance rule.
    pub steps: Option<usize>,
    pub stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_size: 12288,
            x0: 5700.0,
            sigma: 10.0,
            k0: 0.5,
            dt: DEFAULT_DT,
            barrier_start: 6000,
            d_list: (0..=30).step_by(2).collect(),
            h_list: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            sigma_list: vec![5.0, 10.0, 15.0, 20.0],
            steps: None,
            stride: 100,
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub sigma: f64,
    pub d: usize,
    pub h: f64,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_size)
    }

    fn check_basic(&self) -> Result<()> {
        let grid = self.grid()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.k0 >= 0.0) || !self.k0.is_finite() {
            return Err(Error::invalid(
                "k0",
                format!("must be non-negative, got {}", self.k0),
            ));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        for &sigma in std::iter::once(&self.sigma).chain(&self.sigma_list) {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::invalid(
                    "sigma",
                    format!("must be positive, got {sigma}"),
                ));
            }
            gaussian_packet(&grid, self.x0, sigma, self.k0)?;
        }
        for &h in &self.h_list {
            SquareBarrier::new(self.barrier_start, 0, h)?;
        }
        if self.x0 >= self.barrier_start as f64 {
            return Err(Error::invalid(
                "x0",
                format!(
                    "packet at {} must start left of the barrier at {}",
                    self.x0, self.barrier_start
                ),
            ));
        }
        Ok(())
    }

    /// Check every listed combination: packets fit, barriers fit, and the
    /// free packet stays clear of the right wall up to the snapshot.
    pub fn validate(&self, points: &[RunPoint]) -> Result<()> {
        self.check_basic()?;
        let grid = self.grid()?;
        for p in points {
            SquareBarrier::new(self.barrier_start, p.d, p.h)?.validate(&grid)?;
            let margin = BARRIER_CLEARANCE_SIGMAS * p.sigma;
            if self.x0 + margin > self.barrier_start as f64 {
                return Err(Error::invalid(
                    "x0",
                    format!(
                        "sigma={} packet at {} must start at least {margin} sites left of the barrier at {}",
                        p.sigma, self.x0, self.barrier_start
                    ),
                ));
            }
        }
        let n_steps = self.snapshot_steps(points)?;
        let t = n_steps as f64 * self.dt;
        let right_wall = (self.grid_size - 1) as f64;
        for p in points {
            let free = FreeGaussianParams::new(self.x0, p.sigma, self.k0)?;
            let reach = free.lattice_mean_position(t)
                + WALL_CLEARANCE_SIGMAS * free.lattice_width_squared(t).sqrt();
            if reach > right_wall {
                return Err(Error::invalid(
                    "steps",
                    format!(
                        "after {n_steps} steps the sigma={} packet reaches {reach:.0}, within {WALL_CLEARANCE_SIGMAS} widths of the wall at {right_wall}",
                        p.sigma
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Step count of the common snapshot. Explicit `steps` wins; otherwise
    /// the free packet centre, moving at the lattice group velocity, must
    /// be [`AUTO_SNAPSHOT_CLEARANCE_SIGMAS`] initial widths past the widest
    /// barrier for the widest packet.
    pub fn snapshot_steps(&self, points: &[RunPoint]) -> Result<usize> {
        if let Some(n) = self.steps {
            return Ok(n);
        }
        let velocity = lattice_group_velocity(self.k0);
        if !(velocity > 0.0) {
            return Err(Error::invalid(
                "k0",
                "automatic snapshot needs k0 > 0; pass explicit steps",
            ));
        }
        let max_d = points.iter().map(|p| p.d).max().unwrap_or(0);
        let max_sigma = points.iter().map(|p| p.sigma).fold(self.sigma, f64::max);
        let target =
            (self.barrier_start + max_d) as f64 + AUTO_SNAPSHOT_CLEARANCE_SIGMAS * max_sigma;
        let time = (target - self.x0) / velocity;
        Ok((time / self.dt).ceil() as usize)
    }

    pub fn single_point(&self) -> RunPoint {
        RunPoint {
            sigma: self.sigma,
            d: self.d_list.first().copied().unwrap_or(0),
            h: self.h_list.first().copied().unwrap_or(0.0),
        }
    }

    pub fn snapshot_points(&self) -> Vec<RunPoint> {
        let h = self.h_list.first().copied().unwrap_or(0.0);
        self.d_list
            .iter()
            .map(|&d| RunPoint {
                sigma: self.sigma,
                d,
                h,
            })
            .collect()
    }

    pub fn height_points(&self) -> Vec<RunPoint> {
        let d = self.d_list.first().copied().unwrap_or(0);
        self.h_list
            .iter()
            .map(|&h| RunPoint {
                sigma: self.sigma,
                d,
                h,
            })
            .collect()
    }

    pub fn width_scan_points(&self) -> Vec<RunPoint> {
        let h = self.h_list.first().copied().unwrap_or(0.0);
        self.sigma_list
            .iter()
            .flat_map(|&sigma| self.d_list.iter().map(move |&d| RunPoint { sigma, d, h }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Final transmitted norm below [`MIN_TRANSMITTED_NORM`]; shift undefined.
    NoTransmission,
    /// Transmitted norm still changing at the snapshot.
    Unsettled,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::NoTransmission => "no_transmission",
            Flag::Unsettled => "unsettled",
        })
    }
}

/// Observables of one paired run, sampled every `stride` steps.
///
/// Per-sample values that need a transmitted packet (`max_transmitted`,
/// `shift`) are NaN while the transmitted norm is below
/// [`MIN_TRANSMITTED_NORM`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub max_free: Vec<f64>,
    pub max_transmitted: Vec<f64>,
    pub shift: Vec<f64>,
    pub transmitted_norm: Vec<f64>,
    pub reflected_norm: Vec<f64>,
    pub barrier_norm: Vec<f64>,
    /// Total norm of the tunneling run.
    pub total_norm: Vec<f64>,
    /// Transmitted norm changed by less than [`SETTLED_RELATIVE_CHANGE`]
    /// per 100 steps since the previous sample.
    pub settled: Vec<bool>,
    /// Largest tunneled-minus-free density beyond the barrier over all samples.
    pub envelope_violation: f64,
    /// Checksum of the initial amplitudes shared by both runs.
    pub initial_checksum: String,
}

impl RunRecord {
    fn with_capacity(n: usize, initial_checksum: String) -> Self {
        RunRecord {
            steps: Vec::with_capacity(n),
            times: Vec::with_capacity(n),
            max_free: Vec::with_capacity(n),
            max_transmitted: Vec::with_capacity(n),
            shift: Vec::with_capacity(n),
            transmitted_norm: Vec::with_capacity(n),
            reflected_norm: Vec::with_capacity(n),
            barrier_norm: Vec::with_capacity(n),
            total_norm: Vec::with_capacity(n),
            settled: Vec::with_capacity(n),
            envelope_violation: f64::NEG_INFINITY,
            initial_checksum,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Shifts at settled samples.
    pub fn settled_shifts(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.shift)
            .zip(&self.settled)
            .filter(|(_, s)| **s)
            .map(|((t, shift), _)| (*t, *shift))
    }
}

/// Result of [`run_pair`]: the sampled record plus the final densities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub point: RunPoint,
    pub record: RunRecord,
    pub free_density: Vec<f64>,
    pub tunneled_density: Vec<f64>,
    pub summary: SummaryRow,
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sigma: f64,
    pub d: usize,
    pub h: f64,
    pub snapshot_time: f64,
    pub max_free: f64,
    pub max_transmitted: f64,
    pub shift: f64,
    pub transmitted_norm: f64,
    pub flags: Vec<Flag>,
    /// Largest density in the transmitted region at the snapshot.
    pub peak_amplitude: f64,
    /// Mean positive wave number of the transmitted part at the snapshot.
    pub mean_transmitted_k: f64,
    /// Envelope excess at the snapshot.
    pub envelope_excess: f64,
}

impl SummaryRow {
    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Free reference evolution for one sigma, kept at every sample so several
/// barrier runs can be compared against it.
#[derive(Debug, Clone)]
pub struct FreeTrack {
    pub sigma: f64,
    initial: WaveFunction,
    steps: Vec<usize>,
    densities: Vec<Vec<f64>>,
    max_positions: Vec<f64>,
}

impl FreeTrack {
    pub fn compute(config: &ExperimentConfig, sigma: f64, n_steps: usize) -> Result<Self> {
        let grid = config.grid()?;
        let initial = gaussian_packet(&grid, config.x0, sigma, config.k0)?;
        let stepper = Stepper::new(&grid, &vec![0.0; grid.n_sites()], config.dt)?;
        let mut steps = Vec::new();
        let mut densities = Vec::new();
        let mut max_positions = Vec::new();
        let mut peak_error = None;
        stepper.evolve_observed(initial.clone(), n_steps, config.stride, |step, psi| {
            let dens = psi.density();
            match max_position(&dens, 0..dens.len()) {
                Ok(p) => max_positions.push(p),
                Err(e) => {
                    peak_error.get_or_insert(e);
                    max_positions.push(f64::NAN);
                }
            }
            steps.push(step);
            densities.push(dens);
        })?;
        if let Some(e) = peak_error {
            return Err(e);
        }
        Ok(FreeTrack {
            sigma,
            initial,
            steps,
            densities,
            max_positions,
        })
    }

    pub fn initial(&self) -> &WaveFunction {
        &self.initial
    }

    pub fn final_density(&self) -> &[f64] {
        self.densities
            .last()
            .expect("track has at least the initial sample")
    }

    pub fn n_steps(&self) -> usize {
        *self
            .steps
            .last()
            .expect("track has at least the initial sample")
    }

    /// `(time, peak position)` of the free packet at every sample.
    pub fn trajectory(&self, dt: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.steps
            .iter()
            .zip(&self.max_positions)
            .map(move |(s, p)| (*s as f64 * dt, *p))
    }
}

/// Run the barrier simulation for `point` against a precomputed free track.
pub fn run_against(
    config: &ExperimentConfig,
    point: RunPoint,
    free: &FreeTrack,
) -> Result<PairOutcome> {
    let grid = config.grid()?;
    let barrier = SquareBarrier::new(config.barrier_start, point.d, point.h)?;
    let potential = sample_potential(&barrier, &grid, config.k0)?;
    let stepper = Stepper::new(&grid, &potential, config.dt)?;

    let initial = gaussian_packet(&grid, config.x0, point.sigma, config.k0)?;
    let checksum = initial.checksum();
    if checksum != free.initial.checksum() {
        return Err(Error::invalid(
            "sigma",
            format!(
                "free track was prepared with sigma={}, run uses {}",
                free.sigma, point.sigma
            ),
        ));
    }

    let transmitted_region = barrier.transmitted_region(&grid);
    let mut record = RunRecord::with_capacity(free.steps.len(), checksum);
    let mut run = Propagation::new(&stepper, initial)?;
    let mut prev: Option<(usize, f64)> = None;
    for (i, &target) in free.steps.iter().enumerate() {
        run.advance(target - run.steps())?;
        let psi = run.psi();
        let dens = psi.density();
        let split = ProbabilitySplit::of(psi, &barrier, &grid);
        let max_free = free.max_positions[i];
        let max_transmitted = if split.transmitted > MIN_TRANSMITTED_NORM {
            max_position(&dens, transmitted_region.clone())?
        } else {
            f64::NAN
        };
        let settled = match prev {
            Some((prev_step, prev_norm)) if split.transmitted > MIN_TRANSMITTED_NORM => {
                let per_100 = 100.0 / (target - prev_step).max(1) as f64;
                (split.transmitted - prev_norm).abs() / split.transmitted * per_100
                    < SETTLED_RELATIVE_CHANGE
            }
            _ => false,
        };
        prev = Some((target, split.transmitted));
        let excess = envelope_check(&dens, &free.densities[i], &barrier);
        record.envelope_violation = record.envelope_violation.max(excess);

        record.steps.push(target);
        record.times.push(target as f64 * config.dt);
        record.max_free.push(max_free);
        record.max_transmitted.push(max_transmitted);
        record.shift.push(max_transmitted - max_free);
        record.transmitted_norm.push(split.transmitted);
        record.reflected_norm.push(split.reflected);
        record.barrier_norm.push(split.barrier);
        record.total_norm.push(psi.norm());
        record.settled.push(settled);
    }

    let final_psi = run.into_state();
    let tunneled_density = final_psi.density();
    let free_density = free.final_density().to_vec();
    let last = record.len() - 1;
    let transmitted_norm = record.transmitted_norm[last];

    let mut flags = Vec::new();
    if !(transmitted_norm > MIN_TRANSMITTED_NORM) {
        flags.push(Flag::NoTransmission);
    } else if !record.settled[last] {
        flags.push(Flag::Unsettled);
    }
    let (peak_amplitude, mean_transmitted_k) = if flags.contains(&Flag::NoTransmission) {
        (f64::NAN, f64::NAN)
    } else {
        let peak = tunneled_density[transmitted_region.clone()]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let spectrum = momentum_distribution(&final_psi, transmitted_region)?;
        (peak, spectrum.mean_positive_k())
    };

    let summary = SummaryRow {
        sigma: point.sigma,
        d: point.d,
        h: point.h,
        snapshot_time: record.times[last],
        max_free: record.max_free[last],
        max_transmitted: record.max_transmitted[last],
        shift: record.shift[last],
        transmitted_norm,
        flags,
        peak_amplitude,
        mean_transmitted_k,
        envelope_excess: envelope_check(&tunneled_density, &free_density, &barrier),
    };
    Ok(PairOutcome {
        point,
        record,
        free_density,
        tunneled_density,
        summary,
    })
}

/// Evolve the same packet with and without the barrier for `config`'s
/// snapshot step count and compare them every `stride` steps.
pub fn run_pair(config: &ExperimentConfig, point: RunPoint) -> Result<PairOutcome> {
    config.validate(&[point])?;
    let n_steps = config.snapshot_steps(&[point])?;
    let free = FreeTrack::compute(config, point.sigma, n_steps)?;
    run_against(config, point, &free)
}

/// Labeled density columns for a snapshot file: `free` first, then one
/// column per run.
pub type DensityColumns = Vec<(String, Vec<f64>)>;

/// Rows plus the density snapshots of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub snapshot_steps: usize,
    pub rows: Vec<SummaryRow>,
    pub densities: DensityColumns,
    pub records: Vec<RunRecord>,
}

fn sort_rows(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.d.cmp(&b.d))
            .then(a.h.total_cmp(&b.h))
    });
}

fn format_label_value(v: f64) -> String {
    format!("{v}")
}

/// Run every point, sharing one free track per sigma. Points run in
/// parallel; output order follows `points`.
fn sweep(
    config: &ExperimentConfig,
    points: &[RunPoint],
) -> Result<(usize, Vec<PairOutcome>, BTreeMap<u64, FreeTrack>)> {
    if points.is_empty() {
        return Err(Error::invalid("sweep", "no parameter values to run"));
    }
    config.validate(points)?;
    let n_steps = config.snapshot_steps(points)?;

    let mut sigmas: Vec<f64> = points.iter().map(|p| p.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let tracks: Vec<FreeTrack> = sigmas
        .par_iter()
        .map(|&s| FreeTrack::compute(config, s, n_steps))
        .collect::<Result<_>>()?;
    let tracks: BTreeMap<u64, FreeTrack> =
        tracks.into_iter().map(|t| (t.sigma.to_bits(), t)).collect();

    let outcomes = points
        .par_iter()
        .map(|p| run_against(config, *p, &tracks[&p.sigma.to_bits()]))
        .collect::<Result<Vec<_>>>()?;
    Ok((n_steps, outcomes, tracks))
}

fn table_from(
    n_steps: usize,
    outcomes: Vec<PairOutcome>,
    free: Option<&FreeTrack>,
    label: impl Fn(&RunPoint) -> String,
) -> SweepTable {
    let mut densities = Vec::new();
    if let Some(track) = free {
        densities.push(("free".to_string(), track.final_density().to_vec()));
    }
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if free.is_some() {
            densities.push((label(&o.point), o.tunneled_density));
        }
        rows.push(o.summary);
        records.push(o.record);
    }
    sort_rows(&mut rows);
    SweepTable {
        snapshot_steps: n_steps,
        rows,
        densities,
        records,
    }
}

/// Barrier-width snapshot at fixed height: one pair per `d_list` entry
/// using the first `h_list` value. Density columns are labeled `d<width>`.
pub fn snapshot_experiment(config: &ExperimentConfig) -> Result<SweepTable> {
    let points = config.snapshot_points();
    let (n_steps, outcomes, tracks) = sweep(config, &points)?;
    let track = tracks.values().next();
    Ok(table_from(n_steps, outcomes, track, |p| {
        format!("d{}", p.d)
    }))
}

/// Barrier-height sweep at fixed width (first `d_list` entry). Density
/// columns are labeled `h<ratio>`.
pub fn height_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let points = config.height_points();
    let (n_steps, outcomes, tracks) = sweep(config, &points)?;
    let track = tracks.values().next();
    Ok(table_from(n_steps, outcomes, track, |p| {
        format!("h{}", format_label_value(p.h))
    }))
}

/// Cross product of `sigma_list` and `d_list` at the first `h_list` value.
/// No density snapshots: packets of different sigma share no reference.
pub fn width_scan(config: &ExperimentConfig) -> Result<SweepTable> {
    let points = config.width_scan_points();
    let (n_steps, outcomes, _) = sweep(config, &points)?;
    Ok(table_from(n_steps, outcomes, None, |_| String::new()))
}
