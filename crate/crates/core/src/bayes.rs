//! Grid-based Bayesian estimation of `(bx, bz)` from simulated experiments.
//!
//! Per probe and repetition:
//! 1. the syndrome class counts give a likelihood on the `(bx, bz)` grid,
//!    which depends on the field only through the transverse weight
//!    `Q = n_perp^2 sin^2(Bt)` and therefore constrains a ridge;
//! 2. the string outcomes give a posterior over the effective field angle on
//!    a one-dimensional grid;
//! 3. the highest-density credible set of that angle is mapped back to the
//!    plane as a hard indicator and multiplied with the ridge posterior.
//!
//! Probes are combined by the product of their posteriors and the field is
//! estimated by the posterior mean.
//!
//! A fixed grid resolution cannot follow posteriors that shrink as `1/N`, so
//! [`run_estimation`] repeatedly re-grids on the box holding the posterior
//! mass. A cell is kept in the indicator when any angle between its corner
//! values lies in the credible set, and zooming uses the largest syndrome
//! likelihood over the corner range of `Q`. Both tests are conservative, so
//! zooming never discards a cell that could hold mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{principal_effective_angle, EvolutionTime, MagneticField};
use crate::protocol::{outcome_model, Dimensionality, ProbeBasis, ProbeSpec};
use crate::sampler::{sample_experiment_stream, ExperimentData};
use crate::scalar::Real;

/// Log-density drop below the best cell beyond which a cell is ignored when
/// choosing the next zoom box.
const ZOOM_LOG_CUTOFF: f64 = 30.0;
/// Zooming stops once the kept cells span this fraction of both axes.
const RESOLVED_FRACTION: f64 = 0.6;

/// Uniform axis of `count` cells over `[start, stop]`, sampled at the cell
/// centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis<T> {
    pub start: T,
    pub stop: T,
    pub count: usize,
}

impl<T: Real> GridAxis<T> {
    pub fn new(start: T, stop: T, count: usize) -> Result<Self> {
        if count == 0 || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidConfig("grid axes need count >= 1 and start < stop".into()));
        }
        Ok(Self { start, stop, count })
    }

    pub fn step(&self) -> T {
        (self.stop - self.start) / T::count(self.count)
    }

    pub fn center(&self, i: usize) -> T {
        self.start + (T::count(i) + T::lit(0.5)) * self.step()
    }

    /// Lower edge of cell `i`; `edge(count)` is `stop`.
    pub fn edge(&self, i: usize) -> T {
        if i == self.count {
            self.stop
        } else {
            self.start + T::count(i) * self.step()
        }
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.count).map(|i| self.center(i)).collect()
    }
}

/// Normalized weights over a `(bx, bz)` grid, row-major in `bx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid<T> {
    pub bx_axis: GridAxis<T>,
    pub bz_axis: GridAxis<T>,
    pub density: Vec<T>,
}

impl<T: Real> PosteriorGrid<T> {
    pub fn uniform(bx_axis: GridAxis<T>, bz_axis: GridAxis<T>) -> Self {
        let len = bx_axis.count * bz_axis.count;
        Self { bx_axis, bz_axis, density: vec![T::one() / T::count(len); len] }
    }

    pub fn get(&self, ix: usize, iz: usize) -> T {
        self.density[ix * self.bz_axis.count + iz]
    }

    pub fn total(&self) -> T {
        self.density.iter().copied().sum()
    }

    pub fn mean(&self) -> (T, T) {
        let (mut x, mut z) = (T::zero(), T::zero());
        for ix in 0..self.bx_axis.count {
            for iz in 0..self.bz_axis.count {
                let w = self.get(ix, iz);
                x += w * self.bx_axis.center(ix);
                z += w * self.bz_axis.center(iz);
            }
        }
        (x, z)
    }

    /// Center of the heaviest cell.
    pub fn mode(&self) -> (T, T) {
        let best = (0..self.density.len()).fold(0, |b, i| if self.density[i] > self.density[b] { i } else { b });
        let (ix, iz) = (best / self.bz_axis.count, best % self.bz_axis.count);
        (self.bx_axis.center(ix), self.bz_axis.center(iz))
    }

    /// Replaces the weights by `exp(log_w - max)`, normalized.
    fn set_from_log(&mut self, log_w: &[T]) -> Result<()> {
        let max = log_w.iter().copied().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() || max.is_nan() {
            return Err(Error::AllZeroPosterior);
        }
        let w: Vec<T> = log_w.iter().map(|&l| (l - max).exp()).collect();
        let total: T = w.iter().copied().sum();
        self.density = w.into_iter().map(|x| x / total).collect();
        Ok(())
    }
}

/// Density over the effective field angle on cell centers of
/// `(-pi/2, pi/2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeffPosterior<T> {
    pub axis: GridAxis<T>,
    pub density: Vec<T>,
}

impl<T: Real> BeffPosterior<T> {
    pub fn mode(&self) -> T {
        let best = (0..self.density.len()).fold(0, |b, i| if self.density[i] > self.density[b] { i } else { b });
        self.axis.center(best)
    }

    /// Highest-density credible set at `level`, as sorted disjoint
    /// intervals of whole grid cells.
    pub fn hpd_intervals(&self, level: T) -> Vec<(T, T)> {
        let mut order: Vec<usize> = (0..self.density.len()).collect();
        order.sort_by(|&a, &b| self.density[b].partial_cmp(&self.density[a]).unwrap_or(core::cmp::Ordering::Equal));
        let mut inside = vec![false; self.density.len()];
        let mut acc = T::zero();
        for i in order {
            inside[i] = true;
            acc += self.density[i];
            if acc >= level {
                break;
            }
        }
        let mut out = Vec::new();
        let mut i = 0;
        while i < inside.len() {
            if inside[i] {
                let start = i;
                while i < inside.len() && inside[i] {
                    i += 1;
                }
                out.push((self.axis.edge(start), self.axis.edge(i)));
            } else {
                i += 1;
            }
        }
        out
    }
}

fn intersects<T: Real>(intervals: &[(T, T)], lo: T, hi: T) -> bool {
    // first interval ending at or after lo
    let i = intervals.partition_point(|&(_, end)| end < lo);
    i < intervals.len() && intervals[i].0 <= hi
}

fn require_supported(probe: &ProbeSpec) -> Result<()> {
    probe.validate()?;
    if !probe.ancilla_assisted || probe.dimensionality != Dimensionality::TwoD {
        return Err(Error::Variant("Bayesian estimation covers planar ancilla-assisted probes".into()));
    }
    Ok(())
}

/// Transverse weight `Q` and effective angle of a probe at `(bx, bz)`.
fn probe_coordinates<T: Real>(basis: ProbeBasis, bx: T, bz: T, t: T) -> (T, T) {
    let b = bx.hypot(bz);
    if b == T::zero() {
        return (T::zero(), T::zero());
    }
    let bt = b * t;
    let s = bt.sin();
    let (n_perp, n_par) = match basis {
        ProbeBasis::Z => (bx / b, bz / b),
        ProbeBasis::X => (bz / b, bx / b),
    };
    (n_perp * n_perp * s * s, principal_effective_angle(n_par, bt))
}

/// Sufficient statistics of the syndrome counts: the likelihood is
/// `(1 - Q)^a Q^b` up to a constant.
#[derive(Clone, Copy, Debug)]
struct SyndromeStats<T> {
    a: T,
    b: T,
}

impl<T: Real> SyndromeStats<T> {
    fn new(probe: &ProbeSpec, data: &ExperimentData) -> Self {
        let (mut a, mut b) = (T::zero(), T::zero());
        for (&k, &c) in data.k.iter().zip(&data.counts_k) {
            a += T::count((probe.n - k) * c as usize);
            b += T::count(k * c as usize);
        }
        Self { a, b }
    }

    fn log_likelihood(&self, q: T) -> T {
        let mut l = T::zero();
        if self.a > T::zero() {
            l += self.a * (T::one() - q).ln();
        }
        if self.b > T::zero() {
            l += self.b * q.ln();
        }
        l
    }

    /// Largest log-likelihood over `q in [lo, hi]`.
    fn upper_bound(&self, lo: T, hi: T) -> T {
        let total = self.a + self.b;
        let best = if total > T::zero() { self.b / total } else { lo };
        self.log_likelihood(best.max(lo).min(hi))
    }
}

fn check_data(probe: &ProbeSpec, data: &ExperimentData) -> Result<()> {
    if !data.is_consistent() || data.k.iter().any(|&k| k > probe.n) {
        return Err(Error::InvalidConfig("experiment data does not match the probe".into()));
    }
    Ok(())
}

/// Multiplies `prior` by `prod_k p_k(bx, bz)^{C_k}` and renormalizes.
pub fn posterior_from_syndromes<T: Real>(
    probe: &ProbeSpec,
    data: &ExperimentData,
    t: EvolutionTime<T>,
    prior: &PosteriorGrid<T>,
) -> Result<PosteriorGrid<T>> {
    require_supported(probe)?;
    check_data(probe, data)?;
    let stats = SyndromeStats::<T>::new(probe, data);
    let (nx, nz) = (prior.bx_axis.count, prior.bz_axis.count);
    let log_w: Vec<T> = (0..nx * nz)
        .map(|i| {
            let (bx, bz) = (prior.bx_axis.center(i / nz), prior.bz_axis.center(i % nz));
            let w = prior.density[i];
            if w <= T::zero() || bx.hypot(bz) == T::zero() {
                return T::neg_infinity();
            }
            let (q, _) = probe_coordinates(probe.basis, bx, bz, t.get());
            w.ln() + stats.log_likelihood(q)
        })
        .collect();
    let mut out = prior.clone();
    out.set_from_log(&log_w)?;
    Ok(out)
}

/// Default number of effective-angle grid points for `n` qubits and `m`
/// shots: at least 2001 and fine enough to resolve the `1/(N sqrt M)` width.
pub fn default_beff_points(n: usize, m: u64) -> usize {
    let want = (8.0 * std::f64::consts::PI * n as f64 * (m as f64).sqrt()).ceil() as usize;
    want.max(2001) | 1
}

/// Posterior over the effective angle from the string outcomes,
/// `prod_k cos^2(B_eff (N-k))^{C_k+} sin^2(B_eff (N-k))^{C_k-}`, on `points`
/// cell centers of `(-pi/2, pi/2]`.
pub fn posterior_over_beff<T: Real>(probe: &ProbeSpec, data: &ExperimentData, points: usize) -> Result<BeffPosterior<T>> {
    require_supported(probe)?;
    check_data(probe, data)?;
    let axis = GridAxis::new(-T::FRAC_PI_2(), T::FRAC_PI_2(), points)?;
    let terms: Vec<(T, T, T)> = data
        .k
        .iter()
        .enumerate()
        .filter(|&(i, &k)| k < probe.n && data.counts_k[i] > 0)
        .map(|(i, &k)| (T::count(probe.n - k), T::count(data.counts_plus[i] as usize), T::count(data.counts_minus[i] as usize)))
        .collect();
    let log_w: Vec<T> = (0..points)
        .into_par_iter()
        .map(|i| {
            let beta = axis.center(i);
            let mut l = T::zero();
            for &(w, plus, minus) in &terms {
                let (s, c) = (beta * w).sin_cos();
                if plus > T::zero() {
                    l += plus * (c * c).ln();
                }
                if minus > T::zero() {
                    l += minus * (s * s).ln();
                }
            }
            l
        })
        .collect();
    let max = log_w.iter().copied().fold(T::neg_infinity(), T::max);
    let w: Vec<T> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let total: T = w.iter().copied().sum();
    Ok(BeffPosterior { axis, density: w.into_iter().map(|x| x / total).collect() })
}

/// Restricts `syndrome_post` to the cells whose effective angle can lie in
/// the `band` credible set of `beff_post`, and renormalizes.
pub fn combine_posteriors<T: Real>(
    syndrome_post: &PosteriorGrid<T>,
    beff_post: &BeffPosterior<T>,
    probe: &ProbeSpec,
    t: EvolutionTime<T>,
    band: T,
) -> Result<PosteriorGrid<T>> {
    require_supported(probe)?;
    if !(band > T::zero() && band < T::one()) {
        return Err(Error::InvalidConfig("credible band must lie in (0, 1)".into()));
    }
    let intervals = beff_post.hpd_intervals(band);
    let cells = CellRanges::new(probe.basis, &syndrome_post.bx_axis, &syndrome_post.bz_axis, t.get());
    let nz = syndrome_post.bz_axis.count;
    let mut any = false;
    let log_w: Vec<T> = syndrome_post
        .density
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let (_, (lo, hi)) = cells.ranges(i / nz, i % nz);
            if intersects(&intervals, lo, hi) && w > T::zero() {
                any = true;
                w.ln()
            } else {
                T::neg_infinity()
            }
        })
        .collect();
    if !any {
        return Err(Error::EmptyOverlap);
    }
    let mut out = syndrome_post.clone();
    out.set_from_log(&log_w)?;
    Ok(out)
}

/// `Q` and effective angle at the cell corners of a grid.
struct CellRanges<T> {
    nz: usize,
    q: Vec<T>,
    beta: Vec<T>,
}

impl<T: Real> CellRanges<T> {
    fn new(basis: ProbeBasis, bx_axis: &GridAxis<T>, bz_axis: &GridAxis<T>, t: T) -> Self {
        let nz = bz_axis.count + 1;
        let (q, beta) = (0..(bx_axis.count + 1) * nz)
            .map(|i| probe_coordinates(basis, bx_axis.edge(i / nz), bz_axis.edge(i % nz), t))
            .unzip();
        Self { nz, q, beta }
    }

    /// `((q_lo, q_hi), (beta_lo, beta_hi))` over the corners of a cell.
    fn ranges(&self, ix: usize, iz: usize) -> ((T, T), (T, T)) {
        let idx = [ix * self.nz + iz, ix * self.nz + iz + 1, (ix + 1) * self.nz + iz, (ix + 1) * self.nz + iz + 1];
        let span = |v: &[T]| idx.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &i| (lo.min(v[i]), hi.max(v[i])));
        (span(&self.q), span(&self.beta))
    }
}

/// Settings of the estimation pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig<T> {
    /// Uniform prior box `(bx_min, bx_max, bz_min, bz_max)`.
    pub prior_box: (T, T, T, T),
    /// Cells per axis of the `(bx, bz)` grid at every zoom level.
    pub grid: (usize, usize),
    /// Effective-angle grid size; `None` picks [`default_beff_points`].
    pub beff_points: Option<usize>,
    /// Credible level of the effective-angle band.
    pub band: T,
    /// Most zoom levels after the first grid.
    pub max_zoom: usize,
}

impl<T: Real> Default for EstimationConfig<T> {
    fn default() -> Self {
        Self {
            prior_box: (T::lit(0.05), T::lit(1.0), T::lit(0.05), T::lit(1.0)),
            grid: (200, 200),
            beff_points: None,
            band: T::lit(0.99),
            max_zoom: 12,
        }
    }
}

impl<T: Real> EstimationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let (x0, x1, z0, z1) = self.prior_box;
        GridAxis::new(x0, x1, self.grid.0)?;
        GridAxis::new(z0, z1, self.grid.1)?;
        if x0 <= T::zero() && T::zero() <= x1 && z0 <= T::zero() && T::zero() <= z1 {
            return Err(Error::InvalidConfig("prior box contains the zero field".into()));
        }
        if !(self.band > T::zero() && self.band < T::one()) {
            return Err(Error::InvalidConfig("credible band must lie in (0, 1)".into()));
        }
        if self.beff_points == Some(0) {
            return Err(Error::InvalidConfig("effective-angle grid needs at least one point".into()));
        }
        Ok(())
    }
}

/// Point estimate of one repetition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub rep: usize,
    pub bx: T,
    pub bz: T,
    /// The credible band and the syndrome posterior did not overlap; the
    /// repetition is excluded from the covariance.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult<T> {
    pub estimates: Vec<Estimate<T>>,
    /// Sample covariance of the unflagged estimates; absent with fewer than
    /// two of them.
    pub covariance: Option<[[T; 2]; 2]>,
    pub m: u64,
    pub r: usize,
    pub flagged: usize,
}

impl<T: Real> EstimationResult<T> {
    /// `M Tr[Cov]`, comparable with `Tr[F^-1]`.
    pub fn m_trace_cov(&self) -> Option<T> {
        self.covariance.map(|c| T::count(self.m as usize) * (c[0][0] + c[1][1]))
    }
}

struct ProbeEvidence<T> {
    basis: ProbeBasis,
    stats: SyndromeStats<T>,
    intervals: Vec<(T, T)>,
}

/// Posterior of one repetition on an adaptively zoomed grid.
fn zoomed_posterior<T: Real>(evidence: &[ProbeEvidence<T>], t: T, config: &EstimationConfig<T>) -> Result<PosteriorGrid<T>> {
    let (x0, x1, z0, z1) = config.prior_box;
    let (nx, nz) = config.grid;
    let mut bx_axis = GridAxis::new(x0, x1, nx)?;
    let mut bz_axis = GridAxis::new(z0, z1, nz)?;
    let cutoff = T::lit(ZOOM_LOG_CUTOFF);
    for level in 0..=config.max_zoom {
        let ranges: Vec<CellRanges<T>> = evidence.iter().map(|e| CellRanges::new(e.basis, &bx_axis, &bz_axis, t)).collect();
        let cells: Vec<(T, T)> = (0..nx * nz)
            .into_par_iter()
            .map(|i| {
                let (ix, iz) = (i / nz, i % nz);
                let (bx, bz) = (bx_axis.center(ix), bz_axis.center(iz));
                let (mut center, mut upper) = (T::zero(), T::zero());
                for (e, r) in evidence.iter().zip(&ranges) {
                    let ((q_lo, q_hi), (b_lo, b_hi)) = r.ranges(ix, iz);
                    if !intersects(&e.intervals, b_lo, b_hi) {
                        return (T::neg_infinity(), T::neg_infinity());
                    }
                    let (q, _) = probe_coordinates(e.basis, bx, bz, t);
                    center += e.stats.log_likelihood(q);
                    upper += e.stats.upper_bound(q_lo, q_hi);
                }
                (center, upper)
            })
            .collect();
        if cells.iter().all(|c| c.1 == T::neg_infinity()) {
            return Err(Error::EmptyOverlap);
        }
        let log_w: Vec<T> = cells.iter().map(|c| c.0).collect();
        let mut grid = PosteriorGrid::uniform(bx_axis, bz_axis);
        grid.set_from_log(&log_w)?;
        if level == config.max_zoom {
            return Ok(grid);
        }
        let best = log_w.iter().copied().fold(T::neg_infinity(), T::max);
        let (mut ix_lo, mut ix_hi, mut iz_lo, mut iz_hi) = (nx, 0, nz, 0);
        for (i, c) in cells.iter().enumerate() {
            if c.1 >= best - cutoff {
                let (ix, iz) = (i / nz, i % nz);
                ix_lo = ix_lo.min(ix);
                ix_hi = ix_hi.max(ix);
                iz_lo = iz_lo.min(iz);
                iz_hi = iz_hi.max(iz);
            }
        }
        let (ix_lo, iz_lo) = (ix_lo.saturating_sub(1), iz_lo.saturating_sub(1));
        let (ix_hi, iz_hi) = ((ix_hi + 1).min(nx - 1), (iz_hi + 1).min(nz - 1));
        let frac = T::lit(RESOLVED_FRACTION);
        let wide = |lo: usize, hi: usize, n: usize| T::count(hi - lo + 1) >= frac * T::count(n);
        if wide(ix_lo, ix_hi, nx) && wide(iz_lo, iz_hi, nz) {
            return Ok(grid);
        }
        bx_axis = GridAxis::new(bx_axis.edge(ix_lo), bx_axis.edge(ix_hi + 1), nx)?;
        bz_axis = GridAxis::new(bz_axis.edge(iz_lo), bz_axis.edge(iz_hi + 1), nz)?;
    }
    unreachable!("the last zoom level returns")
}

/// Estimate from one set of experiment records, one per probe.
pub fn estimate_from_data<T: Real>(
    probes: &[ProbeSpec],
    data: &[ExperimentData],
    t: EvolutionTime<T>,
    config: &EstimationConfig<T>,
) -> Result<PosteriorGrid<T>> {
    config.validate()?;
    if probes.is_empty() || probes.len() != data.len() {
        return Err(Error::InvalidConfig("one experiment record per probe is required".into()));
    }
    let evidence = probes
        .iter()
        .zip(data)
        .map(|(probe, d)| {
            let points = config.beff_points.unwrap_or_else(|| default_beff_points(probe.n, d.m));
            let beff = posterior_over_beff::<T>(probe, d, points)?;
            Ok(ProbeEvidence { basis: probe.basis, stats: SyndromeStats::new(probe, d), intervals: beff.hpd_intervals(config.band) })
        })
        .collect::<Result<Vec<_>>>()?;
    zoomed_posterior(&evidence, t.get(), config)
}

/// Simulates `r` repetitions of `m` shots per probe at `truth`, estimates the
/// field from each and collects the sample covariance.
///
/// Repetition `i` draws probe `j`'s record from stream
/// `i * probes.len() + j` of `seed`.
pub fn run_estimation<T: Real>(
    probes: &[ProbeSpec],
    truth: &MagneticField<T>,
    t: EvolutionTime<T>,
    m: u64,
    r: usize,
    config: &EstimationConfig<T>,
    seed: u64,
) -> Result<EstimationResult<T>> {
    config.validate()?;
    if r == 0 || m == 0 {
        return Err(Error::InvalidConfig("at least one repetition and one shot are required".into()));
    }
    if probes.is_empty() {
        return Err(Error::InvalidProbe("at least one probe is required".into()));
    }
    for probe in probes {
        require_supported(probe)?;
    }
    let models = probes.iter().map(|p| outcome_model(p, truth, t)).collect::<Result<Vec<_>>>()?;
    let estimates = (0..r)
        .into_par_iter()
        .map(|rep| {
            let data = models
                .iter()
                .enumerate()
                .map(|(j, model)| sample_experiment_stream(model, m, seed, (rep * probes.len() + j) as u64))
                .collect::<Result<Vec<_>>>()?;
            match estimate_from_data(probes, &data, t, config) {
                Ok(post) => {
                    let (bx, bz) = post.mean();
                    Ok(Estimate { rep, bx, bz, flagged: false })
                }
                Err(Error::EmptyOverlap | Error::AllZeroPosterior) => Ok(Estimate { rep, bx: T::nan(), bz: T::nan(), flagged: true }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let good: Vec<&Estimate<T>> = estimates.iter().filter(|e| !e.flagged).collect();
    let covariance = (good.len() >= 2).then(|| {
        let len = T::count(good.len());
        let mx = good.iter().map(|e| e.bx).sum::<T>() / len;
        let mz = good.iter().map(|e| e.bz).sum::<T>() / len;
        let denom = len - T::one();
        let sxx = good.iter().map(|e| (e.bx - mx) * (e.bx - mx)).sum::<T>() / denom;
        let szz = good.iter().map(|e| (e.bz - mz) * (e.bz - mz)).sum::<T>() / denom;
        let sxz = good.iter().map(|e| (e.bx - mx) * (e.bz - mz)).sum::<T>() / denom;
        [[sxx, sxz], [sxz, szz]]
    });
    let flagged = estimates.len() - good.len();
    Ok(EstimationResult { estimates, covariance, m, r, flagged })
}
