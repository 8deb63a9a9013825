//! Moving control supports `ω(t)`, their flow actions, and the integral
//! thickness functional `(1/T)∫₀ᵀ Leb(ω(t) ∩ B(x,r)) dt / V_r`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows_kalman::{matrix_exponential, matrix_from_rows};
use crate::spectral_field::GridSpec;

/// Measurable subsets of ℝⁿ with exact membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    All,
    Empty,
    /// `{x : normal·x ≥ offset}`.
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Double cone `{(x, v) : x ≠ 0, slope_min < v/x < slope_max}` in the
    /// first two coordinates.
    Wedge {
        slope_min: f64,
        slope_max: f64,
    },
    /// `{x : (x_axis - offset) mod period < width}`.
    PeriodicIntervals {
        period: f64,
        offset: f64,
        width: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `[-1,1] ∪ ⋃_{k≥1} (k², k²+k) ∪ (-k²-k, -k²)` along `axis`.
    QuadraticIntervals {
        #[serde(default)]
        axis: usize,
    },
    /// Union of open intervals along `axis`.
    Intervals {
        bounds: Vec<[f64; 2]>,
        #[serde(default)]
        axis: usize,
    },
    /// `{y : y - shift ∈ inner}`.
    Translated {
        shift: Vec<f64>,
        inner: Box<Region>,
    },
    Not {
        inner: Box<Region>,
    },
    And {
        parts: Vec<Region>,
    },
    Or {
        parts: Vec<Region>,
    },
}

impl Region {
    /// Translation cone `{(x, αx) : |α| < tan θ₀}`.
    pub fn translation_cone(theta0: f64) -> Self {
        let s = theta0.tan();
        Region::Wedge {
            slope_min: -s,
            slope_max: s,
        }
    }

    /// Rotation cone `{(x, αx) : 0 < α < tan θ₀}`.
    pub fn rotation_cone(theta0: f64) -> Self {
        Region::Wedge {
            slope_min: 0.0,
            slope_max: theta0.tan(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Empty => false,
            Region::HalfSpace { normal, offset } => normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= *offset,
            Region::Ball { center, radius } => {
                center.iter().zip(x).map(|(c, y)| (y - c) * (y - c)).sum::<f64>() <= radius * radius
            }
            Region::Wedge { slope_min, slope_max } => {
                let (a, v) = (x[0], x[1]);
                if a == 0.0 {
                    return false;
                }
                let slope = v / a;
                *slope_min < slope && slope < *slope_max
            }
            Region::PeriodicIntervals {
                period,
                offset,
                width,
                axis,
            } => (x[*axis] - offset).rem_euclid(*period) < *width,
            Region::QuadraticIntervals { axis } => in_quadratic_intervals(x[*axis]),
            Region::Intervals { bounds, axis } => {
                let y = x[*axis];
                bounds.iter().any(|[a, b]| *a < y && y < *b)
            }
            Region::Translated { shift, inner } => {
                let mut buf = [0.0; 3];
                let n = x.len();
                for i in 0..n {
                    buf[i] = x[i] - shift[i];
                }
                inner.contains(&buf[..n])
            }
            Region::Not { inner } => !inner.contains(x),
            Region::And { parts } => parts.iter().all(|p| p.contains(x)),
            Region::Or { parts } => parts.iter().any(|p| p.contains(x)),
        }
    }

    /// Checks coordinate indices and vector lengths against the dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self {
            Region::All | Region::Empty => Ok(()),
            Region::HalfSpace { normal, .. } if normal.len() != dim => {
                bad(format!("half-space normal has length {}, expected {dim}", normal.len()))
            }
            Region::Ball { center, radius } => {
                if center.len() != dim {
                    bad(format!("ball centre has length {}, expected {dim}", center.len()))
                } else if !(*radius > 0.0) {
                    bad("ball radius must be positive".into())
                } else {
                    Ok(())
                }
            }
            Region::Wedge { slope_min, slope_max } => {
                if dim < 2 {
                    bad("wedge needs at least two dimensions".into())
                } else if !(slope_min < slope_max) {
                    bad("wedge needs slope_min < slope_max".into())
                } else {
                    Ok(())
                }
            }
            Region::PeriodicIntervals {
                period, width, axis, ..
            } => {
                if *axis >= dim {
                    bad(format!("axis {axis} out of range"))
                } else if !(*period > 0.0) || !(*width >= 0.0) {
                    bad("periodic intervals need period > 0 and width >= 0".into())
                } else {
                    Ok(())
                }
            }
            Region::QuadraticIntervals { axis } | Region::Intervals { axis, .. } if *axis >= dim => {
                bad(format!("axis {axis} out of range"))
            }
            Region::Translated { shift, inner } => {
                if shift.len() != dim {
                    bad(format!("shift has length {}, expected {dim}", shift.len()))
                } else {
                    inner.validate(dim)
                }
            }
            Region::Not { inner } => inner.validate(dim),
            Region::And { parts } | Region::Or { parts } => parts.iter().try_for_each(|p| p.validate(dim)),
            _ => Ok(()),
        }
    }
}

fn in_quadratic_intervals(y: f64) -> bool {
    let a = y.abs();
    if a <= 1.0 {
        return true;
    }
    let mut k = a.sqrt().floor();
    while k * k > a {
        k -= 1.0;
    }
    while (k + 1.0) * (k + 1.0) <= a {
        k += 1.0;
    }
    k * k < a && a < k * k + k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOrientation {
    /// `ω(t) = e^{(T-t)B} ω` (the reduced OU equation).
    Backward,
    /// `ω(t) = e^{tB} ω` (the form of the thickness condition).
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportKind {
    Fixed {
        base: Region,
    },
    FlowPushforward {
        base: Region,
        drift: Vec<Vec<f64>>,
        orientation: FlowOrientation,
    },
    /// `ω(t) = √(1 + 2μt) ω`.
    Dilating {
        base: Region,
        mu: f64,
    },
    /// Piecewise constant in time: `pieces[i]` applies on `[ends[i-1], ends[i])`.
    ExplicitFamily {
        ends: Vec<f64>,
        pieces: Vec<Region>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingSupport {
    pub kind: SupportKind,
    pub horizon: f64,
    pub dim: usize,
}

impl MovingSupport {
    pub fn new(kind: SupportKind, horizon: f64, dim: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "horizon T = {horizon} must be positive"
            )));
        }
        match &kind {
            SupportKind::Fixed { base } => base.validate(dim)?,
            SupportKind::FlowPushforward { base, drift, .. } => {
                base.validate(dim)?;
                let b = matrix_from_rows(drift)?;
                if b.nrows() != dim || b.ncols() != dim {
                    return Err(Error::InvalidArgument(format!("drift must be {dim}x{dim}")));
                }
            }
            SupportKind::Dilating { base, mu } => {
                base.validate(dim)?;
                if !(*mu > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "dilation rate mu = {mu} must be positive"
                    )));
                }
            }
            SupportKind::ExplicitFamily { ends, pieces } => {
                if ends.len() != pieces.len() || pieces.is_empty() {
                    return Err(Error::InvalidArgument(
                        "explicit family needs one end time per piece".into(),
                    ));
                }
                if ends.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument("explicit family end times must increase".into()));
                }
                pieces.iter().try_for_each(|p| p.validate(dim))?;
            }
        }
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidArgument(format!("support dimension {dim} not in 1..=3")));
        }
        Ok(Self { kind, horizon, dim })
    }

    pub fn fixed(base: Region, horizon: f64, dim: usize) -> Result<Self> {
        Self::new(SupportKind::Fixed { base }, horizon, dim)
    }

    pub fn flow(base: Region, drift: &DMatrix<f64>, orientation: FlowOrientation, horizon: f64) -> Result<Self> {
        let dim = drift.nrows();
        let drift = crate::flows_kalman::matrix_to_rows(drift);
        Self::new(
            SupportKind::FlowPushforward {
                base,
                drift,
                orientation,
            },
            horizon,
            dim,
        )
    }

    pub fn dilating(base: Region, mu: f64, horizon: f64, dim: usize) -> Result<Self> {
        Self::new(SupportKind::Dilating { base, mu }, horizon, dim)
    }

    /// Same support with another horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.kind.clone(), horizon, self.dim)
    }

    /// Same flow support with the opposite orientation; the thickness value
    /// is unchanged under this relabelling `t → T - t`.
    pub fn reversed(&self) -> Option<Self> {
        match &self.kind {
            SupportKind::FlowPushforward {
                base,
                drift,
                orientation,
            } => Some(Self {
                kind: SupportKind::FlowPushforward {
                    base: base.clone(),
                    drift: drift.clone(),
                    orientation: match orientation {
                        FlowOrientation::Backward => FlowOrientation::Forward,
                        FlowOrientation::Forward => FlowOrientation::Backward,
                    },
                },
                horizon: self.horizon,
                dim: self.dim,
            }),
            _ => None,
        }
    }

    /// `ω(t)` frozen as "linear map then base region".
    pub fn slice(&self, t: f64) -> Result<SupportSlice> {
        let n = self.dim;
        let (map, region) = match &self.kind {
            SupportKind::Fixed { base } => (None, base.clone()),
            SupportKind::FlowPushforward {
                base,
                drift,
                orientation,
            } => {
                let b = matrix_from_rows(drift)?;
                let s = match orientation {
                    FlowOrientation::Backward => -(self.horizon - t),
                    FlowOrientation::Forward => -t,
                };
                (Some(matrix_exponential(&b, s)?), base.clone())
            }
            SupportKind::Dilating { base, mu } => {
                let scale = 1.0 / (1.0 + 2.0 * mu * t).sqrt();
                (Some(DMatrix::identity(n, n) * scale), base.clone())
            }
            SupportKind::ExplicitFamily { ends, pieces } => {
                let idx = ends.iter().position(|&e| t < e).unwrap_or(pieces.len() - 1);
                (None, pieces[idx].clone())
            }
        };
        Ok(SupportSlice { dim: n, map, region })
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> Result<bool> {
        Ok(self.slice(t)?.contains(x))
    }

    /// `{0,1}` mask of `ω(t)` at the grid's cell centres.
    pub fn mask(&self, t: f64, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "support dimension {} vs grid dimension {}",
                self.dim,
                grid.dim()
            )));
        }
        let slice = self.slice(t)?;
        Ok(grid.mask(|x| slice.contains(x)))
    }
}

#[derive(Debug, Clone)]
pub struct SupportSlice {
    dim: usize,
    map: Option<DMatrix<f64>>,
    region: Region,
}

impl SupportSlice {
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.map {
            None => self.region.contains(x),
            Some(m) => {
                let mut y = [0.0; 3];
                for i in 0..self.dim {
                    y[i] = (0..self.dim).map(|j| m[(i, j)] * x[j]).sum();
                }
                self.region.contains(&y[..self.dim])
            }
        }
    }
}

/// Volume of the radius-`r` ball in ℝⁿ.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    match n {
        1 => 2.0 * r,
        2 => std::f64::consts::PI * r * r,
        3 => 4.0 / 3.0 * std::f64::consts::PI * r.powi(3),
        _ => {
            let nf = n as f64;
            std::f64::consts::PI.powf(nf / 2.0) / gamma_half_int(n + 2) * r.powf(nf)
        }
    }
}

/// Γ(k/2) for positive integer k.
fn gamma_half_int(k: usize) -> f64 {
    if k == 1 {
        std::f64::consts::PI.sqrt()
    } else if k == 2 {
        1.0
    } else {
        (k as f64 / 2.0 - 1.0) * gamma_half_int(k - 2)
    }
}

/// Minimum number of Monte Carlo samples per estimate.
pub const MIN_SAMPLES: usize = 10_000;

/// Number of time strata in the thickness estimator.
pub const TIME_STRATA: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessEstimate {
    pub center: Vec<f64>,
    pub r: f64,
    /// `(1/T)∫₀ᵀ Leb(ω(t) ∩ B(x,r)) dt / V_r`.
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Time-dependent map `t ↦ M(t)` with `x ∈ ω(t) ⇔ M(t)x ∈ base`, evaluated
/// cheaply inside a stratum by correcting the stratum's exact endpoint value.
enum MapPath {
    Identity,
    Scalar {
        mu: f64,
    },
    Flow {
        signed_drift: [f64; 9],
        stratum_maps: Vec<[f64; 9]>,
    },
    Explicit {
        ends: Vec<f64>,
        pieces: Vec<Region>,
    },
}

struct Sampler<'a> {
    dim: usize,
    t0: f64,
    t1: f64,
    strata: usize,
    path: MapPath,
    base: Option<&'a Region>,
}

fn to_array(m: &DMatrix<f64>) -> [f64; 9] {
    let n = m.nrows();
    let mut out = [0.0; 9];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
    out
}

/// `e^{δA} y` by a Taylor series on the vector, truncated once the terms
/// drop below double precision.
fn small_exp_apply(a: &[f64; 9], delta: f64, y: &[f64; 3], n: usize) -> [f64; 3] {
    let mut term = *y;
    let mut out = *y;
    let scale: f64 = y[..n].iter().map(|v| v.abs()).sum();
    for k in 1..=20 {
        let c = delta / k as f64;
        let mut next = [0.0; 3];
        let mut size = 0.0;
        for i in 0..n {
            next[i] = c * (0..n).map(|j| a[i * n + j] * term[j]).sum::<f64>();
            size += next[i].abs();
        }
        term = next;
        for i in 0..n {
            out[i] += term[i];
        }
        if size <= 1e-17 * scale {
            break;
        }
    }
    out
}

impl<'a> Sampler<'a> {
    fn new(sup: &'a MovingSupport, t0: f64, t1: f64, strata: usize) -> Result<Self> {
        let n = sup.dim;
        let h = (t1 - t0) / strata as f64;
        let (path, base) = match &sup.kind {
            SupportKind::Fixed { base } => (MapPath::Identity, Some(base)),
            SupportKind::Dilating { base, mu } => (MapPath::Scalar { mu: *mu }, Some(base)),
            SupportKind::ExplicitFamily { ends, pieces } => (
                MapPath::Explicit {
                    ends: ends.clone(),
                    pieces: pieces.clone(),
                },
                None,
            ),
            SupportKind::FlowPushforward {
                base,
                drift,
                orientation,
            } => {
                let b = matrix_from_rows(drift)?;
                // M(t) = e^{-(T-t)B} (backward) or e^{-tB} (forward); within a
                // stratum M(t_k + δ) = M(t_k) e^{±δB}
                let (sign, offset) = match orientation {
                    FlowOrientation::Backward => (1.0, -sup.horizon),
                    FlowOrientation::Forward => (-1.0, 0.0),
                };
                let signed = &b * sign;
                let stratum_maps = (0..strata)
                    .map(|k| {
                        let tk = t0 + h * k as f64;
                        let s = if sign > 0.0 { offset + tk } else { -tk };
                        matrix_exponential(&b, s).map(|m| to_array(&m))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (
                    MapPath::Flow {
                        signed_drift: to_array(&signed),
                        stratum_maps,
                    },
                    Some(base),
                )
            }
        };
        Ok(Self {
            dim: n,
            t0,
            t1,
            strata,
            path,
            base,
        })
    }

    /// Fraction of `(t, y)` samples with `y ∈ ω(t)`, stratified in time.
    fn estimate(&self, center: &[f64], r: f64, samples: usize, seed: u64) -> (f64, f64) {
        let n = self.dim;
        let h = (self.t1 - self.t0) / self.strata as f64;
        let base_count = samples / self.strata;
        let extra = samples % self.strata;
        let mut value = 0.0;
        let mut var = 0.0;
        let w = 1.0 / self.strata as f64;
        for k in 0..self.strata {
            let count = base_count + usize::from(k < extra);
            if count == 0 {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut hits = 0usize;
            let mut y = [0.0; 3];
            let mut z = [0.0; 3];
            for _ in 0..count {
                let delta = h * rng.random::<f64>();
                let t = self.t0 + h * k as f64 + delta;
                sample_ball(&mut rng, n, r, &mut y);
                for i in 0..n {
                    y[i] += center[i];
                }
                let inside = match &self.path {
                    MapPath::Identity => self.base.expect("base").contains(&y[..n]),
                    MapPath::Scalar { mu } => {
                        let s = 1.0 / (1.0 + 2.0 * mu * t).sqrt();
                        for i in 0..n {
                            z[i] = y[i] * s;
                        }
                        self.base.expect("base").contains(&z[..n])
                    }
                    MapPath::Flow {
                        signed_drift,
                        stratum_maps,
                    } => {
                        let w = small_exp_apply(signed_drift, delta, &y, n);
                        let m = &stratum_maps[k];
                        for i in 0..n {
                            z[i] = (0..n).map(|j| m[i * n + j] * w[j]).sum();
                        }
                        self.base.expect("base").contains(&z[..n])
                    }
                    MapPath::Explicit { ends, pieces } => {
                        let idx = ends.iter().position(|&e| t < e).unwrap_or(pieces.len() - 1);
                        pieces[idx].contains(&y[..n])
                    }
                };
                hits += usize::from(inside);
            }
            let p = hits as f64 / count as f64;
            value += w * p;
            var += w * w * p * (1.0 - p) / count as f64;
        }
        (value, var.sqrt())
    }
}

/// Uniform point in the radius-`r` ball (polar method).
fn sample_ball<R: Rng>(rng: &mut R, n: usize, r: f64, out: &mut [f64; 3]) {
    let u: f64 = rng.random();
    match n {
        1 => {
            out[0] = r * (2.0 * u - 1.0);
        }
        2 => {
            let rho = r * u.sqrt();
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            out[0] = rho * phi.cos();
            out[1] = rho * phi.sin();
        }
        _ => {
            let rho = r * u.cbrt();
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            out[0] = rho * s * phi.cos();
            out[1] = rho * s * phi.sin();
            out[2] = rho * z;
        }
    }
}

fn check_estimate_args(sup: &MovingSupport, x: &[f64], r: f64, samples: usize) -> Result<()> {
    if x.len() != sup.dim {
        return Err(Error::InvalidArgument(format!(
            "centre has dimension {}, support has {}",
            x.len(),
            sup.dim
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius r = {r} must be positive")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples required, got {samples}"
        )));
    }
    Ok(())
}

pub fn thickness_at(sup: &MovingSupport, x: &[f64], r: f64, samples: usize, seed: u64) -> Result<ThicknessEstimate> {
    check_estimate_args(sup, x, r, samples)?;
    let sampler = Sampler::new(sup, 0.0, sup.horizon, TIME_STRATA)?;
    let (value, std_err) = sampler.estimate(x, r, samples, seed);
    Ok(ThicknessEstimate {
        center: x.to_vec(),
        r,
        value,
        std_err,
        samples,
        seed,
    })
}

/// Per-centre seed derived from the run seed (splitmix64 mixing).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessProfile {
    pub estimates: Vec<ThicknessEstimate>,
    pub min: f64,
    pub argmin: Vec<f64>,
    /// Standard error of the minimal estimate.
    pub min_std_err: f64,
}

pub fn thickness_profile(
    sup: &MovingSupport,
    r: f64,
    centers: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<ThicknessProfile> {
    if centers.is_empty() {
        return Err(Error::InvalidArgument("empty centre schedule".into()));
    }
    for c in centers {
        check_estimate_args(sup, c, r, samples)?;
    }
    let sampler = Sampler::new(sup, 0.0, sup.horizon, TIME_STRATA)?;
    let estimates: Vec<ThicknessEstimate> = centers
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let s = sub_seed(seed, i as u64);
            let (value, std_err) = sampler.estimate(c, r, samples, s);
            ThicknessEstimate {
                center: c.clone(),
                r,
                value,
                std_err,
                samples,
                seed: s,
            }
        })
        .collect();
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if e.value < estimates[best].value {
            best = i;
        }
    }
    Ok(ThicknessProfile {
        min: estimates[best].value,
        argmin: estimates[best].center.clone(),
        min_std_err: estimates[best].std_err,
        estimates,
    })
}

/// Adversarial schedule for 2-D cone scenarios: `ring` equally spaced
/// directions at distance `distance` (starting at angle 0) plus a
/// `lattice × lattice` grid on `[-extent, extent]²`.
pub fn ring_and_lattice(ring: usize, distance: f64, lattice: usize, extent: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(ring + lattice * lattice);
    for k in 0..ring {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / ring as f64;
        out.push(vec![distance * phi.cos(), distance * phi.sin()]);
    }
    for i in 0..lattice {
        for j in 0..lattice {
            let step = if lattice > 1 {
                2.0 * extent / (lattice - 1) as f64
            } else {
                0.0
            };
            out.push(vec![-extent + step * i as f64, -extent + step * j as f64]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvaluation {
    pub horizon: f64,
    pub min_value: f64,
    pub min_std_err: f64,
    pub argmin: Vec<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub t_star: f64,
    pub lower: f64,
    pub upper: f64,
    pub evaluations: Vec<ThresholdEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub r: f64,
    pub gamma_floor: f64,
    pub samples: usize,
    pub seed: u64,
    pub bracket: (f64, f64),
    pub tol: f64,
}

/// Smallest horizon used when the lower bracket is 0.
const MIN_HORIZON: f64 = 1e-3;

/// Bisection on the horizon for the transition of
/// `min_x (1/T)∫₀ᵀ Leb(ω(t) ∩ B(x,r)) dt ≥ γ_floor V_r`.
pub fn threshold_bisect<F>(family: F, centers: &[Vec<f64>], cfg: &ThresholdConfig) -> Result<ThresholdResult>
where
    F: Fn(f64) -> Result<MovingSupport>,
{
    let (mut lo, mut hi) = cfg.bracket;
    if !(lo >= 0.0 && hi > lo) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid bracket [{lo}, {hi}] or tolerance {}",
            cfg.tol
        )));
    }
    let mut evaluations = Vec::new();
    let eval = |t: f64, seed: u64, log: &mut Vec<ThresholdEvaluation>| -> Result<ThresholdEvaluation> {
        let sup = family(t.max(MIN_HORIZON))?;
        let p = thickness_profile(&sup, cfg.r, centers, cfg.samples, seed)?;
        let e = ThresholdEvaluation {
            horizon: t,
            min_value: p.min,
            min_std_err: p.min_std_err,
            argmin: p.argmin,
            holds: p.min >= cfg.gamma_floor,
        };
        log.push(e.clone());
        Ok(e)
    };
    if eval(lo, cfg.seed, &mut evaluations)?.holds {
        return Ok(ThresholdResult {
            t_star: lo,
            lower: lo,
            upper: lo,
            evaluations,
        });
    }
    let top = eval(hi, cfg.seed, &mut evaluations)?;
    if !top.holds {
        return Err(Error::ThresholdNotReached {
            horizon: hi,
            min_value: top.min_value,
            floor: cfg.gamma_floor,
        });
    }
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid, cfg.seed, &mut evaluations)?.holds {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // independent re-check of both brackets with a fresh seed
    let fresh = sub_seed(cfg.seed, u64::MAX);
    let lo_check = eval(lo, fresh, &mut evaluations)?;
    let hi_check = eval(hi, fresh, &mut evaluations)?;
    if lo_check.min_value > cfg.gamma_floor + 3.0 * lo_check.min_std_err
        || hi_check.min_value < cfg.gamma_floor - 3.0 * hi_check.min_std_err
    {
        return Err(Error::NonMonotoneScenario(format!(
            "re-check gives {:.4} at T = {lo:.4} and {:.4} at T = {hi:.4} against floor {}",
            lo_check.min_value, hi_check.min_value, cfg.gamma_floor
        )));
    }
    Ok(ThresholdResult {
        t_star: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        evaluations,
    })
}

/// Time-space set `Ω = {(t,x) ∈ [0,T_γ] × ℝⁿ : x ∈ ω(t)}`.
#[derive(Debug, Clone)]
pub struct TimeSpaceSet {
    pub support: MovingSupport,
    pub t_gamma: f64,
}

impl TimeSpaceSet {
    pub fn contains(&self, t: f64, x: &[f64]) -> Result<bool> {
        if !(0.0..=self.t_gamma).contains(&t) {
            return Ok(false);
        }
        self.support.contains(t, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMeasureCheck {
    pub center: Vec<f64>,
    /// MC estimate of `Leb(Ω ∩ [0,T_γ] × B(x,r))`.
    pub measure: f64,
    pub std_err: f64,
    /// `(γ/2) T V_r`.
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct Thickening {
    pub set: TimeSpaceSet,
    pub checks: Vec<CylinderMeasureCheck>,
}

/// `T_γ = (1 - γ/2) T`.
pub fn t_gamma(horizon: f64, gamma: f64) -> f64 {
    (1.0 - gamma / 2.0) * horizon
}

/// Builds `Ω` and verifies `Leb(Ω ∩ [0,T_γ] × B(x,r)) ≥ (γ/2) T V_r` at the
/// given centres (within three standard errors).
pub fn timespace_thicken(
    sup: &MovingSupport,
    gamma: f64,
    r: f64,
    centers: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<Thickening> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rate gamma = {gamma} must lie in (0, 1]"
        )));
    }
    let tg = t_gamma(sup.horizon, gamma);
    let vr = ball_volume(sup.dim, r);
    let bound = 0.5 * gamma * sup.horizon * vr;
    for c in centers {
        check_estimate_args(sup, c, r, samples)?;
    }
    let sampler = Sampler::new(sup, 0.0, tg, TIME_STRATA)?;
    let checks = centers
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let (frac, se) = sampler.estimate(c, r, samples, sub_seed(seed, i as u64));
            let measure = frac * tg * vr;
            let std_err = se * tg * vr;
            CylinderMeasureCheck {
                center: c.clone(),
                measure,
                std_err,
                bound,
                satisfied: measure + 3.0 * std_err >= bound,
            }
        })
        .collect();
    Ok(Thickening {
        set: TimeSpaceSet {
            support: sup.clone(),
            t_gamma: tg,
        },
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_intervals_membership() {
        let r = Region::QuadraticIntervals { axis: 0 };
        assert!(r.contains(&[0.5]));
        assert!(r.contains(&[-1.0]));
        assert!(r.contains(&[1.5]));
        assert!(!r.contains(&[2.5]));
        assert!(!r.contains(&[3.0]));
        assert!(!r.contains(&[4.0]));
        assert!(r.contains(&[5.5]));
        assert!(!r.contains(&[6.5]));
        assert!(r.contains(&[-10.0]));
        assert!(!r.contains(&[-9.0]));
    }

    #[test]
    fn cones() {
        let tr = Region::translation_cone(std::f64::consts::FRAC_PI_4);
        assert!(tr.contains(&[2.0, 1.0]));
        assert!(tr.contains(&[-2.0, 1.0]));
        assert!(!tr.contains(&[1.0, 2.0]));
        assert!(!tr.contains(&[0.0, 0.0]));
        let rot = Region::rotation_cone(std::f64::consts::FRAC_PI_8);
        assert!(rot.contains(&[1.0, 0.1]));
        assert!(rot.contains(&[-1.0, -0.1]));
        assert!(!rot.contains(&[1.0, -0.1]));
    }

    #[test]
    fn full_and_empty() {
        let all = MovingSupport::fixed(Region::All, 1.0, 2).unwrap();
        let e = thickness_at(&all, &[3.0, 4.0], 1.0, 20_000, 1).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_err, 0.0);
        let none = MovingSupport::fixed(Region::Empty, 1.0, 2).unwrap();
        assert_eq!(thickness_at(&none, &[3.0, 4.0], 1.0, 20_000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn small_exp_matches_pade() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = matrix_exponential(&b, 0.03).unwrap();
        let y = [0.3, -2.0, 0.0];
        let s = small_exp_apply(&to_array(&b), 0.03, &y, 2);
        for i in 0..2 {
            let exact = e[(i, 0)] * y[0] + e[(i, 1)] * y[1];
            assert!((exact - s[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn slice_agrees_with_sampler_map() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let sup = MovingSupport::flow(Region::translation_cone(0.7), &b, FlowOrientation::Backward, 3.0).unwrap();
        // x ∈ e^{(T-t)B}ω ⇔ e^{-(T-t)B}x ∈ ω
        let x = [1.0, 0.5];
        let t = 2.0;
        let y = [x[0] - (3.0 - t) * x[1], x[1]];
        assert_eq!(sup.contains(t, &x).unwrap(), Region::translation_cone(0.7).contains(&y));
    }

    #[test]
    fn t_gamma_arithmetic() {
        assert_eq!(t_gamma(3.0, 1.0), 1.5);
        assert_eq!(t_gamma(3.0, 0.5), 2.25);
    }

    #[test]
    fn rejects_too_few_samples() {
        let all = MovingSupport::fixed(Region::All, 1.0, 1).unwrap();
        assert!(thickness_at(&all, &[0.0], 1.0, 100, 1).is_err());
    }
}
