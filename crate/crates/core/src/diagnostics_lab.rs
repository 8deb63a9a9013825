//! Experiments that exercise the controllability estimates:
//! Gaussian necessity probes, Faà di Bruno combinatorics, Bernstein-type
//! smoothing audits and the good/bad cylinder split.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, TimeGrid};
use crate::spectral_field::{self, GridSpec, SpectralField};
use crate::sphere;
use crate::support_geometry::MovingSupport;
use crate::symbol_engine::{self, SymbolFamily, SymbolSlice};

/// Largest `m` accepted by the partition enumerators.
pub const MAX_PARTITION_ORDER: usize = 40;

/// Largest time / space derivative order in the Bernstein audit.
pub const MAX_AUDIT_ORDER: usize = 6;

/// Largest derivative order in the cylinder classification.
pub const MAX_CYLINDER_ORDER: usize = 4;

/// Gaussian `g_l(x) = l⁻ⁿ exp(-|x - x₀|²/(2l²))`, built from its transform
/// `(2π)^{n/2} exp(-i x₀·ξ - l²|ξ|²/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProbe {
    pub x0: Vec<f64>,
    pub l: f64,
}

impl GaussianProbe {
    pub fn new(x0: Vec<f64>, l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidArgument(format!("probe width l = {l} must be positive")));
        }
        if x0.is_empty() || x0.len() > 3 {
            return Err(Error::InvalidArgument(
                "probe centre must have 1 to 3 coordinates".into(),
            ));
        }
        Ok(Self { x0, l })
    }

    pub fn transform(&self, xi: &[f64]) -> Complex64 {
        let n = self.x0.len() as f64;
        let phase: f64 = self.x0.iter().zip(xi).map(|(a, b)| a * b).sum();
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let amp = (2.0 * PI).powf(n / 2.0) * (-self.l * self.l * r2 / 2.0).exp();
        Complex64::from_polar(amp, -phase)
    }

    /// `‖g_l‖² = (π/l²)^{n/2}`.
    pub fn exact_norm_sq(&self) -> f64 {
        (PI / (self.l * self.l)).powf(self.x0.len() as f64 / 2.0)
    }

    pub fn field(&self, grid: GridSpec) -> Result<SpectralField> {
        if grid.dim() != self.x0.len() {
            return Err(Error::GridMismatch(format!(
                "probe dimension {}, grid dimension {}",
                self.x0.len(),
                grid.dim()
            )));
        }
        SpectralField::from_continuous_transform(grid, |xi| self.transform(xi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityRow {
    pub x0: Vec<f64>,
    /// `‖U(T,0)g_l‖²`.
    pub delta_l: f64,
    /// `Σ w_m ‖U(T,t_m)g_l‖²` over `ω(t_m) ∩ B(x₀, r)`.
    pub window_energy: f64,
    /// Same sum over `|x - x₀| > r`.
    pub tail_energy: f64,
    /// Same sum over the whole box.
    pub total_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub l: f64,
    pub r: f64,
    pub rows: Vec<NecessityRow>,
    /// `max |δ_l(x₀) - δ_l(x₀')| / δ_l` over the schedule.
    pub delta_spread: f64,
    pub window_decreasing: bool,
    /// Last window energy over the first.
    pub window_ratio: f64,
}

impl NecessityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x0,delta_l,window_energy,tail_energy,total_energy\n");
        for row in &self.rows {
            let x0: Vec<String> = row.x0.iter().map(f64::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                x0.join(" "),
                row.delta_l,
                row.window_energy,
                row.tail_energy,
                row.total_energy
            ));
        }
        out
    }
}

/// Propagates `g_l` centred at each scheduled `x₀` and splits the observed
/// energy into the part inside `B(x₀, r)` and the tail.
pub fn necessity_experiment(
    fam: &SymbolFamily,
    sup: &MovingSupport,
    grid: GridSpec,
    l: f64,
    r: f64,
    centers: &[Vec<f64>],
    time_grid: &TimeGrid,
) -> Result<NecessityReport> {
    if centers.is_empty() {
        return Err(Error::InvalidArgument("empty centre schedule".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius r = {r} must be positive")));
    }
    if fam.dim() != grid.dim() || sup.dim != grid.dim() {
        return Err(Error::GridMismatch("family, support and grid dimensions differ".into()));
    }
    let big_t = fam.horizon();
    let u0 = fam.slice(0.0, 0)?;
    let nodes: Vec<(f64, SymbolSlice, Vec<f64>)> = time_grid
        .nodes
        .iter()
        .zip(&time_grid.weights)
        .map(|(&t, &w)| {
            if !(0.0..big_t).contains(&t) {
                return Err(Error::InvalidArgument(format!("time node {t} outside [0, T)")));
            }
            Ok((w, fam.slice(t, 0)?, sup.mask(t, &grid)?))
        })
        .collect::<Result<_>>()?;
    let coords = grid.coordinates();
    let dim = grid.dim();
    let rows = centers
        .iter()
        .map(|x0| -> Result<NecessityRow> {
            let g = GaussianProbe::new(x0.clone(), l)?.field(grid)?;
            let delta_l = spectral_field::apply_slice(&u0, &g).norm_sq();
            let ball: Vec<bool> = coords
                .chunks(dim)
                .map(|x| x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r * r)
                .collect();
            let parts: Vec<[f64; 3]> = nodes
                .par_iter()
                .map(|(w, slice, mask)| {
                    let ug = spectral_field::apply_slice(slice, &g);
                    let vol = grid.cell_volume();
                    let mut acc = [0.0; 3];
                    for ((v, &inside), &m) in ug.values().iter().zip(&ball).zip(mask) {
                        let e = v.norm_sqr();
                        acc[2] += e;
                        if inside {
                            acc[0] += e * m;
                        } else {
                            acc[1] += e;
                        }
                    }
                    acc.map(|a| a * vol * w)
                })
                .collect();
            let sum = |i: usize| parts.iter().map(|p| p[i]).sum::<f64>();
            Ok(NecessityRow {
                x0: x0.clone(),
                delta_l,
                window_energy: sum(0),
                tail_energy: sum(1),
                total_energy: sum(2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let d0 = rows[0].delta_l;
    let delta_spread = rows.iter().map(|row| (row.delta_l - d0).abs() / d0).fold(0.0, f64::max);
    let window_decreasing = rows.windows(2).all(|p| p[1].window_energy <= p[0].window_energy);
    let first = rows[0].window_energy;
    let last = rows[rows.len() - 1].window_energy;
    Ok(NecessityReport {
        l,
        r,
        rows,
        delta_spread,
        window_decreasing,
        window_ratio: if first > 0.0 { last / first } else { 0.0 },
    })
}

/// Partitions of `m` as multiplicity vectors `l` with `Σ (j+1) l[j] = m`.
pub fn partitions(m: usize) -> Result<Vec<Vec<u32>>> {
    if m > MAX_PARTITION_ORDER {
        return Err(Error::PartitionOverflow(m));
    }
    fn rec(rest: usize, part: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if part == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let max = rest / part;
        for count in 0..=max {
            cur[part - 1] = count as u32;
            rec(rest - count * part, part - 1, cur, out);
        }
        cur[part - 1] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    rec(m, m, &mut cur, &mut out);
    Ok(out)
}

fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::from(1), |acc, j| acc * j)
}

/// `Σ_{l₁+2l₂+…+m l_m = m} a^{l₁+…+l_m} / (1^{l₁} l₁! ⋯ m^{l_m} l_m!)`
/// by full enumeration.
pub fn faa_di_bruno_sum(m: usize, a: &BigRational) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::InvalidArgument("order m must be at least 1".into()));
    }
    let mut total = BigRational::from_integer(0.into());
    for l in partitions(m)? {
        let parts: u32 = l.iter().sum();
        let mut den = BigInt::from(1);
        for (j, &lj) in l.iter().enumerate() {
            den *= BigInt::from(j + 1).pow(lj) * factorial(lj);
        }
        total += num_traits::pow(a.clone(), parts as usize) / BigRational::from_integer(den);
    }
    Ok(total)
}

/// `(1/m!) ∏_{j<m} (a + j)`.
pub fn rising_factorial_ratio(m: usize, a: &BigRational) -> BigRational {
    let mut acc = BigRational::from_integer(1.into());
    for j in 0..m {
        acc *= a + BigRational::from_integer(j.into());
    }
    acc / BigRational::from_integer(factorial(m as u32))
}

/// `∂ᵐ e^{f}` from `e^f` and `inner[j-1] = ∂ʲ f` via the explicit
/// partition expansion `m! Σ ∏_j (∂ʲf / j!)^{l_j} / l_j!`.
pub fn faa_di_bruno_expansion(m: usize, e0: f64, inner: &[f64]) -> Result<f64> {
    if inner.len() < m {
        return Err(Error::DerivOrderUnavailable {
            requested: m,
            available: inner.len(),
        });
    }
    if m == 0 {
        return Ok(e0);
    }
    let m_fact: f64 = (1..=m).map(|k| k as f64).product();
    let mut fact = vec![1.0f64; m + 1];
    for k in 1..=m {
        fact[k] = fact[k - 1] * k as f64;
    }
    let mut acc = 0.0;
    for l in partitions(m)? {
        let mut term = 1.0;
        for (j, &lj) in l.iter().enumerate() {
            if lj > 0 {
                term *= (inner[j] / fact[j + 1]).powi(lj as i32) / fact[lj as usize];
            }
        }
        acc += term;
    }
    Ok(e0 * m_fact * acc)
}

/// Partition-expansion value of `∂ₜᵐ e^{-A_t(ξ)}`, independent of the
/// recurrence used by the symbol engine.
pub fn multiplier_derivative_oracle(fam: &SymbolFamily, t: f64, xi: &[f64], m: usize) -> Result<f64> {
    let v = symbol_engine::eval_symbol(fam, t, xi, m)?;
    let inner: Vec<f64> = v.time_derivs.iter().map(|d| -d).collect();
    faa_di_bruno_expansion(m, (-v.a).exp(), &inner)
}

/// All multi-indices of length `n` with `|α| ≤ max`, ordered by `|α|`.
pub fn multi_indices(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=max {
        let mut cur = vec![0usize; n];
        fn rec(pos: usize, rest: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if pos + 1 == cur.len() {
                cur[pos] = rest;
                out.push(cur.clone());
                return;
            }
            for k in (0..=rest).rev() {
                cur[pos] = k;
                rec(pos + 1, rest - k, cur, out);
            }
        }
        rec(0, total, &mut cur, &mut out);
    }
    out
}

fn alpha_factorial(alpha: &[usize]) -> f64 {
    alpha
        .iter()
        .map(|&a| (1..=a).map(|k| k as f64).product::<f64>())
        .product()
}

fn fact_f64(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinRow {
    pub t: f64,
    pub m: usize,
    pub alpha: Vec<usize>,
    /// `‖∂ₜᵐ∂ˣ^α U(T,t)g‖`.
    pub norm: f64,
    /// `norm (T-t)^{k(2m+|α|)/2} / (m! √α! ‖g‖)`.
    pub ratio: f64,
    /// `sup_ξ |ξ^α ∂ₜᵐ e^{-A_t(ξ)}|`, the operator norm on `L²`.
    pub op_norm: f64,
    pub op_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinAudit {
    pub k: f64,
    pub rows: Vec<BernsteinRow>,
    /// `max ρ^{1/(m+|α|)}` over the data rows with `m + |α| ≥ 1`.
    pub c0_hat: f64,
    /// Same for the operator-norm rows; bounds every datum.
    pub c0_op: f64,
    /// `max_{m,α} e(m,α)/(2m+|α|)`, where `op_norm ∝ (T-t)^{-e}` is fitted
    /// over the schedule.
    pub slope: f64,
    pub slope_rel_err: f64,
    /// `ρ(t,0,0) ≤ 1` on every row.
    pub contraction_holds: bool,
}

impl BernsteinAudit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,m,alpha,norm,ratio,op_norm,op_ratio\n");
        for r in &self.rows {
            let a: Vec<String> = r.alpha.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t,
                r.m,
                a.join(" "),
                r.norm,
                r.ratio,
                r.op_norm,
                r.op_ratio
            ));
        }
        out
    }
}

/// `sup_ξ |ξ^α ∂ₜᵐ e^{-A}|`: radial scan plus golden refinement per
/// direction, then a compass search over directions.
pub fn operator_norm(slice: &SymbolSlice, dim: usize, m: usize, alpha: &[usize]) -> f64 {
    let h = |xi: &[f64]| -> f64 {
        let mono: f64 = xi.iter().zip(alpha).map(|(x, &a)| x.powi(a as i32)).product();
        (mono * slice.multiplier_derivative(xi, m)).abs()
    };
    let radial = |u: &DVector<f64>| -> f64 {
        let at = |s: f64| {
            let r = s.exp();
            let xi: Vec<f64> = u.iter().map(|v| v * r).collect();
            h(&xi)
        };
        let (lo, hi, steps) = (-8.0f64, 18.0f64, 260);
        let ds = (hi - lo) / steps as f64;
        let mut best = (0, at(lo));
        for i in 1..=steps {
            let v = at(lo + i as f64 * ds);
            if v > best.1 {
                best = (i, v);
            }
        }
        let mut a = lo + (best.0 as f64 - 1.0) * ds;
        let mut b = lo + (best.0 as f64 + 1.0) * ds;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if at(c) > at(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best.1.max(at(0.5 * (a + b)))
    };
    if alpha.iter().sum::<usize>() == 0 && m == 0 {
        // e^{-A} ≤ 1 with equality at ξ = 0
        return 1.0;
    }
    let samples = if dim == 1 { 2 } else { 400 * 10usize.pow(dim as u32 - 2) };
    let (neg, _) = sphere::minimize_on_sphere(&|u: &DVector<f64>| -radial(u), dim, samples);
    -neg
}

/// Audits `ρ(t,m,α)` on the schedule. `k` defaults to the exponent
/// measured by [`symbol_engine::ellipticity_probe`].
pub fn bernstein_audit(
    fam: &SymbolFamily,
    g: &SpectralField,
    t_schedule: &[f64],
    m_max: usize,
    alpha_max: usize,
    k: Option<f64>,
) -> Result<BernsteinAudit> {
    if m_max > MAX_AUDIT_ORDER || alpha_max > MAX_AUDIT_ORDER {
        return Err(Error::InvalidArgument(format!(
            "derivative orders are capped at {MAX_AUDIT_ORDER}"
        )));
    }
    if fam.max_symbol_order() < m_max {
        return Err(Error::DerivOrderUnavailable {
            requested: m_max,
            available: fam.max_symbol_order(),
        });
    }
    let big_t = fam.horizon();
    if t_schedule.is_empty() || t_schedule.iter().any(|&t| !(0.0..big_t).contains(&t)) {
        return Err(Error::InvalidArgument(
            "time schedule must be a nonempty subset of [0, T)".into(),
        ));
    }
    let k = match k {
        Some(k) => k,
        None => symbol_engine::ellipticity_probe(fam, 24, 200)?.k_hat,
    };
    let dim = fam.dim();
    let g_norm = g.norm();
    let alphas = multi_indices(dim, alpha_max);
    let mut jobs = Vec::new();
    for &t in t_schedule {
        for m in 0..=m_max {
            for alpha in &alphas {
                jobs.push((t, m, alpha.clone()));
            }
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(t, m, alpha)| -> Result<BernsteinRow> {
            let tau = big_t - t;
            let order = 2 * m + alpha.iter().sum::<usize>();
            let scale = tau.powf(k * order as f64 / 2.0) / (fact_f64(m) * alpha_factorial(&alpha).sqrt());
            let norm = spectral_field::derivative_field(fam, t, g, m, &alpha)?.norm();
            let slice = fam.slice(t, m)?;
            let op_norm = operator_norm(&slice, dim, m, &alpha);
            Ok(BernsteinRow {
                t,
                m,
                alpha,
                norm,
                ratio: if g_norm > 0.0 { norm * scale / g_norm } else { 0.0 },
                op_norm,
                op_ratio: op_norm * scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let root = |r: &BernsteinRow, v: f64| {
        let p = r.m + r.alpha.iter().sum::<usize>();
        if p == 0 {
            None
        } else {
            Some(v.powf(1.0 / p as f64))
        }
    };
    let c0_hat = rows.iter().filter_map(|r| root(r, r.ratio)).fold(0.0, f64::max);
    let c0_op = rows.iter().filter_map(|r| root(r, r.op_ratio)).fold(0.0, f64::max);
    let contraction_holds = rows
        .iter()
        .filter(|r| r.m == 0 && r.alpha.iter().all(|&a| a == 0))
        .all(|r| r.ratio <= 1.0 + 1e-12);

    let mut slope: f64 = 0.0;
    if t_schedule.len() >= 2 {
        for m in 0..=m_max {
            for alpha in &alphas {
                let order = 2 * m + alpha.iter().sum::<usize>();
                if order == 0 {
                    continue;
                }
                let sel: Vec<&BernsteinRow> = rows
                    .iter()
                    .filter(|r| r.m == m && &r.alpha == alpha && r.op_norm > 0.0)
                    .collect();
                if sel.len() < 2 {
                    continue;
                }
                let x: Vec<f64> = sel.iter().map(|r| -(big_t - r.t).ln()).collect();
                let y: Vec<f64> = sel.iter().map(|r| r.op_norm.ln()).collect();
                let (e, _, _) = quadrature::linear_fit(&x, &y);
                slope = slope.max(e / order as f64);
            }
        }
    }
    let slope_rel_err = (slope - k / 2.0).abs() / (k / 2.0);
    Ok(BernsteinAudit {
        k,
        rows,
        c0_hat,
        c0_op,
        slope,
        slope_rel_err,
        contraction_holds,
    })
}

/// Constants entering the good-cylinder inequality, all measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderConstants {
    pub c0: f64,
    /// `max(1,T) ŝ_T / ĉ_T`.
    pub c_t: f64,
    pub k: f64,
}

impl CylinderConstants {
    /// `c₀` from the operator-norm audit, `(ĉ_T, k)` from the ellipticity
    /// probe and `ŝ_T` from the analyticity estimate; `ŝ_T` is floored at 1
    /// and `ĉ_T` capped at 1.
    pub fn measure(fam: &SymbolFamily, audit: &BernsteinAudit) -> Result<Self> {
        let ell = symbol_engine::ellipticity_probe(fam, 24, 200)?;
        let s_t = symbol_engine::estimate_s_t(fam, 16)?.unwrap_or(1.0).max(1.0);
        let c_t = ell.c_hat.min(1.0);
        Ok(Self {
            c0: audit.c0_op.max(1.0),
            c_t: fam.horizon().max(1.0) * s_t / c_t,
            k: audit.k,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderClass {
    Good,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderReport {
    pub beta: Vec<f64>,
    pub classification: CylinderClass,
    /// `(m₀, α₀)` attaining the largest violation.
    pub witness: Option<(usize, Vec<usize>)>,
    pub bound_ratio: f64,
    /// `‖U(T,·)g‖²_{L²(C(β))}`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderSplit {
    pub t_gamma: f64,
    pub epsilon: f64,
    pub m_cap: usize,
    pub alpha_cap: usize,
    pub constants: CylinderConstants,
    pub reports: Vec<CylinderReport>,
    pub good_energy: f64,
    pub bad_energy: f64,
    pub g_norm_sq: f64,
    /// `Σ_bad ≤ ε ‖g‖²`.
    pub bad_bound_holds: bool,
}

/// Classifies `C(β) = [0, T_γ] × B(β, r)` by testing the good-cylinder
/// inequality for `m ≤ m_cap`, `|α| ≤ alpha_cap`.
#[allow(clippy::too_many_arguments)]
pub fn classify_cylinders(
    fam: &SymbolFamily,
    gamma: f64,
    epsilon: f64,
    g: &SpectralField,
    r: f64,
    betas: &[Vec<f64>],
    m_cap: usize,
    alpha_cap: usize,
    constants: &CylinderConstants,
    time_nodes: usize,
) -> Result<CylinderSplit> {
    if m_cap > MAX_CYLINDER_ORDER || alpha_cap > MAX_CYLINDER_ORDER {
        return Err(Error::InvalidArgument(format!(
            "caps must be at most {MAX_CYLINDER_ORDER}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) || !(epsilon > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidArgument("need γ ∈ (0,1], ε > 0, r > 0".into()));
    }
    let grid = *g.grid();
    let dim = grid.dim();
    let big_t = fam.horizon();
    let t_gamma = crate::support_geometry::t_gamma(big_t, gamma);
    let tg = TimeGrid::with_nodes(0.0, t_gamma, time_nodes)?;
    let alphas = multi_indices(dim, alpha_cap);
    let combos: Vec<(usize, Vec<usize>)> = (0..=m_cap)
        .flat_map(|m| alphas.iter().map(move |a| (m, a.clone())))
        .collect();
    let coords = grid.coordinates();
    let balls: Vec<Vec<f64>> = betas
        .iter()
        .map(|b| {
            coords
                .chunks(dim)
                .map(|x| {
                    let d2: f64 = x.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum();
                    if d2 <= r * r {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    // norms[c][b] = ‖∂ₜᵐ∂^α U(T,·)g‖²_{L²(C(β_b))}
    let norms: Vec<Vec<f64>> = combos
        .par_iter()
        .map(|(m, alpha)| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; betas.len()];
            for (&t, &w) in tg.nodes.iter().zip(&tg.weights) {
                let d = spectral_field::derivative_field(fam, t, g, *m, alpha)?;
                for (a, ball) in acc.iter_mut().zip(&balls) {
                    *a += w * d.weighted_norm_sq(ball);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let base_idx = combos
        .iter()
        .position(|(m, a)| *m == 0 && a.iter().all(|&v| v == 0))
        .expect("m = 0, α = 0 is always tested");
    let pref = 3.0 * (2.0 * t_gamma).sqrt() / epsilon.sqrt();
    let growth = 4.0 * constants.c_t / (gamma * big_t);
    let bound = |m: usize, alpha: &[usize]| {
        let p = alpha.iter().sum::<usize>();
        pref * constants.c0.powi((m + p) as i32)
            * growth.powf(constants.k * (2 * m + p) as f64 / 2.0)
            * fact_f64(m)
            * fact_f64(p).sqrt()
    };
    let mut reports = Vec::with_capacity(betas.len());
    let (mut good_energy, mut bad_energy) = (0.0, 0.0);
    for (b, beta) in betas.iter().enumerate() {
        let base = norms[base_idx][b].sqrt();
        let mut worst = (0.0f64, None);
        for (c, (m, alpha)) in combos.iter().enumerate() {
            let lhs = norms[c][b].sqrt();
            let rhs = bound(*m, alpha) * base;
            let ratio = if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if ratio > worst.0 {
                worst = (ratio, Some((*m, alpha.clone())));
            }
        }
        let classification = if worst.0 > 1.0 {
            CylinderClass::Bad
        } else {
            CylinderClass::Good
        };
        let energy = base * base;
        match classification {
            CylinderClass::Good => good_energy += energy,
            CylinderClass::Bad => bad_energy += energy,
        }
        reports.push(CylinderReport {
            beta: beta.clone(),
            classification,
            witness: (classification == CylinderClass::Bad)
                .then(|| worst.1.clone())
                .flatten(),
            bound_ratio: worst.0,
            energy,
        });
    }
    let g_norm_sq = g.norm_sq();
    Ok(CylinderSplit {
        t_gamma,
        epsilon,
        m_cap,
        alpha_cap,
        constants: constants.clone(),
        reports,
        good_energy,
        bad_energy,
        g_norm_sq,
        bad_bound_holds: bad_energy <= epsilon * g_norm_sq,
    })
}

/// Cylinder centres `β ∈ rℤⁿ` with `|β_i| ≤ extent`.
pub fn cylinder_lattice(dim: usize, r: f64, extent: f64) -> Vec<Vec<f64>> {
    let k = (extent / r).floor() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * r).collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}
