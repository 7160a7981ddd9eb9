//! Nonlinear interference from the integral Gaussian-noise model over
//! ISRS-shaped power profiles, and the per-channel SNR / Shannon throughput of
//! a multi-span link.
//!
//! For channel `i` at `f_i` the NLI power spectral density is
//!
//! ```text
//! G_NLI(f_i) = 16/27 · γ(f_i)² ∬ G(f₁) G(f₂) G(f₁+f₂−f_i) |K(f₁,f₂)|² df₁ df₂
//! K = ∫₀ᴸ sqrt(ρ(z,f₁) ρ(z,f₂) ρ(z,f₁+f₂−f_i) / ρ(z,f_i)) e^{−jφz} dz
//! φ = 4π² (f₁−f_i)(f₂−f_i) [β₂(f_i) + π β₃(f_i)(f₁+f₂−2f_i)]
//! ```
//!
//! with ρ the normalised span power profile. The z integral is exact for a
//! piecewise-exponential ρ on the (strided) solver grid. The frequency plane
//! is cut into channel-pair cells; each cell uses the ρ of its representative
//! lattice frequencies.
//!
//! |K|² is a narrow Lorentzian around the phase-matching lines φ = 0 (width
//! of order α/|∂φ/∂f₁|, often well under 1 GHz), so uniformly spaced nodes
//! badly undersample it. The default [`QuadratureRule::Graded`] rule maps the
//! inner coordinate through x = r + s·tan θ around the nearest root r of φ,
//! which flattens the Lorentzian, and grades the outer coordinate of the
//! self-channel cell with an asinh map. [`QuadratureRule::Midpoint`] is the
//! plain q×q midpoint rule; with q = 1 it is the classic FWM lattice sum.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplifier::AmplifierModel;
use crate::error::{Error, Result};
use crate::fibre::FibreProfile;
use crate::isrs::{PowerProfile, SpanModel};
use crate::quadrature::gauss_legendre;
use crate::spectrum::{BandName, ChannelGrid};
use crate::units::{db_to_linear, linear_to_db, mw_to_dbm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliMode {
    /// Every channel pair (SPM, XPM and non-degenerate FWM).
    FullIntegral,
    /// Only cells where f₁ or f₂ lies in the channel under test.
    XpmPlusSpm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Graded,
    Midpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NliConfig {
    pub mode: NliMode,
    /// Base node count per channel and dimension.
    pub quad_points: usize,
    pub rule: QuadratureRule,
    /// Use every `z_stride`-th point of the span solver grid for the z integral.
    pub z_stride: usize,
}

impl Default for NliConfig {
    fn default() -> Self {
        NliConfig {
            mode: NliMode::FullIntegral,
            quad_points: 4,
            rule: QuadratureRule::Graded,
            z_stride: 10,
        }
    }
}

impl NliConfig {
    /// Cheap objective for optimiser inner loops.
    pub fn reduced() -> Self {
        NliConfig {
            mode: NliMode::XpmPlusSpm,
            quad_points: 1,
            rule: QuadratureRule::Graded,
            z_stride: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quad_points == 0 || self.quad_points > 32 {
            return Err(Error::config(format!(
                "quad_points must be in 1..=32, got {}",
                self.quad_points
            )));
        }
        if self.z_stride == 0 {
            return Err(Error::config("z_stride must be >= 1"));
        }
        Ok(())
    }
}

/// Precomputed per-channel data for NLI evaluation on one span profile.
pub struct NliEngine {
    centers: Vec<f64>,
    /// Launch PSD in W/THz.
    psd: Vec<f64>,
    gamma: Vec<f64>,
    beta2: Vec<f64>,
    beta3: Vec<f64>,
    /// ln ρ, `[channel * (nseg + 1) + s]`.
    ln_rho: Vec<f64>,
    /// Per channel: max and min of ln ρ, max |d ln ρ/dz| and the total
    /// variation of d ln ρ/dz over the segments.
    ln_max: Vec<f64>,
    ln_min: Vec<f64>,
    slope_max: Vec<f64>,
    slope_tv: Vec<f64>,
    nseg: usize,
    h: f64,
    length: f64,
    bandwidth: f64,
}

/// Relative bound on the dropped interior kernel terms for endpoint cells.
const ENDPOINT_TOL: f64 = 1e-3;

struct CellProfile {
    g: Vec<f64>,
    ln_g: Vec<f64>,
    a: Vec<f64>,
    a_eff: f64,
    /// Only the first and last segment are filled; interior kernel terms are
    /// below the endpoint tolerance.
    endpoint: bool,
}

impl CellProfile {
    fn new(nseg: usize) -> Self {
        CellProfile {
            g: vec![0.0; nseg + 1],
            ln_g: vec![0.0; nseg + 1],
            a: vec![0.0; nseg],
            a_eff: 0.0,
            endpoint: false,
        }
    }
}

/// One window-limited stretch of the inner coordinate with a constant G(f₃).
#[derive(Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    psd3: f64,
}

impl NliEngine {
    pub fn new(grid: &ChannelGrid, fibre: &FibreProfile, profile: &PowerProfile, z_stride: usize) -> Result<Self> {
        let n = grid.len();
        if profile.channels() != n {
            return Err(Error::domain(format!(
                "profile has {} channels, grid {n}",
                profile.channels()
            )));
        }
        let steps = profile.steps();
        if z_stride == 0 || !steps.is_multiple_of(z_stride) {
            return Err(Error::config(format!(
                "z_stride {z_stride} does not divide the {steps} solver steps"
            )));
        }
        let nseg = steps / z_stride;
        let bandwidth = grid.symbol_rate_thz();
        let mut centers = Vec::with_capacity(n);
        let mut psd = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        let mut beta2 = Vec::with_capacity(n);
        let mut beta3 = Vec::with_capacity(n);
        for (i, ch) in grid.channels().iter().enumerate() {
            centers.push(ch.center_thz);
            psd.push(profile.launch()[i] * 1e-3 / bandwidth);
            gamma.push(fibre.gamma.at(ch.wavelength_nm()));
            let (b2, b3) = fibre.dispersion.beta2_beta3_at(ch.center_thz)?;
            beta2.push(b2);
            beta3.push(b3);
        }
        let mut ln_rho = vec![0.0; n * (nseg + 1)];
        for c in 0..n {
            let p0 = profile.powers[0][c];
            for s in 0..=nseg {
                ln_rho[c * (nseg + 1) + s] = (profile.powers[s * z_stride][c] / p0).ln();
            }
        }
        let length = profile.z_km[steps];
        let h = length / nseg as f64;
        let (mut ln_max, mut ln_min, mut slope_max, mut slope_tv) = (vec![], vec![], vec![], vec![]);
        for row in ln_rho.chunks(nseg + 1) {
            ln_max.push(row.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            ln_min.push(row.iter().cloned().fold(f64::INFINITY, f64::min));
            let slopes: Vec<f64> = row.windows(2).map(|w| (w[1] - w[0]) / h).collect();
            slope_max.push(slopes.iter().fold(0.0f64, |m, a| m.max(a.abs())));
            slope_tv.push(slopes.windows(2).map(|w| (w[1] - w[0]).abs()).sum());
        }
        Ok(NliEngine {
            centers,
            psd,
            gamma,
            beta2,
            beta3,
            ln_rho,
            ln_max,
            ln_min,
            slope_max,
            slope_tv,
            nseg,
            h,
            length,
            bandwidth,
        })
    }

    pub fn channels(&self) -> usize {
        self.centers.len()
    }

    fn ln_rho_row(&self, c: usize) -> &[f64] {
        &self.ln_rho[c * (self.nseg + 1)..(c + 1) * (self.nseg + 1)]
    }

    /// Bracketing centres and weight for log-linear interpolation of ρ at `f`.
    fn bracket(&self, f: f64) -> (usize, usize, f64) {
        let n = self.centers.len();
        let k = self.centers.partition_point(|&c| c <= f);
        if k == 0 {
            return (0, 0, 0.0);
        }
        if k >= n {
            return (n - 1, n - 1, 0.0);
        }
        let (c0, c1) = (self.centers[k - 1], self.centers[k]);
        (k - 1, k, (f - c0) / (c1 - c0))
    }

    /// True if some channel window intersects [lo, hi].
    fn any_window_in(&self, lo: f64, hi: f64) -> bool {
        let half = 0.5 * self.bandwidth;
        let k = self.centers.partition_point(|&c| c + half < lo);
        k < self.centers.len() && self.centers[k] - half <= hi
    }

    fn psd_at(&self, f: f64) -> f64 {
        let half = 0.5 * self.bandwidth;
        let k = self.centers.partition_point(|&c| c < f);
        for cand in [k.wrapping_sub(1), k] {
            if let Some(&c) = self.centers.get(cand) {
                if (c - f).abs() <= half {
                    return self.psd[cand];
                }
            }
        }
        0.0
    }

    fn fill_cell_profile(&self, i: usize, j: usize, k: usize, out: &mut CellProfile) {
        let f3 = self.centers[j] + self.centers[k] - self.centers[i];
        let (l0, l1, t) = self.bracket(f3);
        let (ri, rj, rk) = (self.ln_rho_row(i), self.ln_rho_row(j), self.ln_rho_row(k));
        let (r0, r1) = (self.ln_rho_row(l0), self.ln_rho_row(l1));
        for s in 0..=self.nseg {
            let l3 = (1.0 - t) * r0[s] + t * r1[s];
            let lg = 0.5 * (rj[s] + rk[s] + l3 - ri[s]);
            out.ln_g[s] = lg;
            out.g[s] = lg.exp();
        }
        for s in 0..self.nseg {
            out.a[s] = (out.ln_g[s + 1] - out.ln_g[s]) / self.h;
        }
        let decay = (out.ln_g[0] - out.ln_g[self.nseg]) / self.length;
        out.a_eff = decay.max(1.0 / self.length);
    }

    /// Fills only what the endpoint kernel needs: g and a at both ends.
    fn fill_endpoint_profile(&self, i: usize, j: usize, k: usize, out: &mut CellProfile) {
        let f3 = self.centers[j] + self.centers[k] - self.centers[i];
        let (l0, l1, t) = self.bracket(f3);
        let (ri, rj, rk) = (self.ln_rho_row(i), self.ln_rho_row(j), self.ln_rho_row(k));
        let (r0, r1) = (self.ln_rho_row(l0), self.ln_rho_row(l1));
        let lg = |s: usize| 0.5 * (rj[s] + rk[s] + (1.0 - t) * r0[s] + t * r1[s] - ri[s]);
        let last = self.nseg;
        let (g0, g1, gm, gl) = (lg(0), lg(1), lg(last - 1), lg(last));
        out.ln_g[0] = g0;
        out.ln_g[last] = gl;
        out.g[0] = g0.exp();
        out.g[last] = gl.exp();
        out.a[0] = (g1 - g0) / self.h;
        out.a[last - 1] = (gl - gm) / self.h;
        out.a_eff = ((g0 - gl) / self.length).max(1.0 / self.length);
        out.endpoint = true;
    }

    /// Lower bound of |φ| over the cell of channels (j, k).
    fn phase_floor(&self, i: usize, j: usize, k: usize) -> f64 {
        let half = 0.5 * self.bandwidth;
        let fi = self.centers[i];
        let abs_min = |lo: f64, hi: f64| {
            if lo <= 0.0 && hi >= 0.0 {
                0.0
            } else {
                lo.abs().min(hi.abs())
            }
        };
        let (xlo, ylo) = (self.centers[j] - fi - half, self.centers[k] - fi - half);
        let (xhi, yhi) = (xlo + self.bandwidth, ylo + self.bandwidth);
        let d = |u: f64| self.beta2[i] + PI * self.beta3[i] * u;
        let disp = abs_min(d(xlo + ylo).min(d(xhi + yhi)), d(xlo + ylo).max(d(xhi + yhi)));
        4.0 * PI * PI * abs_min(xlo, xhi) * abs_min(ylo, yhi) * disp
    }

    /// True when the interior kernel terms of cell (j, k) are provably below
    /// `ENDPOINT_TOL` relative to the endpoint terms.
    fn endpoint_ok(&self, i: usize, j: usize, k: usize) -> bool {
        if self.nseg < 2 {
            return false;
        }
        let phi = self.phase_floor(i, j, k);
        if !(phi > 0.0) {
            return false;
        }
        let f3 = self.centers[j] + self.centers[k] - self.centers[i];
        let (l0, l1, _) = self.bracket(f3);
        let g_max =
            (0.5 * (self.ln_max[j] + self.ln_max[k] + self.ln_max[l0].max(self.ln_max[l1]) - self.ln_min[i])).exp();
        let tv =
            0.5 * (self.slope_tv[j] + self.slope_tv[k] + self.slope_tv[l0].max(self.slope_tv[l1]) + self.slope_tv[i]);
        let a_max = 0.5
            * (self.slope_max[j] + self.slope_max[k] + self.slope_max[l0].max(self.slope_max[l1]) + self.slope_max[i]);
        // interior terms ≤ g_max·TV/φ², endpoint term ≥ 1/(φ·(1 + a/φ))
        g_max * tv * (1.0 + a_max / phi) <= ENDPOINT_TOL * phi
    }

    /// Phase mismatch φ for offsets x = f₁ − f_i, y = f₂ − f_i (rad/km).
    #[inline]
    fn phase(&self, i: usize, x: f64, y: f64) -> f64 {
        4.0 * PI * PI * x * y * (self.beta2[i] + PI * self.beta3[i] * (x + y))
    }

    #[inline]
    fn dphase_dx(&self, i: usize, x: f64, y: f64) -> f64 {
        4.0 * PI * PI * y * (self.beta2[i] + PI * self.beta3[i] * (2.0 * x + y))
    }

    /// Inner-coordinate pieces of constant G(f₃) for a given outer offset y.
    fn pieces(&self, fi: f64, xlo: f64, xhi: f64, y: f64, out: &mut Vec<Piece>) {
        out.clear();
        let half = 0.5 * self.bandwidth;
        let (f3lo, f3hi) = (fi + xlo + y, fi + xhi + y);
        let mut k = self.centers.partition_point(|&c| c + half < f3lo);
        while k < self.centers.len() && self.centers[k] - half < f3hi {
            let c = self.centers[k];
            let lo = xlo.max(c - half - fi - y);
            let hi = xhi.min(c + half - fi - y);
            if hi > lo {
                out.push(Piece {
                    lo,
                    hi,
                    psd3: self.psd[k],
                });
            }
            k += 1;
        }
    }

    /// ∫ |K(φ(x, y))|² dx over [lo, hi] with the tan map around a root of φ.
    #[allow(clippy::too_many_arguments)]
    fn inner_integral(
        &self,
        i: usize,
        cell: &CellProfile,
        y: f64,
        lo: f64,
        hi: f64,
        n_min: usize,
        n_sing: usize,
    ) -> f64 {
        let mut roots = [0.0f64; 2];
        let mut nroots = 1;
        if self.beta3[i] != 0.0 {
            let u0 = -self.beta2[i] / (PI * self.beta3[i]);
            if u0.is_finite() {
                roots[1] = u0 - y;
                nroots = 2;
            }
        }
        let mut inside = [0.0f64; 2];
        let mut n_in = 0;
        for &r in &roots[..nroots] {
            if r > lo && r < hi {
                inside[n_in] = r;
                n_in += 1;
            }
        }
        if n_in == 2 {
            let (r0, r1) = (inside[0].min(inside[1]), inside[0].max(inside[1]));
            let mid = 0.5 * (r0 + r1);
            return self.mapped_segment(i, cell, y, lo, mid, r0, n_min, n_sing)
                + self.mapped_segment(i, cell, y, mid, hi, r1, n_min, n_sing);
        }
        let r = if n_in == 1 {
            inside[0]
        } else {
            let dist = |r: f64| if r < lo { lo - r } else { r - hi };
            if nroots == 2 && dist(roots[1]) < dist(roots[0]) {
                roots[1]
            } else {
                roots[0]
            }
        };
        self.mapped_segment(i, cell, y, lo, hi, r, n_min, n_sing)
    }

    /// Endpoint cells have no phase-matching line inside, so |K|² is smooth
    /// apart from G(f₃) jumps: plain Gauss–Legendre on each piece.
    fn smooth_cell(&self, i: usize, xlo: f64, ylo: f64, q: usize, n_inner: usize, cell: &CellProfile) -> f64 {
        let fi = self.centers[i];
        let half = 0.5 * self.bandwidth;
        let xhi = xlo + self.bandwidth;
        let (go, gi) = (gauss_legendre(q), gauss_legendre(n_inner));
        let ymid = ylo + half;
        let mut total = 0.0;
        for (ty, wy) in go.nodes.iter().zip(&go.weights) {
            let y = ymid + half * ty;
            let (f3lo, f3hi) = (fi + xlo + y, fi + xhi + y);
            let mut k = self.centers.partition_point(|&c| c + half < f3lo);
            let mut sy = 0.0;
            while k < self.centers.len() && self.centers[k] - half < f3hi {
                let c = self.centers[k];
                let lo = xlo.max(c - half - fi - y);
                let hi = xhi.min(c + half - fi - y);
                if hi > lo {
                    let (m, hw) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    let mut sp = 0.0;
                    for (tx, wx) in gi.nodes.iter().zip(&gi.weights) {
                        sp += wx * endpoint_kernel_sq(cell, self.h, self.phase(i, m + hw * tx, y));
                    }
                    sy += self.psd[k] * hw * sp;
                }
                k += 1;
            }
            total += wy * half * sy;
        }
        total
    }

    #[allow(clippy::too_many_arguments)]
    fn mapped_segment(
        &self,
        i: usize,
        cell: &CellProfile,
        y: f64,
        lo: f64,
        hi: f64,
        root: f64,
        n_min: usize,
        n_sing: usize,
    ) -> f64 {
        let slope = self.dphase_dx(i, root, y).abs();
        let s = cell.a_eff / slope;
        let mut acc = 0.0;
        if !(s.is_finite() && s > 0.0) {
            let gl = gauss_legendre(n_min);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                let x = mid + half * t;
                acc += w * half * kernel_sq(cell, self.h, self.phase(i, x, y));
            }
            return acc;
        }
        let th0 = ((lo - root) / s).atan();
        let th1 = ((hi - root) / s).atan();
        let n = n_min.max(((n_sing as f64) * (th1 - th0) / PI).ceil() as usize);
        let gl = gauss_legendre(n);
        let (mid, half) = (0.5 * (th0 + th1), 0.5 * (th1 - th0));
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            let th = mid + half * t;
            let tn = th.tan();
            let x = root + s * tn;
            let jac = s * (1.0 + tn * tn);
            acc += w * half * jac * kernel_sq(cell, self.h, self.phase(i, x, y));
        }
        acc
    }

    /// ∬ G(f₃)|K|² dx dy over the cell of channels (j, k), graded rule.
    fn graded_cell(&self, i: usize, j: usize, k: usize, q: usize, cell: &CellProfile, pieces: &mut Vec<Piece>) -> f64 {
        // keep the channel under test on the inner axis when there is one
        let (xj, yk) = if k == i && j != i { (k, j) } else { (j, k) };
        let fi = self.centers[i];
        let half = 0.5 * self.bandwidth;
        let xlo = self.centers[xj] - fi - half;
        let xhi = xlo + self.bandwidth;
        let ylo = self.centers[yk] - fi - half;
        let yhi = ylo + self.bandwidth;
        let n_min = (q / 2).max(1);
        if cell.endpoint {
            return self.smooth_cell(i, xlo, ylo, q, n_min, cell);
        }
        let n_sing = 2 * q;

        let mut total = 0.0;
        let mut inner_at = |y: f64, wy: f64, pieces: &mut Vec<Piece>| {
            self.pieces(fi, xlo, xhi, y, pieces);
            let mut s = 0.0;
            for p in pieces.iter() {
                s += p.psd3 * self.inner_integral(i, cell, y, p.lo, p.hi, n_min, n_sing);
            }
            total += wy * s;
        };

        if yk == i {
            // self-channel cell: outer offset graded towards y = 0 with an
            // asinh map whose knee is where the Lorentzian fills half a channel
            let curv = 4.0 * PI * PI * self.beta2[i].abs() * half;
            let yc = cell.a_eff / curv;
            let gl = gauss_legendre(n_sing);
            for (a, b) in [(ylo, 0.0), (0.0, yhi)] {
                if yc.is_finite() && yc > 0.0 {
                    let (t0, t1) = ((a / yc).asinh(), (b / yc).asinh());
                    let (mid, hw) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
                    for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                        let tt = mid + hw * t;
                        let y = yc * tt.sinh();
                        inner_at(y, w * hw * yc * tt.cosh(), pieces);
                    }
                } else {
                    let (mid, hw) = (0.5 * (a + b), 0.5 * (b - a));
                    for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                        inner_at(mid + hw * t, w * hw, pieces);
                    }
                }
            }
        } else {
            let gl = gauss_legendre(q);
            let (mid, hw) = (0.5 * (ylo + yhi), 0.5 * (yhi - ylo));
            for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                inner_at(mid + hw * t, w * hw, pieces);
            }
        }
        total
    }

    /// Plain q×q midpoint rule over the cell.
    fn midpoint_cell(&self, i: usize, j: usize, k: usize, q: usize, cell: &CellProfile) -> f64 {
        let fi = self.centers[i];
        let half = 0.5 * self.bandwidth;
        let d = self.bandwidth / q as f64;
        let x0 = self.centers[j] - fi - half;
        let y0 = self.centers[k] - fi - half;
        let mut total = 0.0;
        for a in 0..q {
            let x = x0 + (a as f64 + 0.5) * d;
            for b in 0..q {
                let y = y0 + (b as f64 + 0.5) * d;
                let g3 = self.psd_at(fi + x + y);
                if g3 != 0.0 {
                    total += g3 * kernel_sq(cell, self.h, self.phase(i, x, y));
                }
            }
        }
        total * d * d
    }

    /// NLI power (mW) falling into channel `i`'s symbol-rate bandwidth.
    pub fn channel_nli_mw(&self, i: usize, cfg: &NliConfig) -> f64 {
        let n = self.centers.len();
        let q = cfg.quad_points.max(1);
        let mut cell = CellProfile::new(self.nseg);
        let mut pieces = Vec::with_capacity(4);
        let b = self.bandwidth;
        let mut acc = 0.0;
        let mut visit = |j: usize, k: usize, acc: &mut f64| {
            let f3 = self.centers[j] + self.centers[k] - self.centers[i];
            if !self.any_window_in(f3 - b, f3 + b) {
                return;
            }
            if self.endpoint_ok(i, j, k) {
                self.fill_endpoint_profile(i, j, k, &mut cell);
            } else {
                cell.endpoint = false;
                self.fill_cell_profile(i, j, k, &mut cell);
            }
            let v = match cfg.rule {
                QuadratureRule::Graded => self.graded_cell(i, j, k, q, &cell, &mut pieces),
                QuadratureRule::Midpoint => self.midpoint_cell(i, j, k, q, &cell),
            };
            let weight = if j == k { 1.0 } else { 2.0 };
            *acc += weight * self.psd[j] * self.psd[k] * v;
        };
        match cfg.mode {
            NliMode::FullIntegral => {
                for j in 0..n {
                    for k in j..n {
                        visit(j, k, &mut acc);
                    }
                }
            }
            NliMode::XpmPlusSpm => {
                for k in 0..n {
                    let (a, bb) = if k < i { (k, i) } else { (i, k) };
                    visit(a, bb, &mut acc);
                }
            }
        }
        let g = self.gamma[i];
        16.0 / 27.0 * g * g * acc * self.bandwidth * 1e3
    }

    /// NLI for every channel, in channel order.
    pub fn all_nli_mw(&self, cfg: &NliConfig) -> Vec<f64> {
        (0..self.centers.len())
            .into_par_iter()
            .map(|i| self.channel_nli_mw(i, cfg))
            .collect()
    }
}

/// |∫ g(z) e^{−jφz} dz|² for a piecewise-exponential g on a uniform grid.
#[inline]
fn kernel_sq(cell: &CellProfile, h: f64, phi: f64) -> f64 {
    let g = &cell.g;
    let a = &cell.a;
    if cell.endpoint {
        return endpoint_kernel_sq(cell, h, phi);
    }
    let (sin, cos) = (phi * h).sin_cos();
    let (wr, wi) = (cos, -sin);
    let (mut pr, mut pi) = (1.0f64, 0.0f64);
    let (mut kr, mut ki) = (0.0f64, 0.0f64);
    let phi2 = phi * phi;
    for s in 0..a.len() {
        let qr = pr * wr - pi * wi;
        let qi = pr * wi + pi * wr;
        let ar = a[s];
        let ur = ar * h;
        let ui = -phi * h;
        if ur * ur + ui * ui < 1e-8 {
            // (e^u − 1)/(a − jφ) = h(1 + u/2 + u²/6) for tiny u
            let tr = 1.0 + 0.5 * ur + (ur * ur - ui * ui) / 6.0;
            let ti = 0.5 * ui + (2.0 * ur * ui) / 6.0;
            let c = g[s] * h;
            kr += c * (pr * tr - pi * ti);
            ki += c * (pr * ti + pi * tr);
        } else {
            let nr = g[s + 1] * qr - g[s] * pr;
            let ni = g[s + 1] * qi - g[s] * pi;
            let inv = 1.0 / (ar * ar + phi2);
            kr += (nr * ar - ni * phi) * inv;
            ki += (ni * ar + nr * phi) * inv;
        }
        pr = qr;
        pi = qi;
    }
    kr * kr + ki * ki
}

/// Kernel from the first and last segment terms only:
/// K ≈ g_L e^{−jφL}/(a_L − jφ) − g_0/(a_0 − jφ).
#[inline]
fn endpoint_kernel_sq(cell: &CellProfile, h: f64, phi: f64) -> f64 {
    let last = cell.a.len();
    let (g0, gl) = (cell.g[0], cell.g[last]);
    let (a0, al) = (cell.a[0], cell.a[last - 1]);
    let (sin, cos) = (phi * h * last as f64).sin_cos();
    let (pr, pi) = (cos, -sin);
    // 1/(a − jφ) = (a + jφ)/(a² + φ²)
    let d0 = 1.0 / (a0 * a0 + phi * phi);
    let dl = 1.0 / (al * al + phi * phi);
    let (er, ei) = (al * dl * gl, phi * dl * gl);
    let kr = pr * er - pi * ei - g0 * a0 * d0;
    let ki = pr * ei + pi * er - g0 * phi * d0;
    kr * kr + ki * ki
}

/// NLI power (mW) in channel `i` for a span profile.
pub fn nli_power(
    grid: &ChannelGrid,
    profile: &PowerProfile,
    fibre: &FibreProfile,
    cfg: &NliConfig,
    channel: usize,
) -> Result<f64> {
    cfg.validate()?;
    if channel >= grid.len() {
        return Err(Error::domain(format!("channel {channel} out of range")));
    }
    Ok(NliEngine::new(grid, fibre, profile, cfg.z_stride)?.channel_nli_mw(channel, cfg))
}

/// NLI power (mW) for every channel.
pub fn nli_powers(
    grid: &ChannelGrid,
    profile: &PowerProfile,
    fibre: &FibreProfile,
    cfg: &NliConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok(NliEngine::new(grid, fibre, profile, cfg.z_stride)?.all_nli_mw(cfg))
}

/// Per-channel signal and noise budget at the receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSnr {
    pub index: usize,
    pub band: BandName,
    pub frequency_thz: f64,
    /// Launch (= signal) power, mW.
    pub p_signal: f64,
    pub p_received: f64,
    pub gain_db: f64,
    /// Accumulated over all spans, mW.
    pub p_ase: f64,
    pub p_nli: f64,
    pub snr_link: f64,
    pub snr_total: f64,
    pub capacity_gbps: f64,
}

/// Combines link and transceiver SNR: 1/snr = 1/snr_link + 1/snr_trx.
pub fn combine_snr(snr_link: f64, snr_trx: f64) -> f64 {
    1.0 / (1.0 / snr_link + 1.0 / snr_trx)
}

/// Dual-polarisation Shannon capacity in Gb/s.
pub fn shannon_capacity_gbps(symbol_rate_gbd: f64, snr: f64) -> f64 {
    2.0 * symbol_rate_gbd * (1.0 + snr).log2()
}

/// Sum of channel capacities in Tb/s.
pub fn throughput(snrs: &[ChannelSnr]) -> f64 {
    snrs.iter().map(|s| s.capacity_gbps).sum::<f64>() * 1e-3
}

/// A multi-span link of identical spans with per-band amplifiers that restore
/// each channel to its launch power.
pub struct LinkModel {
    pub grid: ChannelGrid,
    pub fibre: FibreProfile,
    /// Amplifier serving each channel, by channel index.
    amp_for_channel: Vec<usize>,
    pub amps: Vec<AmplifierModel>,
    pub n_spans: usize,
    pub snr_trx: f64,
    pub z_steps: usize,
    /// Drop ASE and NLI entirely (transceiver-limited bound).
    pub noise_free: bool,
    span: SpanModel,
}

/// Outcome of one link evaluation.
#[derive(Clone, Debug)]
pub struct LinkEvaluation {
    pub profile: PowerProfile,
    pub snrs: Vec<ChannelSnr>,
}

impl LinkEvaluation {
    pub fn throughput_tbps(&self) -> f64 {
        throughput(&self.snrs)
    }
}

impl LinkModel {
    pub fn new(
        grid: ChannelGrid,
        fibre: FibreProfile,
        amps: &[AmplifierModel],
        n_spans: usize,
        snr_trx_db: f64,
        z_steps: usize,
    ) -> Result<Self> {
        if n_spans == 0 {
            return Err(Error::config("need at least one span"));
        }
        let mut used = Vec::new();
        let mut amp_for_channel = Vec::with_capacity(grid.len());
        for ch in grid.channels() {
            let pos = amps
                .iter()
                .position(|a| a.band == ch.band)
                .ok_or_else(|| Error::config(format!("no amplifier configured for band {}", ch.band)))?;
            amp_for_channel.push(pos);
            if !used.contains(&pos) {
                used.push(pos);
            }
        }
        let span = SpanModel::new(&grid, &fibre)?;
        Ok(LinkModel {
            grid,
            fibre,
            amp_for_channel,
            amps: amps.to_vec(),
            n_spans,
            snr_trx: db_to_linear(snr_trx_db),
            z_steps,
            noise_free: false,
            span,
        })
    }

    pub fn span_model(&self) -> &SpanModel {
        &self.span
    }

    pub fn amplifier_for(&self, channel: usize) -> &AmplifierModel {
        &self.amps[self.amp_for_channel[channel]]
    }

    pub fn propagate(&self, launch_mw: &[f64], z_steps: usize) -> Result<PowerProfile> {
        self.span.propagate(launch_mw, z_steps)
    }

    /// Solves one span and builds the per-channel SNR of the whole link.
    pub fn evaluate(&self, launch_mw: &[f64], nli: &NliConfig) -> Result<LinkEvaluation> {
        self.evaluate_with_steps(launch_mw, nli, self.z_steps)
    }

    pub fn evaluate_with_steps(&self, launch_mw: &[f64], nli: &NliConfig, z_steps: usize) -> Result<LinkEvaluation> {
        nli.validate()?;
        let profile = self.span.propagate(launch_mw, z_steps)?;
        let received = profile.received();
        let mut gains = Vec::with_capacity(received.len());
        for (i, (&pl, &pr)) in launch_mw.iter().zip(received).enumerate() {
            let g = pl / pr;
            if g < 1.0 {
                return Err(Error::config(format!(
                    "channel {i} ({:.3} THz) gains {:.2} dB over the span; net ISRS gain beyond span loss is not supported",
                    self.grid.channels()[i].center_thz,
                    -linear_to_db(g)
                )));
            }
            gains.push(g);
        }
        let nli_mw = if self.noise_free {
            vec![0.0; launch_mw.len()]
        } else {
            NliEngine::new(&self.grid, &self.fibre, &profile, nli.z_stride)?.all_nli_mw(nli)
        };
        let spans = self.n_spans as f64;
        let mut snrs = Vec::with_capacity(launch_mw.len());
        for (i, ch) in self.grid.channels().iter().enumerate() {
            let (p_ase, p_nli, snr_link) = if self.noise_free {
                (0.0, 0.0, f64::INFINITY)
            } else {
                let ase = self.amplifier_for(i).ase_power(ch, gains[i])? * spans;
                let nl = nli_mw[i] * spans;
                (ase, nl, launch_mw[i] / (ase + nl))
            };
            let snr_total = combine_snr(snr_link, self.snr_trx);
            snrs.push(ChannelSnr {
                index: i,
                band: ch.band,
                frequency_thz: ch.center_thz,
                p_signal: launch_mw[i],
                p_received: received[i],
                gain_db: linear_to_db(gains[i]),
                p_ase,
                p_nli,
                snr_link,
                snr_total,
                capacity_gbps: shannon_capacity_gbps(ch.symbol_rate_gbd, snr_total),
            });
        }
        Ok(LinkEvaluation { profile, snrs })
    }
}

/// One-shot link SNR for a launch vector.
pub fn link_snr(
    grid: &ChannelGrid,
    launch_mw: &[f64],
    fibre: &FibreProfile,
    amps: &[AmplifierModel],
    n_spans: usize,
    cfg: &NliConfig,
) -> Result<Vec<ChannelSnr>> {
    let model = LinkModel::new(
        grid.clone(),
        fibre.clone(),
        amps,
        n_spans,
        20.0,
        crate::isrs::DEFAULT_Z_STEPS,
    )?;
    Ok(model.evaluate(launch_mw, cfg)?.snrs)
}

/// Per-channel CSV rows for the `solve` output.
pub fn snr_csv_row(s: &ChannelSnr) -> String {
    format!(
        "{:.6},{:.6},{:.6},{:.6},{:.6e},{:.6e},{:.6},{:.6}",
        s.frequency_thz,
        mw_to_dbm(s.p_signal),
        mw_to_dbm(s.p_received),
        s.gain_db,
        s.p_ase,
        s.p_nli,
        linear_to_db(s.snr_total),
        s.capacity_gbps
    )
}

pub const SNR_CSV_HEADER: &str = "frequency_thz,launch_dbm,received_dbm,gain_db,p_ase_mw,p_nli_mw,snr_db,capacity_gbps";
