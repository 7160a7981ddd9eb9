//! Single-span power evolution under fibre loss and inter-channel stimulated
//! Raman scattering.
//!
//! Solves dP_i/dz = −α_i·P_i + P_i·Σ_j c(f_j → f_i)·P_j with classical RK4 on
//! a uniform z grid. A step that would make any power non-positive is redone
//! as two half steps.

use crate::error::{Error, Result};
use crate::fibre::FibreProfile;
use crate::spectrum::ChannelGrid;

/// Minimum number of z steps per span.
pub const MIN_Z_STEPS: usize = 10;
/// Default number of z steps per span.
pub const DEFAULT_Z_STEPS: usize = 200;
const MAX_HALVINGS: u32 = 12;

/// Power of every channel at every grid position along one span.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile {
    pub z_km: Vec<f64>,
    /// `powers[z][channel]` in mW.
    pub powers: Vec<Vec<f64>>,
}

impl PowerProfile {
    pub fn steps(&self) -> usize {
        self.z_km.len() - 1
    }

    pub fn channels(&self) -> usize {
        self.powers.first().map(Vec::len).unwrap_or(0)
    }

    pub fn launch(&self) -> &[f64] {
        &self.powers[0]
    }

    /// Powers at the span end.
    pub fn received(&self) -> &[f64] {
        self.powers.last().expect("profile has at least one row")
    }

    /// P(z)/P(0) for one channel.
    pub fn normalised(&self, channel: usize) -> Vec<f64> {
        let p0 = self.powers[0][channel];
        self.powers.iter().map(|row| row[channel] / p0).collect()
    }

    /// Span-end power ratio (dB) of the lowest- minus the highest-frequency
    /// channel. Positive when the low frequencies come out stronger.
    pub fn end_tilt_db(&self) -> f64 {
        let last = self.received();
        let first = &self.powers[0];
        let n = last.len();
        let g = |i: usize| 10.0 * (last[i] / first[i]).log10();
        g(0) - g(n - 1)
    }
}

pub fn received_powers(profile: &PowerProfile) -> Vec<f64> {
    profile.received().to_vec()
}

/// Loss and Raman coupling for one grid on one fibre, reusable across many
/// launch conditions.
#[derive(Clone, Debug)]
pub struct SpanModel {
    freqs: Vec<f64>,
    /// Power attenuation per channel, 1/km.
    alpha: Vec<f64>,
    /// Row-major `coupling[i * n + j]` in 1/(mW·km).
    coupling: Vec<f64>,
    length_km: f64,
    raman_active: bool,
}

impl SpanModel {
    pub fn new(grid: &ChannelGrid, fibre: &FibreProfile) -> Result<Self> {
        if !(fibre.span_length_km > 0.0) {
            return Err(Error::config("span length must be positive"));
        }
        let freqs = grid.frequencies();
        let alpha = grid
            .channels()
            .iter()
            .map(|c| fibre.attenuation.np_per_km(c.wavelength_nm()))
            .collect::<Result<Vec<_>>>()?;
        let n = freqs.len();
        let mut coupling = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                coupling[i * n + j] = fibre.raman.coupling(freqs[j], freqs[i]) * 1e-3;
            }
        }
        let raman_active = coupling.iter().any(|&c| c != 0.0);
        Ok(SpanModel {
            freqs,
            alpha,
            coupling,
            length_km: fibre.span_length_km,
            raman_active,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn length_km(&self) -> f64 {
        self.length_km
    }

    fn derivative(&self, p: &[f64], out: &mut [f64]) {
        let n = p.len();
        if !self.raman_active {
            for i in 0..n {
                out[i] = -self.alpha[i] * p[i];
            }
            return;
        }
        for i in 0..n {
            let row = &self.coupling[i * n..(i + 1) * n];
            out[i] = p[i] * (dot(row, p) - self.alpha[i]);
        }
    }

    fn rk4(&self, p: &[f64], h: f64, ws: &mut Workspace, out: &mut [f64]) {
        let n = p.len();
        let Workspace { k1, k2, k3, k4, tmp } = ws;
        self.derivative(p, k1);
        for i in 0..n {
            tmp[i] = p[i] + 0.5 * h * k1[i];
        }
        self.derivative(tmp, k2);
        for i in 0..n {
            tmp[i] = p[i] + 0.5 * h * k2[i];
        }
        self.derivative(tmp, k3);
        for i in 0..n {
            tmp[i] = p[i] + h * k3[i];
        }
        self.derivative(tmp, k4);
        for i in 0..n {
            out[i] = p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Advances `p` by `h`, halving on positivity violations.
    fn advance(&self, p: &mut Vec<f64>, h: f64, depth: u32, ws: &mut Workspace, z: f64, step: usize) -> Result<()> {
        let mut next = vec![0.0; p.len()];
        self.rk4(p, h, ws, &mut next);
        if next.iter().all(|&x| x > 0.0 && x.is_finite()) {
            *p = next;
            return Ok(());
        }
        if depth >= MAX_HALVINGS {
            let bad = next.iter().position(|x| !(*x > 0.0 && x.is_finite())).unwrap_or(0);
            return Err(Error::Numerical {
                z_km: z,
                step,
                h_km: h,
                detail: format!(
                    "channel {bad} at {:.4} THz reached {:e} mW after {depth} halvings",
                    self.freqs[bad], next[bad]
                ),
            });
        }
        self.advance(p, 0.5 * h, depth + 1, ws, z, step)?;
        self.advance(p, 0.5 * h, depth + 1, ws, z + 0.5 * h, step)
    }

    /// Integrates one span from the given launch powers (mW).
    pub fn propagate(&self, launch_mw: &[f64], z_steps: usize) -> Result<PowerProfile> {
        let n = self.freqs.len();
        if launch_mw.len() != n {
            return Err(Error::domain(format!(
                "{} launch powers for {n} channels",
                launch_mw.len()
            )));
        }
        if z_steps < MIN_Z_STEPS {
            return Err(Error::domain(format!(
                "need at least {MIN_Z_STEPS} z steps, got {z_steps}"
            )));
        }
        if let Some(p) = launch_mw.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::domain(format!("launch powers must be positive, got {p} mW")));
        }
        let h = self.length_km / z_steps as f64;
        let mut ws = Workspace::new(n);
        let mut z_km = Vec::with_capacity(z_steps + 1);
        let mut powers = Vec::with_capacity(z_steps + 1);
        let mut p = launch_mw.to_vec();
        z_km.push(0.0);
        powers.push(p.clone());
        for s in 0..z_steps {
            let z = s as f64 * h;
            self.advance(&mut p, h, 0, &mut ws, z, s)?;
            z_km.push(if s + 1 == z_steps {
                self.length_km
            } else {
                (s + 1) as f64 * h
            });
            powers.push(p.clone());
        }
        Ok(PowerProfile { z_km, powers })
    }
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Dot product with four fixed accumulators, so the summation order (and the
/// result) does not depend on the platform.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Convenience wrapper building the span model on the fly.
pub fn propagate_span(
    grid: &ChannelGrid,
    launch_mw: &[f64],
    fibre: &FibreProfile,
    z_steps: usize,
) -> Result<PowerProfile> {
    SpanModel::new(grid, fibre)?.propagate(launch_mw, z_steps)
}
