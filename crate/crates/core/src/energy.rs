//! Pekar energy, Euler-Lagrange residual and the constrained minimizer.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anisotropy::{CanonicalPotential, DielectricSpec};
use crate::convolution::{outer_shell_fraction, Convolver, KernelScheme, SHELL_FRACTION_LIMIT};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::spectral::{dot, SpectralOps};

/// Energy below which a state counts as bound.
pub const BINDING_THRESHOLD: f64 = -1e-8;

/// Relative energy band treated as round-off; inside it a step is accepted
/// when it lowers the residual.
pub const ENERGY_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Init {
    Gaussian { sigma: f64 },
    File { path: PathBuf },
    /// Uniform noise in `[0.5, 1.5)` times a Gaussian envelope of width
    /// `sigma` centred at a random offset of up to two cells.
    RandomPositive { seed: u64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Initial step in the preconditioned metric.
    pub dt0: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: 1.0, dt0: 0.5, tol_residual: 1e-8, max_iter: 3000, init: Init::Gaussian { sigma: 3.0 } }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Invalid(format!("solver {what}")));
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if !(self.dt0 > 0.0) {
            return bad("dt0 must be positive");
        }
        if !(self.tol_residual >= 1e-10) {
            return bad("tol_residual must be at least 1e-10");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        match &self.init {
            Init::Gaussian { sigma } | Init::RandomPositive { sigma, .. } if !(*sigma > 0.0) => bad("init sigma must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub psi: Field,
    pub lambda: f64,
    pub energy: f64,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `1/2 ||grad psi||^2`.
    pub kinetic: f64,
    /// `<|psi|^2, V * |psi|^2>`.
    pub interaction: f64,
}

impl MinimizeResult {
    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.residual })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub interaction: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub mu_lambda: f64,
    pub minus_three_lambda3_i1: f64,
    pub three_halves_grad: f64,
    pub three_quarters_interaction: f64,
    pub max_relative_deviation: f64,
}

/// Energy functional and solver bound to one potential and grid.
#[derive(Debug)]
pub struct Problem {
    pot: CanonicalPotential,
    conv: Convolver,
    ops: SpectralOps,
}

struct State {
    psi: Vec<f64>,
    phi: Vec<f64>,
    lap: Vec<f64>,
    parts: EnergyParts,
}

impl Problem {
    pub fn new(pot: &CanonicalPotential, grid: &Grid3) -> Self {
        Self::with_scheme(pot, grid, KernelScheme::default())
    }

    pub fn with_scheme(pot: &CanonicalPotential, grid: &Grid3, scheme: KernelScheme) -> Self {
        Self { pot: *pot, conv: Convolver::new(pot, grid, scheme), ops: SpectralOps::new(grid) }
    }

    pub fn potential(&self) -> &CanonicalPotential {
        &self.pot
    }

    pub fn grid(&self) -> &Grid3 {
        self.ops.grid()
    }

    pub fn convolver(&self) -> &Convolver {
        &self.conv
    }

    pub fn spectral(&self) -> &SpectralOps {
        &self.ops
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.grid().same_as(self.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid(), self.grid())))
        }
    }

    fn state(&self, psi: Vec<f64>) -> State {
        let rho: Vec<f64> = psi.iter().map(|v| v * v).collect();
        let phi = self.conv.apply_unchecked(&rho);
        let lap = self.ops.neg_laplacian(&psi);
        let vol = self.grid().cell_volume();
        let kinetic = 0.5 * dot(&psi, &lap) * vol;
        let interaction = dot(&rho, &phi) * vol;
        State { psi, phi, lap, parts: EnergyParts { kinetic, interaction, energy: kinetic - 0.5 * interaction } }
    }

    fn residual_norm(&self, st: &State, lambda: f64) -> f64 {
        let mu = (st.parts.interaction - st.parts.kinetic) / lambda;
        let sq = st
            .psi
            .par_chunks(8192)
            .zip(st.lap.par_chunks(8192))
            .zip(st.phi.par_chunks(8192))
            .map(|((p, l), f)| (0..p.len()).map(|i| (0.5 * l[i] - f[i] * p[i] + mu * p[i]).powi(2)).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum::<f64>();
        (sq * self.grid().cell_volume()).sqrt()
    }

    pub fn energy_parts(&self, psi: &Field) -> Result<EnergyParts> {
        self.check_grid(psi)?;
        let rho: Vec<f64> = psi.values().iter().map(|v| v * v).collect();
        self.conv.apply(&rho)?;
        Ok(self.state(psi.values().to_vec()).parts)
    }

    /// `E = 1/2 ||grad psi||^2 - 1/2 <|psi|^2, V * |psi|^2>`.
    pub fn energy(&self, psi: &Field) -> Result<f64> {
        Ok(self.energy_parts(psi)?.energy)
    }

    /// `-1/2 Lap psi - (V * |psi|^2) psi + mu psi`.
    pub fn el_residual(&self, psi: &Field, mu: f64) -> Result<Field> {
        self.check_grid(psi)?;
        let rho: Vec<f64> = psi.values().iter().map(|v| v * v).collect();
        let phi = self.conv.apply(&rho)?;
        let lap = self.ops.neg_laplacian(psi.values());
        let r = (0..lap.len()).map(|i| 0.5 * lap[i] - phi[i] * psi.values()[i] + mu * psi.values()[i]).collect();
        psi.with_values(r)
    }

    /// Multiplier from the Rayleigh quotient `-<psi, H psi> / lambda`.
    pub fn rayleigh_mu(&self, psi: &Field) -> Result<f64> {
        let p = self.energy_parts(psi)?;
        Ok((p.interaction - p.kinetic) / psi.mass())
    }

    pub fn initial_field(&self, cfg: &SolverConfig) -> Result<Field> {
        let grid = *self.grid();
        let field = match &cfg.init {
            Init::Gaussian { sigma } => {
                Field::from_fn(grid, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (2.0 * sigma * sigma)).exp())?
            }
            Init::File { path } => {
                let f = Field::load(path)?;
                self.check_grid(&f)?;
                f.with_values(f.values().iter().map(|v| v.abs()).collect())?
            }
            Init::RandomPositive { seed, sigma } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let h = grid.spacing();
                let c = [0, 1, 2].map(|a| rng.gen_range(-2.0..2.0) * h[a]);
                let values = (0..grid.len())
                    .map(|i| {
                        let p = grid.point(i);
                        let r2: f64 = (0..3).map(|a| (p[a] - c[a]).powi(2)).sum();
                        rng.gen_range(0.5..1.5) * (-r2 / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                Field::new(grid, values)?
            }
        };
        field.normalized_to(cfg.lambda)
    }

    pub fn minimize(&self, cfg: &SolverConfig) -> Result<MinimizeResult> {
        cfg.validate()?;
        let start = self.initial_field(cfg)?;
        self.minimize_from(start, cfg)
    }

    /// Preconditioned nonlinear conjugate gradient on the mass sphere.
    ///
    /// The start is made nonnegative; each trial point is `psi + tau d`
    /// rescaled to mass `lambda`. Trials that raise the energy halve `tau`,
    /// accepted ones grow it by 1.1.
    /// The preconditioner is `(|k|^2/2 + mu)^-1`.
    pub fn minimize_from(&self, start: Field, cfg: &SolverConfig) -> Result<MinimizeResult> {
        cfg.validate()?;
        self.check_grid(&start)?;
        let lambda = cfg.lambda;
        let vol = self.grid().cell_volume();
        let n = self.grid().len();
        let psi0: Vec<f64> = start.normalized_to(lambda)?.values().iter().map(|v| v.abs()).collect();
        let mut st = self.state(psi0);
        let mut tau = cfg.dt0;
        let mut best_energy = st.parts.energy;
        let mut prev_g: Vec<f64> = Vec::new();
        let mut prev_p: Vec<f64> = Vec::new();
        let mut dir: Vec<f64> = vec![0.0; n];
        let mut residual = f64::INFINITY;
        let mut mu = 0.0;
        let mut iterations = 0;
        let mut converged = false;
        let mut stalls = 0;
        let kernel_vanishes = self.conv.apply_unchecked(&vec![1.0; n]).iter().all(|&v| v.abs() < 1e-300);

        while iterations < cfg.max_iter {
            mu = (st.parts.interaction - st.parts.kinetic) / lambda;
            let g: Vec<f64> = (0..n).map(|i| 0.5 * st.lap[i] - st.phi[i] * st.psi[i] + mu * st.psi[i]).collect();
            residual = (dot(&g, &g) * vol).sqrt();
            if residual <= cfg.tol_residual * lambda {
                converged = true;
                break;
            }
            if kernel_vanishes && st.parts.energy >= 0.0 {
                // V = 0: every state has E = ||grad psi||^2 / 2 >= 0
                return Err(Error::NoBinding { energy: st.parts.energy });
            }
            iterations += 1;

            let shift = mu.max(0.1 * st.parts.kinetic / lambda).max(1e-12);
            let mut p = self.ops.apply_multiplier(&g, |a, b, c| 1.0 / (0.5 * (a * a + b * b + c * c) + shift));
            let along = dot(&st.psi, &p) / dot(&st.psi, &st.psi);
            p.iter_mut().zip(&st.psi).for_each(|(x, s)| *x -= along * s);

            let beta = if prev_g.is_empty() {
                0.0
            } else {
                let num: f64 = (0..n).map(|i| g[i] * (p[i] - prev_p[i])).sum();
                let den = dot(&prev_g, &prev_p);
                if den > 0.0 {
                    (num / den).max(0.0)
                } else {
                    0.0
                }
            };
            for i in 0..n {
                dir[i] = -p[i] + beta * dir[i];
            }
            let along = dot(&st.psi, &dir) / dot(&st.psi, &st.psi);
            dir.iter_mut().zip(&st.psi).for_each(|(x, s)| *x -= along * s);
            if dot(&g, &dir) >= 0.0 {
                for i in 0..n {
                    dir[i] = -p[i];
                }
            }

            let slack = 1e-14 * st.parts.energy.abs() + 1e-300;
            let mut accepted = None;
            for attempt in 0..40 {
                let trial: Vec<f64> = (0..n).map(|i| st.psi[i] + tau * dir[i]).collect();
                let m = dot(&trial, &trial) * vol;
                let s = (lambda / m).sqrt();
                let trial: Vec<f64> = trial.into_iter().map(|v| v * s).collect();
                let cand = self.state(trial);
                let within_noise = cand.parts.energy <= st.parts.energy + ENERGY_NOISE * st.parts.energy.abs()
                    && self.residual_norm(&cand, lambda) < residual;
                if cand.parts.energy <= st.parts.energy + slack || within_noise {
                    accepted = Some(cand);
                    if attempt == 0 {
                        tau = (tau * 1.1).min(4.0);
                    }
                    break;
                }
                tau *= 0.5;
            }
            match accepted {
                Some(cand) => {
                    stalls = 0;
                    st = cand;
                    best_energy = best_energy.min(st.parts.energy);
                    prev_g = g;
                    prev_p = p;
                }
                None => {
                    // restart from steepest descent with a fresh step
                    stalls += 1;
                    prev_g.clear();
                    prev_p.clear();
                    dir.iter_mut().for_each(|v| *v = 0.0);
                    tau = cfg.dt0;
                    if stalls >= 3 {
                        break;
                    }
                }
            }
        }

        if best_energy >= BINDING_THRESHOLD && st.parts.energy >= BINDING_THRESHOLD {
            return Err(Error::NoBinding { energy: st.parts.energy });
        }
        let rho: Vec<f64> = st.psi.iter().map(|v| v * v).collect();
        let fraction = outer_shell_fraction(self.grid(), &rho);
        if fraction > SHELL_FRACTION_LIMIT {
            return Err(Error::GridTooSmall { fraction });
        }
        Ok(MinimizeResult {
            psi: Field::new(*self.grid(), st.psi)?,
            lambda,
            energy: st.parts.energy,
            mu,
            residual,
            iterations,
            converged,
            kinetic: st.parts.kinetic,
            interaction: st.parts.interaction,
        })
    }
}

pub fn energy(pot: &CanonicalPotential, psi: &Field) -> Result<f64> {
    Problem::new(pot, psi.grid()).energy(psi)
}

pub fn el_residual(pot: &CanonicalPotential, psi: &Field, mu: f64) -> Result<Field> {
    Problem::new(pot, psi.grid()).el_residual(psi, mu)
}

pub fn minimize(pot: &CanonicalPotential, grid: &Grid3, cfg: &SolverConfig) -> Result<MinimizeResult> {
    Problem::new(pot, grid).minimize(cfg)
}

pub fn virial_report(res: &MinimizeResult) -> Result<VirialReport> {
    res.require_converged()?;
    let l = res.lambda;
    let i1 = res.energy / l.powi(3);
    let q = [res.mu * l, -3.0 * l.powi(3) * i1, 3.0 * res.kinetic, 0.75 * res.interaction];
    let mut dev = 0.0_f64;
    for a in 0..4 {
        for b in a + 1..4 {
            dev = dev.max((q[a] - q[b]).abs() / q[a].abs().max(q[b].abs()));
        }
    }
    Ok(VirialReport {
        mu_lambda: q[0],
        minus_three_lambda3_i1: q[1],
        three_halves_grad: q[2],
        three_quarters_interaction: q[3],
        max_relative_deviation: dev,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityPoint {
    pub t: f64,
    pub energy: f64,
    pub mu: f64,
    /// `|mu - 3 lambda^2 |I(1)|| / mu`.
    pub scaling_defect: f64,
    pub residual: f64,
    /// Largest pairwise deviation of the virial quantities.
    pub virial: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityTable {
    pub points: Vec<ContinuityPoint>,
    /// `max |I(t_k+1) - I(t_k)| / ||M(t_k+1) - M(t_k)||`.
    pub lipschitz: f64,
}

/// Minimizes along a matrix path, warm-starting each point from the last.
pub fn continuity_probe(
    path: &[(f64, DielectricSpec)],
    grid: &Grid3,
    cfg: &SolverConfig,
) -> Result<ContinuityTable> {
    let mut points = Vec::with_capacity(path.len());
    let mut previous: Option<Field> = None;
    let mut lipschitz = 0.0_f64;
    for (k, (t, spec)) in path.iter().enumerate() {
        let pot = crate::anisotropy::canonicalize(spec)?;
        let problem = Problem::new(&pot, grid);
        let res = match previous.take() {
            Some(f) => problem.minimize_from(f, cfg)?,
            None => problem.minimize(cfg)?,
        };
        res.require_converged()?;
        let l = cfg.lambda;
        let predicted = 3.0 * l * l * (res.energy / l.powi(3)).abs();
        points.push(ContinuityPoint {
            t: *t,
            energy: res.energy,
            mu: res.mu,
            scaling_defect: (res.mu - predicted).abs() / res.mu,
            residual: res.residual,
            virial: virial_report(&res)?.max_relative_deviation,
        });
        if k > 0 {
            let dm = spec.distance(&path[k - 1].1);
            if dm > 0.0 {
                lipschitz = lipschitz.max((points[k].energy - points[k - 1].energy).abs() / dm);
            }
        }
        previous = Some(res.psi);
    }
    Ok(ContinuityTable { points, lipschitz })
}

/// Unit-normalized solution `Q(x) = c psi(alpha x)` of
/// `-Lap Q + Q - (V * Q^2) Q = 0`, with `alpha = (2 mu)^-1/2` and
/// `c = 1 / (sqrt(2) mu)`. The samples are reused on the grid shrunk by `alpha`.
pub fn to_unit_normalization(res: &MinimizeResult) -> Result<(Field, f64, f64)> {
    if !(res.mu > 0.0) {
        return Err(Error::Invalid(format!("multiplier {} must be positive", res.mu)));
    }
    let alpha = 1.0 / (2.0 * res.mu).sqrt();
    let c = 1.0 / (2f64.sqrt() * res.mu);
    let grid = res.psi.grid().scaled(1.0 / alpha);
    let q = Field::new(grid, res.psi.values().iter().map(|v| c * v).collect())?;
    Ok((q, alpha, c))
}

/// The mass-scaling family `t^2 psi(t x)`, sampled on the grid shrunk by `t`.
pub fn mass_scaling(psi: &Field, t: f64) -> Result<Field> {
    Field::new(psi.grid().scaled(1.0 / t), psi.values().iter().map(|v| t * t * v).collect())
}
