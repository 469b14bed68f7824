//! Acceptance checks, shared by the test suite and the `verify` command.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anisotropy::{CanonicalPotential, DielectricSpec, Model};
use crate::cylinder::{
    beta, generating_sum, heat_kernel_check, remark_probe, tn_check, vn_scaled, vn_series, CylGrid, CylSolution,
    CylinderScales,
};
use crate::eigen::EigenOptions;
use crate::energy::{continuity_probe, virial_report, Init, MinimizeResult, Problem, SolverConfig};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::linop::{KernelCensus, LinearizedOp};
use crate::oracle::radial_reference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub id: u8,
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
    pub anchor: String,
    pub detail: String,
}

impl Check {
    fn new(id: u8, status: Status, measured: f64, tolerance: f64, detail: String) -> Self {
        let (name, anchor) = CRITERIA[id as usize - 1];
        Self { id, name: name.into(), status, measured, tolerance, anchor: anchor.into(), detail }
    }

    fn judged(id: u8, pass: bool, measured: f64, tolerance: f64, detail: String) -> Self {
        Self::new(id, if pass { Status::Pass } else { Status::Fail }, measured, tolerance, detail)
    }

    fn errored(id: u8, err: &Error) -> Self {
        Self::new(id, Status::Fail, f64::NAN, f64::NAN, format!("error: {err}"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] C{:<2} {:<28} measured {:<11.3e} tol {:<9.1e} {}",
            self.status, self.id, self.name, self.measured, self.tolerance, self.detail
        )
    }
}

/// `(name, anchor)` per criterion.
const CRITERIA: [(&str, &str); 14] = [
    ("oracle-agreement", "radial ground state of the isotropic problem"),
    ("scaling-law", "I(lambda) = lambda^3 I(1) < 0"),
    ("virial-identities", "mu lambda = -3 lambda^3 I(1) = 3/2 |grad psi|^2 = 3/4 <V*psi^2, psi^2>"),
    ("minimizer-symmetry", "Steiner symmetry of minimizers on approved axes"),
    ("kernel-census", "kernel of the linearized operator is spanned by translations"),
    ("sector-structure", "zero modes only in singly-odd sectors and (+,+,+)"),
    ("cylindrical-positivity", "v_n > 0 for the simplified model"),
    ("beta-series", "series expansion of v_n in powers of m-/m+"),
    ("full-model-sign-witnesses", "v_n without sign for n >= 2 in the full model"),
    ("tn-inequality", "T_n < 0 for n >= 2"),
    ("cylindrical-ordering", "lambda_0^1 = 0 < lambda_0^n for n >= 2"),
    ("heat-kernel", "closed-form kernel of exp(t Lap_(n))"),
    ("continuity", "M -> I_M is Lipschitz"),
    ("determinism", "seeded runs and field files reproduce bitwise"),
];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn get(&self, id: u8) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Scaling,
    Virial,
    Symmetry,
    Kernel,
    Cylinder,
    Continuity,
    Persistence,
    All,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Scaling => vec![1, 2],
            Suite::Virial => vec![3],
            Suite::Symmetry => vec![4],
            Suite::Kernel => vec![5, 6],
            Suite::Cylinder => (7..=12).collect(),
            Suite::Continuity => vec![13],
            Suite::Persistence => vec![14],
            Suite::All => (1..=14).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "scaling" => Suite::Scaling,
            "virial" => Suite::Virial,
            "symmetry" => Suite::Symmetry,
            "kernel" => Suite::Kernel,
            "cylinder" => Suite::Cylinder,
            "continuity" => Suite::Continuity,
            "persistence" => Suite::Persistence,
            "all" => Suite::All,
            _ => return Err(Error::Invalid(format!("unknown suite {s:?}"))),
        })
    }
}

/// A potential on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub pot: CanonicalPotential,
    pub grid: Grid3,
}

impl Case {
    pub fn cubic(model: Model, d: [f64; 3], n: usize, half: f64) -> Result<Self> {
        Ok(Self { pot: CanonicalPotential::new(model, d)?, grid: Grid3::cubic(n, half)? })
    }
}

/// Parameters of every check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan {
    pub tol_residual: f64,
    /// `(s, half length)` per isotropic strength.
    pub oracle: Vec<(f64, f64)>,
    pub oracle_sizes: Vec<usize>,
    pub scaling: Case,
    /// Cases with the axes that must be approved and symmetric.
    pub symmetry: Vec<(Case, Vec<usize>)>,
    pub census: Vec<Case>,
    pub census_per_sector: usize,
    pub positivity: Vec<CanonicalPotential>,
    pub positivity_draws: usize,
    pub nmax: u32,
    pub remark: CanonicalPotential,
    pub remark_samples: usize,
    pub cylinder: Case,
    pub cylinder_size: usize,
    pub continuity_grid: Grid3,
    pub continuity_paths: Vec<Vec<[[f64; 3]; 3]>>,
    pub persistence: Case,
    pub seed: u64,
}

impl Plan {
    pub fn acceptance() -> Result<Self> {
        let diag = |a: f64, b: f64, c: f64| [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]];
        Ok(Self {
            tol_residual: 1e-10,
            oracle: vec![(0.3, 46.0), (0.5, 64.0)],
            oracle_sizes: vec![32, 48, 64],
            scaling: Case::cubic(Model::Full, [0.6, 0.6, 0.4], 48, 45.0)?,
            symmetry: vec![
                (Case::cubic(Model::Full, [0.9, 0.9, 0.5], 64, 120.0)?, vec![0, 1]),
                (Case::cubic(Model::Full, [0.6, 0.6, 0.55], 64, 60.0)?, vec![0, 1, 2]),
            ],
            census: vec![
                Case::cubic(Model::Full, [0.52, 0.5, 0.5], 48, 60.0)?,
                Case::cubic(Model::Full, [0.5, 0.5, 0.5], 48, 60.0)?,
            ],
            census_per_sector: 2,
            positivity: vec![
                CanonicalPotential::new(Model::Simplified, [0.6, 0.8, 0.8])?,
                CanonicalPotential::new(Model::Simplified, [0.3, 0.3, 0.9])?,
                CanonicalPotential::new(Model::Simplified, [1.0, 1.0, 1.0])?,
            ],
            positivity_draws: 1000,
            nmax: 12,
            remark: CanonicalPotential::new(Model::Full, [0.6, 0.6, 0.4])?,
            remark_samples: 1000,
            cylinder: Case::cubic(Model::Simplified, [0.6, 0.8, 0.8], 48, 32.0)?,
            cylinder_size: 48,
            continuity_grid: Grid3::cubic(48, 80.0)?,
            continuity_paths: vec![
                vec![diag(0.5, 0.5, 0.5), diag(0.6, 0.6, 0.6)],
                vec![diag(0.6, 0.6, 0.5), [[0.6, 0.1, 0.0], [0.1, 0.6, 0.0], [0.0, 0.0, 0.5]]],
            ],
            persistence: Case::cubic(Model::Full, [0.5, 0.5, 0.5], 32, 48.0)?,
            seed: 20240611,
        })
    }

    /// The acceptance plan with `case` substituted wherever a single potential is examined.
    pub fn for_case(case: Case) -> Result<Self> {
        let mut plan = Self::acceptance()?;
        plan.scaling = case.clone();
        let axes = (0..3).filter(|&k| case.pot.steiner_criteria().axes[k]).collect();
        plan.symmetry = vec![(case.clone(), axes)];
        plan.census = vec![case.clone()];
        if case.pot.model == Model::Simplified && case.pot.cylinder_axis().is_some() {
            plan.positivity = vec![case.pot.clone()];
            plan.cylinder = case.clone();
        }
        if case.pot.model == Model::Full && case.pot.cylinder_axis().is_some() {
            plan.remark = case.pot.clone();
        }
        plan.persistence = case;
        Ok(plan)
    }
}

/// Runs checks and keeps the converged runs they produce for the virial check.
pub struct Verifier {
    plan: Plan,
    virial: Vec<(String, f64)>,
    census: Option<Vec<(Case, KernelCensus)>>,
    progress: Option<Box<dyn FnMut(&Check) + Send>>,
}

pub const VIRIAL_TOLERANCE: f64 = 1e-3;

impl Verifier {
    pub fn new(plan: Plan) -> Self {
        Self { plan, virial: Vec::new(), census: None, progress: None }
    }

    /// Calls `f` as each check completes.
    pub fn on_check(mut self, f: impl FnMut(&Check) + Send + 'static) -> Self {
        self.progress = Some(Box::new(f));
        self
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn run(&mut self, suite: Suite) -> VerificationReport {
        let ids = suite.criteria();
        let mut checks = Vec::with_capacity(ids.len());
        // the virial check covers every run made by the others, so it goes last
        for &id in ids.iter().filter(|&&id| id != 3).chain(ids.iter().filter(|&&id| id == 3)) {
            let c = self.check(id);
            if let Some(f) = self.progress.as_mut() {
                f(&c);
            }
            checks.push(c);
        }
        checks.sort_by_key(|c| c.id);
        VerificationReport { checks }
    }

    pub fn check(&mut self, id: u8) -> Check {
        let out = match id {
            1 => self.oracle_agreement(),
            2 => self.scaling_law(),
            3 => self.virial_identities(),
            4 => self.minimizer_symmetry(),
            5 => self.kernel_census(),
            6 => self.sector_structure(),
            7 => self.cylindrical_positivity(),
            8 => self.beta_series(),
            9 => self.sign_witnesses(),
            10 => self.tn_inequality(),
            11 => self.cylindrical_ordering(),
            12 => self.heat_kernel(),
            13 => self.continuity(),
            14 => self.determinism(),
            _ => Err(Error::Invalid(format!("no criterion {id}"))),
        };
        out.unwrap_or_else(|e| Check::errored(id, &e))
    }

    fn solver(&self, grid: &Grid3, lambda: f64) -> SolverConfig {
        SolverConfig {
            lambda,
            tol_residual: self.plan.tol_residual,
            max_iter: 5000,
            init: Init::Gaussian { sigma: grid.half_len[0] / (5.0 * lambda) },
            ..Default::default()
        }
    }

    fn solve_with(&mut self, label: &str, pot: &CanonicalPotential, grid: &Grid3, cfg: &SolverConfig) -> Result<MinimizeResult> {
        let res = Problem::new(pot, grid).minimize(cfg)?;
        res.require_converged()?;
        self.virial.push((label.to_string(), virial_report(&res)?.max_relative_deviation));
        Ok(res)
    }

    fn solve(&mut self, label: &str, case: &Case, lambda: f64) -> Result<MinimizeResult> {
        let cfg = self.solver(&case.grid, lambda);
        self.solve_with(label, &case.pot, &case.grid, &cfg)
    }

    fn oracle_agreement(&mut self) -> Result<Check> {
        let tol = 1e-3;
        let mut worst: f64 = 0.0;
        let mut monotone = true;
        let mut detail = Vec::new();
        for &(s, half) in &self.plan.oracle.clone() {
            let reference = radial_reference(s, 1.0)?;
            let mut previous = (f64::INFINITY, f64::INFINITY);
            let mut errs = Vec::new();
            for &n in &self.plan.oracle_sizes.clone() {
                let case = Case { pot: CanonicalPotential::isotropic(s), grid: Grid3::cubic(n, half)? };
                let res = self.solve(&format!("oracle s={s} n={n}"), &case, 1.0)?;
                let de = (res.energy - reference.energy).abs() / reference.energy.abs();
                let dmu = (res.mu - reference.mu).abs() / reference.mu;
                monotone &= de < previous.0 && dmu < previous.1;
                previous = (de, dmu);
                errs.push(format!("{n}:{de:.1e}/{dmu:.1e}"));
            }
            worst = worst.max(previous.0.max(previous.1));
            detail.push(format!("s={s} dE/dmu {}", errs.join(" ")));
        }
        let detail = format!("{}{}", detail.join("; "), if monotone { "" } else { "; not monotone" });
        Ok(Check::judged(1, monotone && worst < tol, worst, tol, detail))
    }

    fn scaling_law(&mut self) -> Result<Check> {
        let case = self.plan.scaling.clone();
        let one = self.solve("scaling lambda=1", &case, 1.0)?;
        let two = self.solve("scaling lambda=2", &case, 2.0)?;
        let ratio = two.energy / one.energy;
        let dev = (ratio - 8.0).abs();
        let radial = radial_reference(0.5, 2.0)?.energy / radial_reference(0.5, 1.0)?.energy;
        let radial_dev = (radial - 8.0).abs() / 8.0;
        let pass = dev < 1e-2 && radial_dev < 1e-6 && one.energy < 0.0;
        let detail = format!("3D ratio {ratio:.8}, radial ratio deviation {radial_dev:.1e} (tol 1e-6)");
        Ok(Check::judged(2, pass, dev, 1e-2, detail))
    }

    fn virial_identities(&mut self) -> Result<Check> {
        if self.virial.is_empty() {
            let case = self.plan.scaling.clone();
            self.solve("virial lambda=1", &case, 1.0)?;
            self.solve("virial lambda=2", &case, 2.0)?;
        }
        let (label, worst) = self
            .virial
            .iter()
            .cloned()
            .fold((String::new(), 0.0), |acc, (l, v)| if v > acc.1 { (l, v) } else { acc });
        let detail = format!("{} runs, worst: {label}", self.virial.len());
        Ok(Check::judged(3, worst < VIRIAL_TOLERANCE, worst, VIRIAL_TOLERANCE, detail))
    }

    fn minimizer_symmetry(&mut self) -> Result<Check> {
        let tol = 1e-3;
        let mut worst: f64 = 0.0;
        let mut pass = true;
        let mut detail = Vec::new();
        for (case, axes) in self.plan.symmetry.clone() {
            let approved = case.pot.steiner_criteria().axes;
            let res = self.solve(&format!("symmetry d={:?}", case.pot.d), &case, 1.0)?;
            let centered = res.psi.center()?;
            let mut asym = Vec::new();
            for &k in &axes {
                pass &= approved[k];
                let a = centered.reflection_asymmetry(k);
                worst = worst.max(a);
                asym.push(format!("{a:.1e}"));
            }
            detail.push(format!("d={:?} axes {:?} approved {:?} asym [{}]", case.pot.d, axes, approved, asym.join(", ")));
        }
        Ok(Check::judged(4, pass && worst < tol, worst, tol, detail.join("; ")))
    }

    fn censuses(&mut self) -> Result<Vec<(Case, KernelCensus)>> {
        if let Some(c) = &self.census {
            return Ok(c.clone());
        }
        let mut out = Vec::new();
        for case in self.plan.census.clone() {
            let res = self.solve(&format!("census d={:?}", case.pot.d), &case, 1.0)?;
            let op = LinearizedOp::from_minimizer(&case.pot, &res)?;
            out.push((case, op.kernel_census(None, self.plan.census_per_sector)?));
        }
        self.census = Some(out.clone());
        Ok(out)
    }

    fn kernel_census(&mut self) -> Result<Check> {
        let tol = 0.999;
        let mut pass = true;
        let mut min_overlap: f64 = 1.0;
        let mut detail = Vec::new();
        for (case, census) in self.censuses()? {
            pass &= census.total == 3;
            for s in &census.sectors {
                let odd = s.sector.matches('-').count();
                let lowest = s.eigenvalues.first().copied().unwrap_or(f64::NAN);
                match odd {
                    1 => {
                        let overlap = s.derivative_overlap.unwrap_or(0.0);
                        min_overlap = min_overlap.min(overlap);
                        pass &= s.zero_count == 1 && overlap > tol;
                    }
                    0 => {}
                    _ => pass &= lowest > census.tol_zero,
                }
            }
            detail.push(format!("d={:?} zero modes {} (tol_zero {:.1e})", case.pot.d, census.total, census.tol_zero));
        }
        Ok(Check::judged(5, pass && min_overlap > tol, min_overlap, tol, detail.join("; ")))
    }

    fn sector_structure(&mut self) -> Result<Check> {
        let mut stray = 0;
        let mut detail = Vec::new();
        for (case, census) in self.censuses()? {
            let even = census.sectors.iter().find(|s| !s.sector.contains('-')).map_or(0, |s| s.zero_count);
            stray += census.sectors.iter().filter(|s| s.sector.matches('-').count() >= 2).map(|s| s.zero_count).sum::<usize>();
            detail.push(format!("d={:?} (+,+,+) zero modes {even}", case.pot.d));
        }
        detail.push(format!("zero modes outside allowed sectors {stray}"));
        Ok(Check::judged(6, stray == 0, stray as f64, 0.0, detail.join("; ")))
    }

    fn cylindrical_positivity(&mut self) -> Result<Check> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.plan.seed);
        let nmax = self.plan.nmax;
        let mut worst = f64::INFINITY;
        let mut negatives = 0usize;
        for pot in &self.plan.positivity {
            let (scales, _) = CylinderScales::of(pot)?;
            let mut drawn = 0;
            while drawn < self.plan.positivity_draws {
                let (r, rp, z) = draw_ring_pair(&mut rng);
                let (mp, mm) = scales.m_pm(r, rp, z);
                if mm / mp < 0.1 {
                    continue;
                }
                drawn += 1;
                for v in scales.harmonics(nmax, r, rp, z)? {
                    worst = worst.min(v);
                    negatives += usize::from(v <= 0.0);
                }
            }
        }
        let detail = format!(
            "{} potentials x {} draws, n <= {nmax}, non-positive values {negatives}",
            self.plan.positivity.len(),
            self.plan.positivity_draws
        );
        Ok(Check::judged(7, negatives == 0, worst, 0.0, detail))
    }

    fn beta_series(&mut self) -> Result<Check> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.plan.seed ^ 8);
        let tol = 1e-8;
        let scales = CylinderScales::of(&self.plan.positivity[0])?.0;
        let mut series_err: f64 = 0.0;
        let mut certified = 0;
        while certified < 50 {
            let (r, rp, z) = draw_ring_pair(&mut rng);
            let n = rng.gen_range(0..=self.plan.nmax);
            let (mp, mm) = scales.m_pm(r, rp, z);
            let t = mm / mp;
            // below t^n ~ 1e-4 the quadrature cannot resolve v_n to 1e-8 relative
            if t > 0.9 || t.powi(n as i32) < 1e-4 {
                continue;
            }
            let sv = vn_series(&scales, n, r, rp, z, 600)?;
            if sv.tail_bound >= 1e-10 {
                continue;
            }
            let q = vn_scaled(&scales, n, r, rp, z)?;
            series_err = series_err.max((sv.value - q).abs() / q.abs());
            certified += 1;
        }
        let mut gen_err: f64 = 0.0;
        for _ in 0..50 {
            let t = rng.gen_range(0.0..0.99);
            let th = rng.gen_range(-PI..PI);
            let exact = 1.0 / (1.0 - 2.0 * t * th.cos() + t * t).sqrt();
            gen_err = gen_err.max((generating_sum(t, th, 1e-13)? - exact).abs() / exact);
        }
        let exact_betas = beta(0, 0) == (2.0 * PI).sqrt() && beta(1, 1) == PI.sqrt();
        let pass = series_err < tol && gen_err < 1e-9 && exact_betas;
        let detail = format!(
            "50 certified points, generating function error {gen_err:.1e} (tol 1e-9), beta_00 and beta_11 exact: {exact_betas}"
        );
        Ok(Check::judged(8, pass, series_err, tol, detail))
    }

    fn sign_witnesses(&mut self) -> Result<Check> {
        let pot = &self.plan.remark;
        let report = remark_probe(pot, 2, self.plan.remark_samples, 8.0, self.plan.seed ^ 9)?;
        let both = report.positive_witness.is_some() && report.negative_witness.is_some();
        let low = report.min_v0.min(report.min_v1);
        let pass = both && low > 0.0;
        let mut detail = format!(
            "d={:?}, {} samples: positive witness {}, negative witness {}, min v0 {:.2e}, min v1 {:.2e}",
            pot.d,
            report.samples,
            report.positive_witness.is_some(),
            report.negative_witness.is_some(),
            report.min_v0,
            report.min_v1
        );
        if !pass {
            if let Some(a) = pot.cylinder_axis() {
                let plane = pot.d[(a + 1) % 3];
                if plane >= pot.d[a] {
                    detail.push_str(&format!(
                        "; with plane value {plane} >= axial value {} every full-model v_n is positive, so no negative witness exists",
                        pot.d[a]
                    ));
                }
            }
        }
        Ok(Check::judged(9, pass, report.min_vn, 0.0, detail))
    }

    fn tn_inequality(&mut self) -> Result<Check> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.plan.seed ^ 10);
        let mut worst = f64::NEG_INFINITY;
        let mut t1: f64 = 0.0;
        for _ in 0..100 {
            let k_sq = 10f64.powf(rng.gen_range(-3.0..2.0));
            let c = 10f64.powf(rng.gen_range(-3.0..2.0));
            for n in 2..=self.plan.nmax {
                worst = worst.max(tn_check(n, k_sq, c)?);
            }
            t1 = t1.max(tn_check(1, k_sq, c)?.abs());
        }
        let pass = worst < 0.0 && t1 < 1e-12;
        Ok(Check::judged(10, pass, worst, 0.0, format!("100 draws, n = 2..{}, max |T_1| {t1:.1e}", self.plan.nmax)))
    }

    fn cylindrical_ordering(&mut self) -> Result<Check> {
        let case = self.plan.cylinder.clone();
        let res = self.solve("cylinder", &case, 1.0)?;
        let op = LinearizedOp::from_minimizer(&case.pot, &res)?;
        let axis = case.pot.cylinder_axis().ok_or_else(|| Error::Invalid("no doubly degenerate spectrum".into()))?;
        let grid = op.q().grid();
        let p1 = (axis + 1) % 3;
        let ext = 0.95 * grid.half_len[p1].min(grid.half_len[axis]);
        let size = self.plan.cylinder_size;
        let sol = CylSolution::new(&op, CylGrid::new(size, size, ext, ext)?)?;
        let table = sol.table(5)?;
        let opts = EigenOptions { tol: 1e-8, max_iter: 1000, ..Default::default() };
        let mut ground = Vec::new();
        let mut translation = f64::NAN;
        let mut single = true;
        for n in 1..=5u32 {
            let cop = sol.operator(&table, n)?;
            let start = (n == 1).then_some(sol.dq.as_slice());
            if n == 1 {
                translation = cop.residual_of(&sol.dq);
            }
            let spec = cop.lowest(1, start, &opts)?;
            single &= spec.single_signed(1e-8);
            ground.push(spec.values[0]);
        }
        let l1 = ground[0];
        let ordered = ground[1..].iter().all(|&l| l > l1);
        let pass = l1.abs() < 10.0 * translation && ordered && single;
        let detail = format!(
            "lambda_0^n (n=1..5) {:?}, translation residual {translation:.2e}, single-signed {single}",
            ground.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>()
        );
        Ok(Check::judged(11, pass, l1.abs(), 10.0 * translation, detail))
    }

    fn heat_kernel(&mut self) -> Result<Check> {
        let tol = 1e-2;
        let mut worst: f64 = 0.0;
        let mut nodes = Vec::new();
        for n in [0, 1, 3] {
            let r = heat_kernel_check(n, 0.1, 64, 0.05, 8, 0.1)?;
            worst = worst.max(r.max_relative_error);
            nodes.push(r.nodes);
        }
        Ok(Check::judged(12, worst < tol, worst, tol, format!("n = 0, 1, 3 at t = 0.1, interior nodes {nodes:?}")))
    }

    fn continuity(&mut self) -> Result<Check> {
        let tol = 0.1;
        let cfg = self.solver(&self.plan.continuity_grid, 1.0);
        let mut worst: f64 = 0.0;
        let mut finite = true;
        let mut defect: f64 = 0.0;
        let mut detail = Vec::new();
        for (p, ends) in self.plan.continuity_paths.clone().iter().enumerate() {
            let mut estimates = Vec::new();
            for points in [5, 9] {
                let path = (0..points)
                    .map(|k| {
                        let t = k as f64 / (points - 1) as f64;
                        let mut m = [[0.0; 3]; 3];
                        for i in 0..3 {
                            for j in 0..3 {
                                m[i][j] = (1.0 - t) * ends[0][i][j] + t * ends[1][i][j];
                            }
                        }
                        DielectricSpec::new(Model::Full, m).map(|s| (t, s))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let table = continuity_probe(&path, &self.plan.continuity_grid, &cfg)?;
                for q in &table.points {
                    self.virial.push((format!("continuity path {p} t={}", q.t), q.virial));
                    defect = defect.max(q.scaling_defect);
                }
                finite &= table.lipschitz.is_finite() && table.lipschitz > 0.0;
                estimates.push(table.lipschitz);
            }
            let change = (estimates[1] - estimates[0]).abs() / estimates[1];
            worst = worst.max(change);
            detail.push(format!("path {p}: Lipschitz {:.5} -> {:.5}", estimates[0], estimates[1]));
        }
        detail.push(format!("max scaling defect {defect:.1e} (tol 1e-3)"));
        let pass = finite && worst < tol && defect < 1e-3;
        Ok(Check::judged(13, pass, worst, tol, detail.join("; ")))
    }

    fn determinism(&mut self) -> Result<Check> {
        let case = self.plan.persistence.clone();
        let sigma = case.grid.half_len[0] / 5.0;
        let cfg = SolverConfig {
            max_iter: 5000,
            init: Init::RandomPositive { seed: self.plan.seed, sigma },
            ..Default::default()
        };
        let a = self.solve_with("determinism run 1", &case.pot, &case.grid, &cfg)?;
        let b = self.solve_with("determinism run 2", &case.pot, &case.grid, &cfg)?;
        let dir = std::env::temp_dir();
        let stem = format!("polaron-verify-{}", std::process::id());
        let (pa, pb) = (dir.join(format!("{stem}-a.pfld")), dir.join(format!("{stem}-b.pfld")));
        a.psi.save(&pa)?;
        b.psi.save(&pb)?;
        let (ba, bb) = (std::fs::read(&pa)?, std::fs::read(&pb)?);
        let loaded = Field::load(&pa);
        let _ = std::fs::remove_file(&pa);
        let _ = std::fs::remove_file(&pb);
        let loaded = loaded?;
        let identical = ba == bb && a.energy.to_bits() == b.energy.to_bits() && a.iterations == b.iterations;
        let roundtrip = loaded.grid().same_as(a.psi.grid())
            && loaded.values().iter().zip(a.psi.values()).all(|(x, y)| x.to_bits() == y.to_bits());
        let differing = ba.iter().zip(&bb).filter(|(x, y)| x != y).count() + ba.len().abs_diff(bb.len());
        let detail = format!("{} bytes per file, identical runs {identical}, exact round trip {roundtrip}", ba.len());
        Ok(Check::judged(14, identical && roundtrip, differing as f64, 0.0, detail))
    }
}

/// `r, r'` in `(0, 6]` and `Z` in `[-6, 6]`.
fn draw_ring_pair(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    (rng.gen_range(1e-3..6.0), rng.gen_range(1e-3..6.0), rng.gen_range(-6.0..6.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_partition_the_criteria() {
        let mut ids: Vec<u8> = [
            Suite::Scaling,
            Suite::Virial,
            Suite::Symmetry,
            Suite::Kernel,
            Suite::Cylinder,
            Suite::Continuity,
            Suite::Persistence,
        ]
        .iter()
        .flat_map(|s| s.criteria())
        .collect();
        ids.sort();
        assert_eq!(ids, Suite::All.criteria());
        assert_eq!("kernel".parse::<Suite>().unwrap(), Suite::Kernel);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_cylinder_checks_pass() {
        let mut plan = Plan::acceptance().unwrap();
        plan.positivity_draws = 50;
        let mut v = Verifier::new(plan);
        for id in [7, 8, 10] {
            let c = v.check(id);
            assert_eq!(c.status, Status::Pass, "{c}");
        }
    }

    #[test]
    fn report_fails_on_any_failure() {
        let pass = Check::judged(1, true, 0.0, 1.0, String::new());
        let fail = Check::judged(2, false, 2.0, 1.0, String::new());
        let skip = Check::new(3, Status::Skip, f64::NAN, f64::NAN, String::new());
        assert!(VerificationReport { checks: vec![pass.clone(), skip] }.passed());
        let report = VerificationReport { checks: vec![pass, fail] };
        assert!(!report.passed());
        assert_eq!(report.failures().count(), 1);
        assert!(report.to_string().contains("[FAIL] C2"));
    }
}
