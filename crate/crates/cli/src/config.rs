use std::path::{Path, PathBuf};

use polaron_core::verify::Case;
use polaron_core::{canonicalize, CanonicalPotential, DielectricSpec, Error, Grid3, Model, ParitySector, Result, SolverConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<PotentialBlock>,
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub cyl: CylBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Exactly one of `matrix` (the dielectric matrix), `diag` (canonical
/// entries) or `isotropic` (shorthand for `diag = [s, s, s]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub model: Model,
    pub matrix: Option<[[f64; 3]; 3]>,
    pub diag: Option<[f64; 3]>,
    pub isotropic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Sector labels such as `"-++"`, or `"all"`.
    pub sectors: Vec<String>,
    pub k: usize,
    pub tol_zero: Option<f64>,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { sectors: vec!["all".into()], k: 2, tol_zero: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylBlock {
    pub n_list: Vec<u32>,
    pub size: usize,
    /// Half-plane extent in the units of the unit-normalized solution.
    pub extent: Option<f64>,
    pub k: usize,
}

impl Default for CylBlock {
    fn default() -> Self {
        Self { n_list: (0..=5).collect(), size: 48, extent: None, k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("polaron-out") }
    }
}

impl PotentialBlock {
    pub fn canonical(&self) -> Result<CanonicalPotential> {
        match (self.matrix, self.diag, self.isotropic) {
            (Some(m), None, None) => canonicalize(&DielectricSpec::new(self.model, m)?),
            (None, Some(d), None) => CanonicalPotential::new(self.model, d),
            (None, None, Some(s)) => CanonicalPotential::new(self.model, [s; 3]),
            _ => Err(Error::Invalid("potential needs exactly one of matrix, diag, isotropic".into())),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block, so that nothing fails after compute has started.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.potential {
            p.canonical()?;
        }
        if let Some(g) = &self.grid {
            Grid3::cubic(g.n, g.half_length)?;
        }
        self.solver.validate()?;
        self.sectors()?;
        if self.spectrum.k == 0 || self.cyl.k == 0 {
            return Err(Error::Invalid("eigenvalue counts must be positive".into()));
        }
        if self.cyl.size < 4 || self.cyl.extent.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::Invalid("cylinder grid needs size >= 4 and a positive extent".into()));
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<CanonicalPotential> {
        let p = self.potential.as_ref().ok_or_else(|| Error::Invalid("config has no [potential] block".into()))?;
        p.canonical()
    }

    pub fn grid(&self) -> Result<Grid3> {
        let g = self.grid.as_ref().ok_or_else(|| Error::Invalid("config has no [grid] block".into()))?;
        Grid3::cubic(g.n, g.half_length)
    }

    pub fn case(&self) -> Result<Case> {
        Ok(Case { pot: self.potential()?, grid: self.grid()? })
    }

    pub fn sectors(&self) -> Result<Vec<ParitySector>> {
        if self.spectrum.sectors.iter().any(|s| s == "all") {
            return Ok(ParitySector::all().to_vec());
        }
        self.spectrum.sectors.iter().map(|s| s.parse()).collect()
    }

    /// Hex SHA-256 of the normalized configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[potential]
model = "full"
diag = [0.6, 0.6, 0.4]

[grid]
n = 32
half_length = 40.0

[solver]
tol_residual = 1e-9
init = { type = "gaussian", sigma = 8.0 }

[spectrum]
sectors = ["-++", "+-+"]
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.solver.lambda, 1.0);
        assert_eq!(cfg.solver.tol_residual, 1e-9);
        assert_eq!(cfg.potential().unwrap().d, [0.6, 0.6, 0.4]);
        assert_eq!(cfg.sectors().unwrap().len(), 2);
        assert_eq!(cfg.cyl.n_list, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn rejects_bad_blocks_up_front() {
        assert!(RunConfig::parse("[potential]\nmodel = \"full\"\ndiag = [0.6, 0.6, 1.4]\n").is_err());
        assert!(RunConfig::parse("[grid]\nn = 32\nhalf_length = -1.0\n").is_err());
        assert!(RunConfig::parse("[spectrum]\nsectors = [\"+\"]\n").is_err());
        assert!(RunConfig::parse("[solver]\nlambda = 0.0\n").is_err());
        assert!(RunConfig::parse("[bogus]\nx = 1\n").is_err());
        let both = "[potential]\nmodel = \"full\"\nisotropic = 0.5\ndiag = [0.5, 0.5, 0.5]\n";
        assert!(RunConfig::parse(both).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse(SAMPLE).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.solver.lambda = 2.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
