//! Coupling inputs from flags or a JSON file.

use crate::error::CliError;
use clap::ValueEnum;
use cube_rmatrix::potts::MAX_STATES;
use cube_rmatrix::{ChiralCouplings, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ising,
    Potts,
    Chiral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Kind {
    #[value(name = "W")]
    W,
    #[value(name = "R")]
    R,
    #[value(name = "WP")]
    Wp,
    #[value(name = "RP")]
    Rp,
    #[value(name = "Hcell")]
    Hcell,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::W => "W",
            Kind::R => "R",
            Kind::Wp => "WP",
            Kind::Rp => "RP",
            Kind::Hcell => "Hcell",
        }
    }
}

/// `--Jk-file` contents. `jx`, `jy`, `jz` hold `N − 1` harmonics each as
/// `[re, im]`; `h` (transverse field harmonics) is only used for `Hcell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFile {
    #[serde(rename = "N")]
    pub n: usize,
    pub jx: Vec<[f64; 2]>,
    pub jy: Vec<[f64; 2]>,
    pub jz: Vec<[f64; 2]>,
    #[serde(default)]
    pub h: Option<Vec<[f64; 2]>>,
}

fn complex(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn read_coupling_file(path: &Path) -> Result<CouplingFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: CouplingFile = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))?;
    for (name, v) in [("jx", &file.jx), ("jy", &file.jy), ("jz", &file.jz)] {
        if v.len() + 1 != file.n {
            return Err(CliError::config(format!("{}: field `{name}`: expected {} harmonics, got {}", path.display(), file.n.saturating_sub(1), v.len())));
        }
    }
    if let Some(h) = &file.h {
        if h.len() + 1 != file.n {
            return Err(CliError::config(format!("{}: field `h`: expected {} harmonics, got {}", path.display(), file.n.saturating_sub(1), h.len())));
        }
    }
    Ok(file)
}

/// Resolved couplings of any model in the chiral form, plus the field
/// harmonics used by `Hcell`.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub model: Model,
    pub couplings: ChiralCouplings,
    pub field: Vec<C64>,
}

impl ModelInput {
    pub fn n(&self) -> usize {
        self.couplings.n
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "jx": pairs(&self.couplings.jx),
            "jy": pairs(&self.couplings.jy),
            "jz": pairs(&self.couplings.jz),
            "h": pairs(&self.field),
        })
    }
}

/// `--J j1 j2 j3` fills every harmonic of each axis with the same value
/// (the ordinary Potts model; Ising at `N = 2`). For `Hcell` the third value
/// is the transverse field.
pub fn resolve(model: Model, n: Option<usize>, j: Option<&[f64]>, file: Option<&Path>) -> Result<ModelInput, CliError> {
    let n = match (model, n) {
        (Model::Ising, None | Some(2)) => 2,
        (Model::Ising, Some(other)) => return Err(CliError::config(format!("--N {other} is not valid for the Ising model"))),
        (_, Some(n)) if (2..=MAX_STATES).contains(&n) => n,
        (_, Some(n)) => return Err(CliError::config(format!("--N {n} outside 2..={MAX_STATES}"))),
        (_, None) => 0,
    };
    match (j, file) {
        (Some(_), Some(_)) => Err(CliError::config("give either --J or --Jk-file, not both")),
        (Some(j), None) => {
            if model == Model::Chiral {
                return Err(CliError::config("the chiral model takes its harmonics from --Jk-file"));
            }
            if n == 0 {
                return Err(CliError::config("--N is required for the Potts model"));
            }
            let [a, b, cc]: [f64; 3] = j.try_into().map_err(|_| CliError::config(format!("--J takes 3 values, got {}", j.len())))?;
            if !(a.is_finite() && b.is_finite() && cc.is_finite()) {
                return Err(CliError::config("--J values must be finite"));
            }
            let fill = |v: f64| vec![C64::new(v, 0.0); n - 1];
            let couplings = ChiralCouplings::new(n, fill(a), fill(b), fill(cc)).map_err(CliError::config)?;
            Ok(ModelInput { model, couplings, field: fill(cc) })
        }
        (None, Some(path)) => {
            let f = read_coupling_file(path)?;
            if n != 0 && f.n != n {
                return Err(CliError::config(format!("--N {n} disagrees with field `N` = {} in {}", f.n, path.display())));
            }
            if model == Model::Ising && f.n != 2 {
                return Err(CliError::config(format!("field `N`: the Ising model needs N = 2, got {}", f.n)));
            }
            let couplings = ChiralCouplings::new(f.n, complex(&f.jx), complex(&f.jy), complex(&f.jz)).map_err(CliError::config)?;
            let field = f.h.as_deref().map(complex).unwrap_or_else(|| vec![C64::new(0.0, 0.0); f.n - 1]);
            Ok(ModelInput { model, couplings, field })
        }
        (None, None) => Err(CliError::config("couplings missing: give --J or --Jk-file")),
    }
}
