//! TOML descriptions of models, strings and Sturm-Liouville problems, plus the shared
//! grid and option sections read by the command-line front-end.

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, HamiltonianModel};
use crate::models::PiecewiseConstant;
use crate::strings_sl::{sl_to_hamiltonian, string_to_hamiltonian, KreinString, SlProblem};
use crate::zoo::{self, HplParams, HplVariant, PowerLogParams, PrescribedAngleSpec};
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize};

fn zero() -> f64 {
    0.0
}

/// A Hamiltonian, selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Constant {
        h1: f64,
        h2: f64,
        #[serde(default = "zero")]
        h3: f64,
    },
    Diagonal {
        h1: f64,
        h2: f64,
    },
    Powerlog(PowerLogParams),
    Hpl(HplParams),
    /// `HplParams` with the variant forced to `r3`
    R3(HplParams),
    PrescribedAngle(PrescribedAngleSpec),
    FromString(KreinString),
    FromSl(SlProblem),
    /// rows `[t, h1, h2, h3]`, each value held until the next row
    Table {
        rows: Vec<[f64; 4]>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantFields {
    h1: f64,
    h2: f64,
    #[serde(default = "zero")]
    h3: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagonalFields {
    h1: f64,
    h2: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFields {
    rows: Vec<[f64; 4]>,
}

const KINDS: &[&str] = &["constant", "diagonal", "powerlog", "hpl", "r3", "prescribed_angle", "from_string", "from_sl", "table"];

// Dispatching by hand keeps the path of a bad field inside the kind-specific table,
// which a derived internally tagged enum loses.
impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        fn body<T: DeserializeOwned, E: de::Error>(t: toml::Table) -> std::result::Result<T, E> {
            serde_path_to_error::deserialize(toml::Value::Table(t))
                .map_err(|e| E::custom(format!("at `{}`: {}", e.path().clone(), e.into_inner())))
        }
        let mut t = toml::Table::deserialize(d)?;
        let kind = match t.remove("kind") {
            Some(toml::Value::String(k)) => k,
            Some(_) => return Err(de::Error::custom("at `kind`: must be a string")),
            None => return Err(de::Error::custom("at `kind`: missing field")),
        };
        Ok(match kind.as_str() {
            "constant" => {
                let c: ConstantFields = body(t)?;
                ModelSpec::Constant { h1: c.h1, h2: c.h2, h3: c.h3 }
            }
            "diagonal" => {
                let c: DiagonalFields = body(t)?;
                ModelSpec::Diagonal { h1: c.h1, h2: c.h2 }
            }
            "powerlog" => ModelSpec::Powerlog(body(t)?),
            "hpl" => ModelSpec::Hpl(body(t)?),
            "r3" => ModelSpec::R3(body(t)?),
            "prescribed_angle" => ModelSpec::PrescribedAngle(body(t)?),
            "from_string" => ModelSpec::FromString(body(t)?),
            "from_sl" => ModelSpec::FromSl(body(t)?),
            "table" => ModelSpec::Table { rows: body::<TableFields, _>(t)?.rows },
            other => {
                return Err(de::Error::custom(format!("at `kind`: unknown kind `{other}`, expected one of {}", KINDS.join(", "))))
            }
        })
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<HamiltonianModel> {
        match self {
            ModelSpec::Constant { h1, h2, h3 } => zoo::constant(*h1, *h2, *h3),
            ModelSpec::Diagonal { h1, h2 } => zoo::constant(*h1, *h2, 0.0),
            ModelSpec::Powerlog(p) => zoo::make_powerlog(*p),
            ModelSpec::Hpl(p) => zoo::make_hpl(*p),
            ModelSpec::R3(p) => zoo::make_r3_variant(HplParams { variant: HplVariant::R3, ..*p }),
            ModelSpec::PrescribedAngle(s) => zoo::make_prescribed_angle(s.clone()),
            ModelSpec::FromString(s) => string_to_hamiltonian(s),
            ModelSpec::FromSl(p) => sl_to_hamiltonian(p),
            ModelSpec::Table { rows } => {
                let rows = rows.iter().map(|r| (r[0], Density::new(r[1], r[2], r[3]))).collect();
                Ok(HamiltonianModel::new(PiecewiseConstant::new(rows)?))
            }
        }
    }
}

/// Log-spaced `r` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "default_per_decade")]
    pub per_decade: f64,
}

fn default_per_decade() -> f64 {
    5.0
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.per_decade > 0.0) {
            return Err(WeylError::Config {
                key: "grid".into(),
                msg: format!("need 0 < r_min <= r_max and per_decade > 0, got {self:?}"),
            });
        }
        crate::estimates::decade_grid(self.r_min, self.r_max, self.per_decade)
    }
}

/// Numerical knobs shared by the subcommands; all optional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub tol_factor: Option<f64>,
    /// dilation factor for slow variation and the two-point corollary
    pub k: Option<f64>,
    /// right end of the Omega-side integral in the tails check
    pub a_prime: Option<f64>,
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        let checks = [("eta", self.eta), ("tol_factor", self.tol_factor), ("k", self.k), ("a_prime", self.a_prime)];
        for (key, v) in checks {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(WeylError::Config { key: format!("options.{key}"), msg: format!("must be positive, got {v}") });
                }
            }
        }
        if let Some(th) = self.theta {
            if !(th > 0.0 && th < std::f64::consts::PI) {
                return Err(WeylError::Config { key: "options.theta".into(), msg: format!("must lie in (0, pi), got {th}") });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: ModelSpec,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub options: RunOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringFile {
    pub string: KreinString,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlFile {
    pub problem: SlProblem,
    pub grid: Option<GridSpec>,
}

/// Deserializes `text`, reporting the dotted path of the offending key on failure.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| WeylError::Config { key: "<document>".into(), msg: e.message().into() })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let mut key = if path == "." || path.is_empty() { "<document>".to_string() } else { path };
        let full = e.into_inner().message().to_string();
        // toml appends its own "in `field`" line, which repeats the path
        let mut msg = full.split("\nin `").next().unwrap_or_default().trim().to_string();
        // the model table reports its inner path inside the message
        if let Some((inner, rest)) = msg.strip_prefix("at `").and_then(|m| m.split_once("`: ")) {
            key = format!("{key}.{inner}");
            msg = rest.to_string();
        }
        WeylError::Config { key, msg }
    })
}

pub fn read_toml<T: DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WeylError::Config { key: path.display().to_string(), msg: e.to_string() })?;
    parse_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_parses_and_builds() {
        let docs = [
            "[model]\nkind = \"constant\"\nh1 = 1.0\nh2 = 1.0",
            "[model]\nkind = \"diagonal\"\nh1 = 4.0\nh2 = 1.0",
            "[model]\nkind = \"powerlog\"\nalpha = 2.0\nbeta1 = 1.0\nbeta2 = 3.0",
            "[model]\nkind = \"hpl\"\np = 0.5\nl = 0.5",
            "[model]\nkind = \"r3\"\np = 0.25\nl = 0.6",
            "[model]\nkind = \"prescribed_angle\"\nb = 1.0\nf = { kind = \"constant\", value = 0.0 }\ng = { kind = \"power\", coef = 1.0, exponent = -1.0 }",
            "[model]\nkind = \"from_string\"\nmass = { kind = \"uniform\" }",
            "[model]\nkind = \"from_sl\"\nt_max = 20.0",
            "[model]\nkind = \"table\"\nrows = [[0.0, 1.0, 0.0, 0.0], [1.0, 1.0, 1.0, 0.0]]",
        ];
        for d in docs {
            let f: ModelFile = parse_toml(d).unwrap_or_else(|e| panic!("{d}: {e}"));
            f.model.build().unwrap_or_else(|e| panic!("{d}: {e}"));
        }
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_toml::<ModelFile>("[model]\nkind = \"powerlog\"\nalpha = \"two\"\nbeta1 = 1.0\nbeta2 = 3.0").unwrap_err();
        assert!(e.to_string().contains("`model.alpha`"), "{e}");
        let e = parse_toml::<ModelFile>("[model]\nkind = \"constant\"\nh1 = 1.0\nh2 = 1.0\n[grid]\nr_min = 1.0\nr_mx = 2.0").unwrap_err();
        assert!(e.to_string().contains("r_mx"), "{e}");
        let f: ModelFile = parse_toml("[model]\nkind = \"powerlog\"\nalpha = 2.0\nbeta1 = 1.0\nbeta2 = 1.0").unwrap();
        assert!(f.model.build().unwrap_err().to_string().contains("beta1 == beta2"));
        let e = parse_toml::<ModelFile>("[model]\nkind = \"nope\"").unwrap_err();
        assert!(e.to_string().contains("`model.kind`"), "{e}");
        let e = parse_toml::<ModelFile>("[model]\nkind = \"powerlog\"\nalpha = \"x\"\nbeta1 = 1.0\nbeta2 = 3.0").unwrap_err();
        assert!(e.to_string().contains("`model.alpha`"), "{e}");
    }
}
