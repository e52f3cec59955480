//! Named and user-defined noise diffusions together with their invariant laws.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::law::{build_invariant_law, DiffusionSpec, InvariantLaw, OuLaw};

/// How the user names a noise: a registered label, or coefficient expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Label(String),
    Custom {
        drift: String,
        #[serde(default = "unit_diffusion")]
        diffusion: String,
    },
}

fn unit_diffusion() -> String {
    "1".to_string()
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Label("ou".into())
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Label(l) => f.write_str(l),
            NoiseSpec::Custom { drift, diffusion } => write!(f, "drift={drift};diffusion={diffusion}"),
        }
    }
}

/// Accepts `ou` or `drift=<expr>[;diffusion=<expr>]`.
impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains('=') {
            if s.is_empty() {
                return Err(Error::invalid("empty noise specification"));
            }
            return Ok(NoiseSpec::Label(s.to_string()));
        }
        let mut drift = None;
        let mut diffusion = None;
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=expression, got '{part}'")))?;
            let slot = match key.trim() {
                "drift" | "S" => &mut drift,
                "diffusion" | "sigma" => &mut diffusion,
                other => return Err(Error::invalid(format!("unknown noise coefficient '{other}'"))),
            };
            if slot.replace(value.trim().to_string()).is_some() {
                return Err(Error::invalid(format!("coefficient '{}' given twice", key.trim())));
            }
        }
        Ok(NoiseSpec::Custom {
            drift: drift.ok_or_else(|| Error::invalid("custom noise needs a drift"))?,
            diffusion: diffusion.unwrap_or_else(unit_diffusion),
        })
    }
}

/// A resolved noise: the SDE to simulate and its stationary law.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub spec: DiffusionSpec,
    pub law: Arc<dyn InvariantLaw>,
}

type Factory = Arc<dyn Fn() -> Result<NoiseModel> + Send + Sync>;

#[derive(Clone, Default)]
pub struct NoiseRegistry {
    entries: BTreeMap<String, Factory>,
}

impl fmt::Debug for NoiseRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseRegistry").field("labels", &self.labels()).finish()
    }
}

impl NoiseRegistry {
    /// Contains `ou`, backed by the closed-form law.
    pub fn builtin() -> Self {
        let mut r = Self::default();
        r.register_with("ou", || {
            Ok(NoiseModel {
                spec: DiffusionSpec::ornstein_uhlenbeck(),
                law: Arc::new(OuLaw),
            })
        });
        r
    }

    /// Registers a diffusion whose law is built numerically on first use.
    pub fn register(&mut self, spec: DiffusionSpec) {
        let label = spec.label().to_string();
        self.register_with(label, move || {
            let law = build_invariant_law(&spec)?;
            Ok(NoiseModel {
                spec: spec.clone(),
                law: Arc::new(law),
            })
        });
    }

    pub fn register_with(&mut self, label: impl Into<String>, f: impl Fn() -> Result<NoiseModel> + Send + Sync + 'static) {
        self.entries.insert(label.into(), Arc::new(f));
    }

    pub fn labels(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn resolve(&self, noise: &NoiseSpec) -> Result<NoiseModel> {
        match noise {
            NoiseSpec::Label(label) => {
                let f = self.entries.get(label).ok_or_else(|| {
                    Error::invalid(format!("unknown noise '{label}' (available: {})", self.labels().join(", ")))
                })?;
                f()
            }
            NoiseSpec::Custom { drift, diffusion } => {
                let spec = custom_spec(drift, diffusion)?;
                let law = build_invariant_law(&spec)?;
                Ok(NoiseModel {
                    spec,
                    law: Arc::new(law),
                })
            }
        }
    }
}

/// Diffusion from coefficient expressions in `x`.
pub fn custom_spec(drift: &str, diffusion: &str) -> Result<DiffusionSpec> {
    let s = Expr::parse(drift)?;
    let sigma = Expr::parse(diffusion)?;
    let label = format!("drift={drift};diffusion={diffusion}");
    let (s, sigma) = (s.into_fn(), sigma.into_fn());
    Ok(DiffusionSpec::new(label, move |x| s(x), move |x| sigma(x)))
}
