//! JSON description of an influence model.

use serde::{Deserialize, Serialize};
use stab_core::influence::{ExternalSpec, InfluenceSpec, TriggeringSpec};
use stab_core::DirectedGraph;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ic,
    Lt,
}

/// `{"model": "ic", "ip_max": 1.0, "ext": {"kind": "bernoulli", "ep_max": 0.001}, "param_seed": 7}`
///
/// `ip` (one value per edge, edges in `(source, target)` order) may replace
/// `ip_max`; for LT the values are the edge weights. Likewise `ep` (one value
/// per node) may replace `ep_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluenceDoc {
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ip_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ip: Option<Vec<f64>>,
    #[serde(default)]
    pub ext: ExternalDoc,
    #[serde(default)]
    pub param_seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExternalDoc {
    #[default]
    None,
    Bernoulli {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ep_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ep: Option<Vec<f64>>,
    },
}

impl Default for InfluenceDoc {
    fn default() -> Self {
        Self {
            model: Model::Ic,
            ip_max: Some(1.0),
            ip: None,
            ext: ExternalDoc::None,
            param_seed: 0,
        }
    }
}

impl InfluenceDoc {
    pub fn uniform(model: Model, ip_max: f64, ep_max: f64, param_seed: u64) -> Self {
        let ext = if ep_max > 0.0 {
            ExternalDoc::Bernoulli {
                ep_max: Some(ep_max),
                ep: None,
            }
        } else {
            ExternalDoc::None
        };
        Self {
            model,
            ip_max: Some(ip_max),
            ip: None,
            ext,
            param_seed,
        }
    }

    /// Same document with the external part replaced by `ep_max`.
    pub fn with_ep_max(&self, ep_max: f64) -> Self {
        let mut d = self.clone();
        d.ext = if ep_max > 0.0 {
            ExternalDoc::Bernoulli {
                ep_max: Some(ep_max),
                ep: None,
            }
        } else {
            ExternalDoc::None
        };
        d
    }

    /// Materializes the per-edge and per-node parameters for `g`.
    pub fn to_spec(&self, g: &DirectedGraph) -> Result<InfluenceSpec> {
        let trig = match (&self.ip_max, &self.ip) {
            (Some(p), None) => match self.model {
                Model::Ic => TriggeringSpec::uniform_ic(g, *p, self.param_seed)?,
                Model::Lt => TriggeringSpec::uniform_lt(g, *p, self.param_seed)?,
            },
            (None, Some(v)) => match self.model {
                Model::Ic => TriggeringSpec::IndependentCascade { edge_prob: v.clone() },
                Model::Lt => TriggeringSpec::LinearThreshold { edge_weight: v.clone() },
            },
            _ => return Err(Error::Config("give exactly one of ip_max and ip".into())),
        };
        let n = g.node_count();
        let ext = match &self.ext {
            ExternalDoc::None => ExternalSpec::None,
            ExternalDoc::Bernoulli { ep_max: Some(p), ep: None } => {
                ExternalSpec::uniform(n, *p, self.param_seed)?
            }
            ExternalDoc::Bernoulli { ep_max: None, ep: Some(v) } => {
                ExternalSpec::IndependentBernoulli { node_prob: v.clone() }
            }
            ExternalDoc::Bernoulli { .. } => {
                return Err(Error::Config("give exactly one of ep_max and ep".into()))
            }
        };
        let spec = InfluenceSpec::new(trig, ext);
        spec.validate(g)?;
        Ok(spec)
    }
}
