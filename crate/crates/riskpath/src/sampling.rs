//! Stochastic agents: analytic distribution families standing in for
//! trained policies, the trace/output contract, and deterministic sampling
//! through derived streams.
//!
//! For every kind here the trace *is* the loss value; outputs default to
//! passing the input through so downstream input distributions stay well
//! defined. Losses may be `-inf` but never `+inf`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{label_hash, SeedDerivation, StreamContext};

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("input does not match the agent's domain: {0}")]
    DomainMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empirical sample file {path}: {message}")]
    EmpiricalFile { path: String, message: String },
}

/// Serialize an extended real: finite values as numbers, `-inf` as the
/// string `"-inf"` (JSON has no infinity literal).
pub mod ext_real {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            Err(serde::ser::Error::custom("cannot serialize +inf or NaN"))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if !v.is_nan() && v != f64::INFINITY => Ok(v),
            Repr::Num(_) => Err(D::Error::custom("value must be finite or -inf")),
            Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(D::Error::custom(format!("unrecognized value {s:?}"))),
        }
    }
}

/// Distribution family of an agent's loss draw.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentKind {
    Constant {
        #[serde(with = "ext_real")]
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Negated distance-style loss: `-(offset + scale * |N(0,1)|)`.
    ShiftedMinDistance {
        offset: f64,
        scale: f64,
    },
    /// `rho * Z + sqrt(1 - rho^2) * N(0,1)` where `Z` is a standard normal
    /// latent shared by every edge in the same `group` within one end-to-end
    /// rollout. The marginal is N(0,1) and the loss correlation between two
    /// group members with coefficients `rho1`, `rho2` is `rho1 * rho2`.
    LatentCorrelated {
        rho: f64,
        group: String,
    },
    /// Draws uniformly with replacement from a sample file, one decimal
    /// per line.
    Empirical {
        file: String,
        #[serde(skip)]
        values: Arc<Vec<f64>>,
    },
}

/// How an agent's output is produced from its input and trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum OutputRule {
    /// output = input
    #[default]
    Passthrough,
    /// output = fixed value
    Constant { value: f64 },
    /// output = trace + delta; lets an edge forward its cumulated loss
    Offset { delta: f64 },
}

impl OutputRule {
    pub fn is_passthrough(&self) -> bool {
        matches!(self, OutputRule::Passthrough)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OutputRuleRepr {
    Name(String),
    Map {
        rule: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
}

impl TryFrom<OutputRuleRepr> for OutputRule {
    type Error = String;

    fn try_from(repr: OutputRuleRepr) -> Result<Self, String> {
        match repr {
            OutputRuleRepr::Name(name) if name == "passthrough" => Ok(OutputRule::Passthrough),
            OutputRuleRepr::Name(name) => Err(format!("unknown output rule {name:?}")),
            OutputRuleRepr::Map { rule, value, delta } => match rule.as_str() {
                "passthrough" => Ok(OutputRule::Passthrough),
                "constant" => value
                    .map(|value| OutputRule::Constant { value })
                    .ok_or_else(|| "constant output rule needs a value".into()),
                "offset" => delta
                    .map(|delta| OutputRule::Offset { delta })
                    .ok_or_else(|| "offset output rule needs a delta".into()),
                other => Err(format!("unknown output rule {other:?}")),
            },
        }
    }
}

impl From<OutputRule> for OutputRuleRepr {
    fn from(rule: OutputRule) -> Self {
        match rule {
            OutputRule::Passthrough => OutputRuleRepr::Name("passthrough".into()),
            OutputRule::Constant { value } => OutputRuleRepr::Map {
                rule: "constant".into(),
                value: Some(value),
                delta: None,
            },
            OutputRule::Offset { delta } => OutputRuleRepr::Map {
                rule: "offset".into(),
                value: None,
                delta: Some(delta),
            },
        }
    }
}

impl Serialize for OutputRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        OutputRuleRepr::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OutputRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        OutputRuleRepr::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// A stochastic agent: a distribution family plus the output rule and
/// whether the drawn loss cumulates with the input (carry-style edges).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AgentSpec {
    #[serde(flatten)]
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "OutputRule::is_passthrough")]
    pub output_rule: OutputRule,
    #[serde(default, skip_serializing_if = "is_false")]
    pub accumulate_input: bool,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            output_rule: OutputRule::Passthrough,
            accumulate_input: false,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(AgentKind::Constant { value })
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self::new(AgentKind::Uniform { low, high })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        Self::new(AgentKind::Gaussian { mu, sigma })
    }

    pub fn exponential(rate: f64) -> Self {
        Self::new(AgentKind::Exponential { rate })
    }

    pub fn shifted_min_distance(offset: f64, scale: f64) -> Self {
        Self::new(AgentKind::ShiftedMinDistance { offset, scale })
    }

    pub fn latent_correlated(rho: f64, group: &str) -> Self {
        Self::new(AgentKind::LatentCorrelated {
            rho,
            group: group.to_string(),
        })
    }

    pub fn with_output(mut self, rule: OutputRule) -> Self {
        self.output_rule = rule;
        self
    }

    pub fn accumulating(mut self) -> Self {
        self.accumulate_input = true;
        self
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        let bad = |msg: String| Err(SampleError::InvalidParams(msg));
        match &self.kind {
            AgentKind::Constant { value } => {
                if value.is_nan() || *value == f64::INFINITY {
                    return bad("constant loss must be finite or -inf".into());
                }
            }
            AgentKind::Uniform { low, high } => {
                if !low.is_finite() || !high.is_finite() || low >= high {
                    return bad(format!("uniform needs low < high, got [{low}, {high}]"));
                }
            }
            AgentKind::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || *sigma <= 0.0 {
                    return bad(format!("gaussian needs finite mu and sigma > 0, got ({mu}, {sigma})"));
                }
            }
            AgentKind::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return bad(format!("exponential needs rate > 0, got {rate}"));
                }
            }
            AgentKind::ShiftedMinDistance { offset, scale } => {
                if !offset.is_finite() || !scale.is_finite() || *scale <= 0.0 {
                    return bad(format!(
                        "shifted-min-distance needs finite offset and scale > 0, got ({offset}, {scale})"
                    ));
                }
            }
            AgentKind::LatentCorrelated { rho, group } => {
                if !(0.0..=1.0).contains(rho) {
                    return bad(format!("latent-correlated needs rho in [0,1], got {rho}"));
                }
                if group.is_empty() {
                    return bad("latent-correlated needs a nonempty group".into());
                }
            }
            AgentKind::Empirical { file, values } => {
                if values.is_empty() {
                    return Err(SampleError::EmpiricalFile {
                        path: file.clone(),
                        message: "no samples loaded (missing file or empty)".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Loads the referenced sample file for empirical agents; no-op for
    /// other kinds. `base` is the directory of the graph file.
    pub fn resolve_files(&mut self, base: &std::path::Path) -> Result<(), SampleError> {
        if let AgentKind::Empirical { file, values } = &mut self.kind {
            let path = base.join(file.as_str());
            let text = std::fs::read_to_string(&path).map_err(|e| SampleError::EmpiricalFile {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let mut parsed = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let v: f64 = line.parse().map_err(|_| SampleError::EmpiricalFile {
                    path: path.display().to_string(),
                    message: format!("line {}: not a decimal: {line:?}", lineno + 1),
                })?;
                if v.is_nan() || v == f64::INFINITY {
                    return Err(SampleError::EmpiricalFile {
                        path: path.display().to_string(),
                        message: format!("line {}: loss must be finite or -inf", lineno + 1),
                    });
                }
                parsed.push(v);
            }
            if parsed.is_empty() {
                return Err(SampleError::EmpiricalFile {
                    path: path.display().to_string(),
                    message: "file holds no samples".into(),
                });
            }
            *values = Arc::new(parsed);
        }
        Ok(())
    }

    /// Binds the spec to an edge id, precomputing stream scopes.
    pub fn sampler(&self, edge_id: &str) -> EdgeSampler<'_> {
        let latent_scope = match &self.kind {
            AgentKind::LatentCorrelated { group, .. } => {
                label_hash(format!("latent:{group}").as_bytes())
            }
            _ => 0,
        };
        EdgeSampler {
            spec: self,
            scope: label_hash(format!("edge:{edge_id}").as_bytes()),
            latent_scope,
        }
    }
}

fn norm_inv(u: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::standard().inverse_cdf(u)
}

/// One draw from an agent: the trace (which is the loss) and the output
/// passed to the next agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub trace: f64,
    pub output: f64,
}

impl Draw {
    pub fn loss(&self) -> f64 {
        self.trace
    }
}

/// An agent bound to its edge's stream scopes. Sampling is a pure function
/// of `(input, seeds, context, index)`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSampler<'a> {
    spec: &'a AgentSpec,
    scope: u64,
    latent_scope: u64,
}

impl EdgeSampler<'_> {
    pub fn draw(
        &self,
        input: f64,
        seeds: SeedDerivation,
        ctx: StreamContext,
        index: u64,
    ) -> Result<Draw, SampleError> {
        if input.is_nan() || input == f64::INFINITY {
            return Err(SampleError::DomainMismatch(format!(
                "input must be a real or -inf, got {input}"
            )));
        }
        let mut rng = seeds.stream(self.scope, ctx, index);
        let base = match &self.spec.kind {
            AgentKind::Constant { value } => *value,
            AgentKind::Uniform { low, high } => low + (high - low) * rng.next_uniform(),
            AgentKind::Gaussian { mu, sigma } => mu + sigma * norm_inv(rng.next_uniform()),
            AgentKind::Exponential { rate } => -rng.next_uniform().ln() / rate,
            AgentKind::ShiftedMinDistance { offset, scale } => {
                -(offset + scale * norm_inv(rng.next_uniform()).abs())
            }
            AgentKind::LatentCorrelated { rho, .. } => {
                let z = norm_inv(seeds.stream(self.latent_scope, ctx, index).next_uniform());
                rho * z + (1.0 - rho * rho).sqrt() * norm_inv(rng.next_uniform())
            }
            AgentKind::Empirical { values, .. } => {
                values[(rng.next_u64() % values.len() as u64) as usize]
            }
        };
        let trace = if self.spec.accumulate_input {
            base + input
        } else {
            base
        };
        let output = match &self.spec.output_rule {
            OutputRule::Passthrough => input,
            OutputRule::Constant { value } => *value,
            OutputRule::Offset { delta } => trace + delta,
        };
        Ok(Draw { trace, output })
    }
}

/// Initial input distribution at the source vertex.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSpec {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    Gaussian { mu: f64, sigma: f64 },
}

impl InitialSpec {
    pub fn validate(&self) -> Result<(), SampleError> {
        match self {
            InitialSpec::Constant { value } if value.is_finite() => Ok(()),
            InitialSpec::Constant { value } => Err(SampleError::InvalidParams(format!(
                "initial constant must be finite, got {value}"
            ))),
            InitialSpec::Uniform { low, high } if low.is_finite() && high.is_finite() && low < high => Ok(()),
            InitialSpec::Uniform { low, high } => Err(SampleError::InvalidParams(format!(
                "initial uniform needs low < high, got [{low}, {high}]"
            ))),
            InitialSpec::Gaussian { mu, sigma } if mu.is_finite() && *sigma > 0.0 => Ok(()),
            InitialSpec::Gaussian { mu, sigma } => Err(SampleError::InvalidParams(format!(
                "initial gaussian needs sigma > 0, got ({mu}, {sigma})"
            ))),
        }
    }

    pub fn draw(&self, seeds: SeedDerivation, ctx: StreamContext, index: u64) -> f64 {
        let scope = label_hash(b"initial");
        let mut rng = seeds.stream(scope, ctx, index);
        match self {
            InitialSpec::Constant { value } => *value,
            InitialSpec::Uniform { low, high } => low + (high - low) * rng.next_uniform(),
            InitialSpec::Gaussian { mu, sigma } => mu + sigma * norm_inv(rng.next_uniform()),
        }
    }
}
