//! Versioned plain-text model format.
//!
//! ```text
//! contilearn-model v1
//! status completed
//! input_dim 2
//! standardization_mean <d values>
//! standardization_scale <d values>
//! layers <N>
//! layer <i> input_dim <m> k <k>
//! v0 <m values>
//! u <m values>            (k lines)
//! scales <values>
//! parameters <values>
//! precisions <one per pass>
//! config key=value ...
//! end
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly; saving a loaded file reproduces it byte for byte.

use std::fmt::Write as _;

use contilearn_core::featuremap::{Layer, RecursiveFeatureMap};
use contilearn_core::model::predict_prob;
use contilearn_core::Standardization;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "contilearn-model";
pub const VERSION: u32 = 1;

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_reals(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| fmt_real(*x))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub status: String,
    pub map: RecursiveFeatureMap,
    pub parameters: Vec<f64>,
    /// Prior precision chosen on each pass.
    pub precisions: Vec<f64>,
    pub config: RunConfig,
}

impl ModelFile {
    pub fn new(
        status: &str,
        map: RecursiveFeatureMap,
        parameters: Vec<f64>,
        precisions: Vec<f64>,
        config: RunConfig,
    ) -> CliResult<Self> {
        if parameters.len() != map.output_dim() {
            return Err(CliError::Model(format!(
                "parameter vector has {} entries but the feature map produces {}",
                parameters.len(),
                map.output_dim()
            )));
        }
        Ok(ModelFile {
            status: status.to_owned(),
            map,
            parameters,
            precisions,
            config,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.map.input_dim()
    }

    /// `P(y = 1 | x)` for a raw input row.
    pub fn predict(&self, raw: &[f64]) -> CliResult<f64> {
        let f = self.map.evaluate(raw)?;
        Ok(predict_prob(&self.parameters, &f)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let st = self.map.standardization();
        writeln!(s, "{MAGIC} v{VERSION}").unwrap();
        writeln!(s, "status {}", self.status).unwrap();
        writeln!(s, "input_dim {}", st.dim()).unwrap();
        writeln!(s, "standardization_mean {}", fmt_reals(&st.mean)).unwrap();
        writeln!(s, "standardization_scale {}", fmt_reals(&st.scale)).unwrap();
        writeln!(s, "layers {}", self.map.layers().len()).unwrap();
        for (i, layer) in self.map.layers().iter().enumerate() {
            writeln!(
                s,
                "layer {i} input_dim {} k {}",
                layer.input_dim(),
                layer.k()
            )
            .unwrap();
            writeln!(s, "v0 {}", fmt_reals(layer.mean_solution())).unwrap();
            for u in layer.components() {
                writeln!(s, "u {}", fmt_reals(u)).unwrap();
            }
            writeln!(s, "scales {}", fmt_reals(layer.scales())).unwrap();
        }
        writeln!(s, "parameters {}", fmt_reals(&self.parameters)).unwrap();
        writeln!(s, "precisions {}", fmt_reals(&self.precisions)).unwrap();
        writeln!(s, "config {}", self.config.echo()).unwrap();
        writeln!(s, "end").unwrap();
        s
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = Lines::new(text);
        let header = lines.next_line()?;
        match header.split_once(" v") {
            Some((MAGIC, v)) if v == VERSION.to_string() => {}
            Some((MAGIC, v)) => {
                return Err(CliError::Model(format!(
                    "unsupported model format version {v:?} (expected {VERSION})"
                )))
            }
            _ => return Err(CliError::Model("not a contilearn model file".into())),
        }
        let status = lines.keyed("status")?.to_owned();
        let d: usize = lines.keyed_usize("input_dim")?;
        let mean = lines.keyed_reals("standardization_mean", d)?;
        let scale = lines.keyed_reals("standardization_scale", d)?;
        if scale.iter().any(|s| !(*s > 0.0)) {
            return Err(CliError::Model(
                "standardization scales must be positive".into(),
            ));
        }
        let n_layers = lines.keyed_usize("layers")?;
        let mut layers = Vec::with_capacity(n_layers);
        for i in 0..n_layers {
            let head = lines.keyed("layer")?;
            let fields: Vec<&str> = head.split_whitespace().collect();
            let (m, k) = match fields.as_slice() {
                [idx, "input_dim", m, "k", k] if *idx == i.to_string() => {
                    (parse_usize(m)?, parse_usize(k)?)
                }
                _ => return Err(CliError::Model(format!("malformed layer header {head:?}"))),
            };
            let v0 = lines.keyed_reals("v0", m)?;
            let components = (0..k)
                .map(|_| lines.keyed_reals("u", m))
                .collect::<CliResult<Vec<_>>>()?;
            let out = (k + 1) + (k + 1) * (k + 2) / 2;
            let scales = lines.keyed_reals("scales", out)?;
            let layer = Layer::new(v0, components, scales)
                .map_err(|e| CliError::Model(format!("layer {i}: {e}")))?;
            layers.push(layer);
        }
        let map = RecursiveFeatureMap::from_layers(Standardization { mean, scale }, layers)
            .map_err(|e| CliError::Model(format!("inconsistent layer chain: {e}")))?;
        let parameters = lines.keyed_reals("parameters", map.output_dim())?;
        let precisions = lines.keyed_reals_any("precisions")?;
        let config = RunConfig::from_echo(lines.keyed("config")?)
            .map_err(|e| CliError::Model(format!("config echo: {e}")))?;
        if lines.next_line()? != "end" {
            return Err(CliError::Model("missing end marker".into()));
        }
        if lines.has_more() {
            return Err(CliError::Model("trailing content after end marker".into()));
        }
        ModelFile::new(&status, map, parameters, precisions, config)
    }
}

fn parse_usize(s: &str) -> CliResult<usize> {
    s.parse()
        .map_err(|_| CliError::Model(format!("expected a count, found {s:?}")))
}

fn parse_real(s: &str) -> CliResult<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Model(format!("expected a number, found {s:?}")))?;
    if !v.is_finite() {
        return Err(CliError::Model(format!("non-finite value {s:?}")));
    }
    Ok(v)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().peekable(),
        }
    }

    fn next_line(&mut self) -> CliResult<&'a str> {
        self.inner
            .next()
            .ok_or_else(|| CliError::Model("unexpected end of model file".into()))
    }

    fn has_more(&mut self) -> bool {
        self.inner.peek().is_some()
    }

    /// Rest of a line that must start with `key`.
    fn keyed(&mut self, key: &str) -> CliResult<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            None if line == key => Ok(""),
            _ => Err(CliError::Model(format!("expected {key:?}, found {line:?}"))),
        }
    }

    fn keyed_usize(&mut self, key: &str) -> CliResult<usize> {
        parse_usize(self.keyed(key)?)
    }

    fn keyed_reals_any(&mut self, key: &str) -> CliResult<Vec<f64>> {
        self.keyed(key)?
            .split_whitespace()
            .map(parse_real)
            .collect()
    }

    fn keyed_reals(&mut self, key: &str, len: usize) -> CliResult<Vec<f64>> {
        let values = self.keyed_reals_any(key)?;
        if values.len() != len {
            return Err(CliError::Model(format!(
                "{key}: expected {len} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    }
}
