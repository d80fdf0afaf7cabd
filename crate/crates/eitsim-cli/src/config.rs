//! JSON run configuration: either an explicit cavity list or the uniform
//! shorthand, plus grid, method, and output choices. Unknown keys are schema
//! errors so golden outputs cannot silently drift.

use crate::commands::CliError;
use eitsim::model::{uniform_chain, ChainConfig, Method, ProbeGrid};
use eitsim::Complex64;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Uniform chain shorthand; mutually exclusive with `chain`.
    #[serde(default)]
    pub uniform: Option<UniformSpec>,
    /// Explicit cavity list (0-based array of cavities 1..N).
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    /// Probe grid; derived from the chain when omitted.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub method: Option<MethodSpec>,
    /// Default output path, overridden by --out.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Default SVG path, overridden by --svg.
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformSpec {
    pub n: usize,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub delta: f64,
    /// Complex drive amplitude as a `[re, im]` pair; defaults to `[1, 0]`.
    #[serde(default)]
    pub a_in: Option<Complex64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Solver,
    Closed,
    Decoupled,
}

impl MethodSpec {
    fn to_method(self) -> Method {
        match self {
            MethodSpec::Solver => Method::GeneralSolver,
            MethodSpec::Closed => Method::ClosedForm,
            MethodSpec::Decoupled => Method::Decoupled,
        }
    }
}

/// A run configuration with every choice made.
#[derive(Debug)]
pub struct ResolvedRun {
    pub chain: ChainConfig,
    pub grid: ProbeGrid,
    pub method: Method,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// One-line description for logs and plot titles.
    pub label: String,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

pub fn resolve(
    run: RunConfig,
    method_flag: Option<Method>,
    points_flag: Option<usize>,
) -> Result<ResolvedRun, CliError> {
    let (chain, spacing_hint, label) = match (run.uniform, run.chain) {
        (Some(uniform), None) => {
            let mut chain = uniform_chain(
                uniform.n,
                uniform.kappa0,
                uniform.kappa1,
                uniform.kappa2,
                uniform.delta,
            )
            .map_err(|e| CliError::Schema(format!("uniform: {e}")))?;
            if let Some(a_in) = uniform.a_in {
                chain.a_in = a_in;
            }
            let label = format!(
                "uniform n={} kappa0={} kappa1={} kappa2={} delta={}",
                uniform.n, uniform.kappa0, uniform.kappa1, uniform.kappa2, uniform.delta
            );
            (chain, Some(uniform.delta.abs()), label)
        }
        (None, Some(chain)) => {
            let label = format!("chain n={}", chain.len());
            (chain, None, label)
        }
        _ => {
            return Err(CliError::Schema(
                "config must set exactly one of `uniform` or `chain`".into(),
            ))
        }
    };

    let validation = chain.validate();
    if !validation.is_valid() {
        return Err(CliError::Schema(format!("chain: {validation}")));
    }

    let mut grid = match run.grid {
        Some(g) => ProbeGrid::new(g.start, g.stop, g.points)
            .map_err(|e| CliError::Schema(format!("grid: {e}")))?,
        None => default_grid(&chain, spacing_hint),
    };
    if let Some(points) = points_flag {
        grid = ProbeGrid::new(grid.start, grid.stop, points)
            .map_err(|e| CliError::Schema(format!("--points: {e}")))?;
    }

    let method =
        method_flag.or(run.method.map(MethodSpec::to_method)).unwrap_or(Method::GeneralSolver);

    Ok(ResolvedRun { chain, grid, method, out: run.out, svg: run.svg, label })
}

/// Three spacings of margin on each side of the chain, about 2000 grid
/// intervals per spacing.
pub fn default_grid(chain: &ChainConfig, spacing_hint: Option<f64>) -> ProbeGrid {
    let omega_min = chain.cavities.iter().map(|c| c.omega).fold(f64::INFINITY, f64::min);
    let omega_max = chain.cavities.iter().map(|c| c.omega).fold(f64::NEG_INFINITY, f64::max);
    let mut spacing = spacing_hint.unwrap_or_else(|| {
        if chain.len() >= 2 {
            (omega_max - omega_min) / (chain.len() - 1) as f64
        } else {
            1.0
        }
    });
    if !(spacing > 0.0) {
        spacing = 1.0;
    }
    let start = omega_min - 3.0 * spacing;
    let stop = omega_max + 3.0 * spacing;
    let points = ((stop - start) / spacing * 2000.0).round() as usize + 1;
    ProbeGrid::new(start, stop, points).expect("derived grid is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> RunConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn resolves_the_uniform_shorthand() {
        let run = parse(
            r#"{"uniform": {"n": 2, "kappa0": 0.002, "kappa1": 2.0, "kappa2": 2.0, "delta": 1.0},
                "grid": {"start": -3.0, "stop": 4.0, "points": 101}, "method": "closed"}"#,
        );
        let resolved = resolve(run, None, None).unwrap();
        assert_eq!(resolved.chain.len(), 2);
        assert_eq!(resolved.grid.points, 101);
        assert_eq!(resolved.method, Method::ClosedForm);
    }

    #[test]
    fn default_grid_spans_three_spacings_around_the_chain() {
        let run = parse(
            r#"{"uniform": {"n": 2, "kappa0": 0.0, "kappa1": 2.0, "kappa2": 2.0, "delta": 1.0}}"#,
        );
        let resolved = resolve(run, None, None).unwrap();
        assert_eq!(resolved.grid.start, -3.0);
        assert_eq!(resolved.grid.stop, 4.0);
        assert_eq!(resolved.grid.points, 14001);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = serde_json::from_str::<RunConfig>(r#"{"uniforms": {}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn requires_exactly_one_chain_source() {
        let neither = parse(r#"{}"#);
        assert!(matches!(resolve(neither, None, None), Err(CliError::Schema(_))));
        let both = parse(
            r#"{"uniform": {"n": 1, "kappa0": 0.0, "kappa1": 1.0, "kappa2": 1.0, "delta": 1.0},
                "chain": {"cavities": [{"omega": 0.0, "kappa0": 0.0, "kappa1": 1.0, "kappa2": 1.0}]}}"#,
        );
        assert!(matches!(resolve(both, None, None), Err(CliError::Schema(_))));
    }

    #[test]
    fn explicit_chains_parse_with_defaulted_fields() {
        let run = parse(
            r#"{"chain": {"cavities": [
                    {"omega": 0.0, "kappa0": 0.0, "kappa1": 1.0, "kappa2": 1.0},
                    {"omega": 1.0, "kappa0": 0.0, "kappa1": 1.0, "kappa2": 1.0, "phi_next": 0.5}
                ]}}"#,
        );
        let resolved = resolve(run, None, None).unwrap();
        assert_eq!(resolved.chain.cavities[0].phi_next, 0.0);
        assert_eq!(resolved.chain.cavities[1].phi_next, 0.5);
        assert_eq!(resolved.chain.a_in, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn semantic_violations_are_schema_errors() {
        let run = parse(
            r#"{"chain": {"cavities": [
                    {"omega": 0.0, "kappa0": 0.0, "kappa1": -1.0, "kappa2": 1.0}
                ]}}"#,
        );
        match resolve(run, None, None) {
            Err(CliError::Schema(message)) => assert!(message.contains("negative rate")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
