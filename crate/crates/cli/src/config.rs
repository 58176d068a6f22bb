use std::fmt;

use apwave_core::apfunc::{
    module_basis_with_shape, FreqModule, Frequency, IrrationalBasis, IrrationalBasisDoc, TrigDoc, TrigPolynomial,
};
use apwave_core::apfunc::rational::parse_rational;
use apwave_core::flux::{FluxDoc, PiecewiseFlux};
use apwave_core::solver::{FluxRule, SchemeConfig};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Decay,
    Travelwave,
    Contract,
    LiftCompare,
    NondegCheck,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Simulate => "simulate",
            Self::Decay => "decay",
            Self::Travelwave => "travelwave",
            Self::Contract => "contract",
            Self::LiftCompare => "lift-compare",
            Self::NondegCheck => "nondeg-check",
        };
        f.write_str(name)
    }
}

/// Frame the lifted flux is written in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Lab,
    /// Moving with the slope of the flux on its affine vicinity of the mean.
    Affine,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub rule: Option<FluxRule>,
    pub cfl: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactWave {
    pub level: f64,
    pub delta: f64,
    pub xi: f64,
    pub tau: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest allowed final decay value.
    pub decay_final: Option<f64>,
    /// Slack on monotonicity of decay and distance series.
    pub monotone_slack: Option<f64>,
    /// Largest allowed change of the decay series over the run.
    pub decay_change: Option<f64>,
    pub exact_wave: Option<f64>,
    pub mean_drift: Option<f64>,
    pub range_excess: Option<f64>,
    pub allowance: Option<f64>,
    pub lift: Option<f64>,
    pub ergodic: Option<f64>,
    pub seminorm: Option<f64>,
    pub quantile: Option<f64>,
    pub affine: Option<f64>,
    pub mean: Option<f64>,
    pub leakage: Option<f64>,
    pub speed_quanta: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSection {
    /// Time of the direct-versus-lifted comparison.
    pub t: Option<f64>,
    pub max_denominator: Option<u64>,
    /// Cells per torus axis and per unit length, refined jointly.
    pub refinements: Option<Vec<usize>>,
    pub ergodic_windows: Option<Vec<f64>>,
    pub ergodic_cells: Option<usize>,
    #[serde(default)]
    pub seminorm: bool,
}

/// On-disk experiment description. Polynomials, fluxes and modules are JSON
/// documents embedded as strings.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: Option<Kind>,
    pub flux: Option<String>,
    pub initial: Option<String>,
    pub initial_b: Option<String>,
    pub module: Option<String>,
    pub level: Option<f64>,
    pub cells: Option<usize>,
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub binary_snapshots: bool,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub exact_wave: Option<ExactWave>,
    #[serde(default)]
    pub lift: LiftSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleDoc {
    irrational_basis: IrrationalBasisDoc,
    #[serde(default = "one")]
    dim: usize,
    generators: Vec<Vec<Vec<String>>>,
}

fn one() -> usize {
    1
}

/// Parsed inputs shared by all kinds.
pub struct Inputs {
    pub flux: Option<PiecewiseFlux>,
    pub initial: Option<(TrigPolynomial, IrrationalBasis)>,
    pub initial_b: Option<TrigPolynomial>,
    pub module: Option<(FreqModule, IrrationalBasis)>,
    pub scheme: SchemeConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        toml::from_str(text).map_err(|e| vec![format!("config: {e}")])
    }

    /// Checks every field needed by `kind`, collecting all violations.
    pub fn validate(&self, kind: Kind) -> Result<Inputs, Vec<String>> {
        let mut errs = Vec::new();
        if let Some(k) = self.kind {
            if k != kind {
                errs.push(format!("kind: config is for {k}, command line asks for {kind}"));
            }
        }
        let needs_initial = kind != Kind::NondegCheck || self.module.is_none();
        let flux = match &self.flux {
            Some(s) => FluxDoc::parse(s).map_err(|e| errs.push(format!("flux: {e}"))).ok(),
            None => {
                errs.push("flux: required".into());
                None
            }
        };
        let initial = match &self.initial {
            Some(s) => TrigDoc::parse(s).map_err(|e| errs.push(format!("initial: {e}"))).ok(),
            None if needs_initial => {
                errs.push("initial: required".into());
                None
            }
            None => None,
        };
        let initial_b = match &self.initial_b {
            Some(s) => match TrigDoc::parse(s) {
                Ok((p, b)) => {
                    if let Some((_, b0)) = &initial {
                        if b0.values() != b.values() {
                            errs.push("initial_b: irrational basis differs from initial".into());
                        }
                    }
                    Some(p)
                }
                Err(e) => {
                    errs.push(format!("initial_b: {e}"));
                    None
                }
            },
            None if kind == Kind::Contract => {
                errs.push("initial_b: required for contract".into());
                None
            }
            None => None,
        };
        let module = match &self.module {
            Some(s) => parse_module(s).map_err(|e| errs.push(format!("module: {e}"))).ok(),
            None => None,
        };
        if let (Some(f), Some((p, _))) = (&flux, &initial) {
            if f.dim() != p.dim() {
                errs.push(format!("flux: {} components for {}-dimensional data", f.dim(), p.dim()));
            }
        }
        let scheme = SchemeConfig {
            rule: self.scheme.rule.unwrap_or(FluxRule::Godunov),
            cfl: self.scheme.cfl.unwrap_or(0.45),
            ..SchemeConfig::default()
        };
        if !(scheme.cfl > 0.0) {
            errs.push(format!("scheme.cfl: must be positive, got {}", scheme.cfl));
        }
        if matches!(kind, Kind::Simulate | Kind::Decay | Kind::Travelwave | Kind::Contract) {
            match self.cells {
                Some(0) => errs.push("cells: must be positive".into()),
                None => errs.push("cells: required".into()),
                _ => {}
            }
        }
        if let (Some(n), Some((u0, _))) = (self.cells, &initial) {
            let rank = apwave_core::lifting::spectrum_module(u0).rank();
            if n > 0 {
                if let Err(e) = apwave_core::solver::TorusGrid::uniform(rank, n) {
                    errs.push(format!("cells: {e}"));
                }
            }
        }
        if matches!(kind, Kind::Simulate | Kind::Decay) {
            match &self.times {
                None => errs.push("times: required".into()),
                Some(t) if t.is_empty() => errs.push("times: must not be empty".into()),
                Some(t) if t.iter().any(|x| !(*x >= 0.0)) || t.windows(2).any(|w| !(w[1] > w[0])) => {
                    errs.push("times: must be nonnegative and strictly increasing".into())
                }
                _ => {}
            }
        }
        if kind == Kind::Travelwave || kind == Kind::Contract {
            if let Some(t) = &self.times {
                if t.len() < 3 || t.iter().any(|x| !(*x > 0.0)) || t.windows(2).any(|w| !(w[1] > w[0])) {
                    errs.push("times: need at least three positive increasing entries".into());
                }
            }
        }
        if kind == Kind::LiftCompare {
            let l = &self.lift;
            if l.t.is_none() && l.ergodic_windows.is_none() && !l.seminorm {
                errs.push("lift: set t, ergodic_windows or seminorm".into());
            }
            if l.t.is_some() && l.refinements.as_ref().is_none_or(|r| r.is_empty()) {
                errs.push("lift.refinements: required with lift.t".into());
            }
            if let Some(w) = &l.ergodic_windows {
                if w.iter().any(|x| !(*x > 0.0)) {
                    errs.push("lift.ergodic_windows: must be positive".into());
                }
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("decay_final", t.decay_final),
            ("monotone_slack", t.monotone_slack),
            ("decay_change", t.decay_change),
            ("exact_wave", t.exact_wave),
            ("mean_drift", t.mean_drift),
            ("range_excess", t.range_excess),
            ("allowance", t.allowance),
            ("lift", t.lift),
            ("ergodic", t.ergodic),
            ("seminorm", t.seminorm),
            ("quantile", t.quantile),
            ("affine", t.affine),
            ("mean", t.mean),
            ("leakage", t.leakage),
            ("speed_quanta", t.speed_quanta),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    errs.push(format!("tolerances.{name}: must be positive, got {v}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(Inputs {
                flux,
                initial,
                initial_b,
                module,
                scheme,
            })
        } else {
            Err(errs)
        }
    }
}

fn parse_module(json: &str) -> apwave_core::Result<(FreqModule, IrrationalBasis)> {
    let doc: ModuleDoc = serde_json::from_str(json)?;
    let basis = IrrationalBasis::try_from(doc.irrational_basis)?;
    let gens = doc
        .generators
        .iter()
        .map(|rows| {
            let coords = rows
                .iter()
                .map(|row| row.iter().map(|s| parse_rational(s)).collect::<apwave_core::Result<Vec<_>>>())
                .collect::<apwave_core::Result<Vec<_>>>()?;
            Frequency::new(coords)
        })
        .collect::<apwave_core::Result<Vec<_>>>()?;
    Ok((module_basis_with_shape(&gens, doc.dim, basis.len()), basis))
}
