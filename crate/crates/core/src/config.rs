//! Run configuration: one JSON document with device, solver, integrator,
//! drive, pulse, evolve and gate sections.
//!
//! Unknown keys are rejected everywhere. Only the device section is
//! required; every other field falls back to its default, and the fully
//! resolved document is what gets echoed next to the outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::{Coupling, DeviceParams, Screening};
use crate::drive::{DriveOptions, DriveSchedule, Envelope, Line, PulseSpec};
use crate::error::{Error, Result};
use crate::gates::GateSettings;
use crate::label::StateLabel;
use crate::propagator::IntegratorConfig;
use crate::spectral::{SolverConfig, TransitionTable};

/// Device parameters in lab units. `beta_L`/`Ic_uA` and `kappa`/`M_pH`
/// are alternatives: exactly one of each pair must be present.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(rename = "L_pH")]
    pub l_ph: f64,
    #[serde(rename = "C_fF")]
    pub c_ff: f64,
    #[serde(rename = "beta_L", default, skip_serializing_if = "Option::is_none")]
    pub beta_l: Option<f64>,
    #[serde(rename = "Ic_uA", default, skip_serializing_if = "Option::is_none")]
    pub ic_ua: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(rename = "M_pH", default, skip_serializing_if = "Option::is_none")]
    pub m_ph: Option<f64>,
    pub xe1: f64,
    pub xe2: f64,
}

impl DeviceSection {
    fn check_exclusive(&self) -> Result<()> {
        let pairs = [
            ("beta_L", self.beta_l.is_some(), "Ic_uA", self.ic_ua.is_some()),
            ("kappa", self.kappa.is_some(), "M_pH", self.m_ph.is_some()),
        ];
        for (a, has_a, b, has_b) in pairs {
            if has_a == has_b {
                let message = if has_a {
                    format!("{a} and {b} are mutually exclusive")
                } else {
                    format!("one of {a} or {b} is required")
                };
                return Err(Error::Schema { path: format!("device.{a}"), message });
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<DeviceParams> {
        self.check_exclusive()?;
        let screening = match (self.beta_l, self.ic_ua) {
            (Some(b), _) => Screening::BetaL(b),
            (_, Some(ic)) => Screening::CriticalCurrent(ic / 1e6),
            _ => unreachable!("checked above"),
        };
        let coupling = match (self.kappa, self.m_ph) {
            (Some(k), _) => Coupling::Kappa(k),
            (_, Some(m)) => Coupling::MutualInductance(m / 1e12),
            _ => unreachable!("checked above"),
        };
        Ok(DeviceParams {
            inductance: self.l_ph / 1e12,
            capacitance: self.c_ff / 1e15,
            screening,
            coupling,
            xe1: self.xe1,
            xe2: self.xe2,
        })
    }
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn rectangular() -> Envelope {
    Envelope::Rectangular
}

/// One pulse. The carrier is either `omega` (units of omega_LC) or
/// `resonant_with`, a pair of computational labels whose spacing is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub line: Line,
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonant_with: Option<[StateLabel; 2]>,
    #[serde(default)]
    pub phase: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub t_start: f64,
    pub width: f64,
    #[serde(default = "rectangular")]
    pub envelope: Envelope,
}

impl PulseConfig {
    pub fn resolve(&self, table: Option<&TransitionTable>) -> Result<PulseSpec> {
        let omega = match (self.omega, self.resonant_with, table) {
            (Some(w), None, _) => w,
            (None, Some([a, b]), Some(t)) => t.delta(a, b).abs(),
            // Placeholder for validation before the spectrum exists.
            (None, Some(_), None) => 1.0,
            _ => {
                return Err(Error::Schema {
                    path: "pulses[].omega".into(),
                    message: "exactly one of omega or resonant_with is required".into(),
                })
            }
        };
        let p = PulseSpec {
            line: self.line,
            amplitude: self.amplitude,
            omega,
            phase: self.phase,
            t_start: self.t_start,
            width: self.width,
            envelope: self.envelope,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub initial_state: StateLabel,
    /// Defaults to the end of the last pulse.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection { initial_state: StateLabel::L00, duration: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub drive: DriveOptions,
    #[serde(default)]
    pub pulses: Vec<PulseConfig>,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub gates: GateSettings,
}

impl RunConfig {
    /// The working point the shipped `configs/reference_defaults.json` holds:
    /// L = 100 pH, C = 40 fF, beta_L = 1.2, kappa = 5e-4, xe = (0.499,
    /// 0.4998), with one pi/2 pulse on `|00> <-> |10>`.
    pub fn reference_defaults() -> Self {
        RunConfig {
            device: DeviceSection {
                l_ph: 100.0,
                c_ff: 40.0,
                beta_l: Some(1.2),
                ic_ua: None,
                kappa: Some(5e-4),
                m_ph: None,
                xe1: 0.499,
                xe2: 0.4998,
            },
            solver: SolverConfig::default(),
            integrator: IntegratorConfig::default(),
            drive: DriveOptions::default(),
            pulses: vec![PulseConfig {
                line: Line::C,
                amplitude: 5e-5,
                omega: None,
                resonant_with: Some([StateLabel::L00, StateLabel::L10]),
                phase: -std::f64::consts::FRAC_PI_2,
                t_start: 0.0,
                width: 86320.0,
                envelope: Envelope::Rectangular,
            }],
            evolve: EvolveSection::default(),
            gates: GateSettings::default(),
        }
    }

    /// Parses and validates. Schema problems come back as
    /// [`Error::Schema`] with the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Schema { path: if path == "." { "<root>".into() } else { path }, message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Schema checks the type system does not express, then the physical
    /// invariants of every section.
    pub fn validate(&self) -> Result<()> {
        self.device.check_exclusive()?;
        for p in &self.pulses {
            p.resolve(None)?;
        }
        crate::device::derive_constants(&self.device.params()?)?;
        self.solver.validate()?;
        let max_omega = self.pulses.iter().filter_map(|p| p.omega).fold(0.0, f64::max);
        self.integrator.validate(max_omega)?;
        if let Some(d) = self.evolve.duration {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Configuration(format!("evolve.duration must be positive, got {d}")));
            }
        }
        Ok(())
    }

    pub fn device_params(&self) -> Result<DeviceParams> {
        self.device.params()
    }

    /// Pulses with carriers resolved against the transition table.
    pub fn schedule(&self, table: &TransitionTable) -> Result<DriveSchedule> {
        let pulses = self.pulses.iter().map(|p| p.resolve(Some(table))).collect::<Result<Vec<_>>>()?;
        DriveSchedule::new(pulses)
    }

    /// Copy with the value at a dotted path (`device.kappa`,
    /// `pulses.0.width`) replaced by `value`, revalidated.
    pub fn with_override(&self, path: &str, value: serde_json::Value) -> Result<Self> {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        let schema = |message: String| Error::Schema { path: path.to_string(), message };
        let mut slot = &mut doc;
        let parts: Vec<&str> = path.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            slot = match slot {
                serde_json::Value::Object(map) => {
                    if last {
                        map.entry(part.to_string()).or_insert(serde_json::Value::Null)
                    } else {
                        map.get_mut(*part).ok_or_else(|| schema(format!("no section {part:?}")))?
                    }
                }
                serde_json::Value::Array(items) => {
                    let k: usize = part.parse().map_err(|_| schema(format!("{part:?} is not an index")))?;
                    items.get_mut(k).ok_or_else(|| schema(format!("index {k} out of range")))?
                }
                _ => return Err(schema(format!("cannot descend into {part:?}"))),
            };
        }
        *slot = value;
        Self::from_json(&doc.to_string())
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Schema { path: path.display().to_string(), message: format!("cannot read config: {e}") })?;
    RunConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "device": {"L_pH": 100.0, "C_fF": 40.0, "beta_L": 1.2, "kappa": 5e-4, "xe1": 0.499, "xe2": 0.4998}
        })
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(&minimal().to_string()).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert!(cfg.pulses.is_empty());
        assert_eq!(cfg.device_params().unwrap(), DeviceParams::reference_defaults());
    }

    #[test]
    fn resolved_round_trip() {
        let cfg = RunConfig::reference_defaults();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_reports_path() {
        let mut v = minimal();
        v["solver"] = serde_json::json!({"n_pts": 10});
        match RunConfig::from_json(&v.to_string()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "solver.n_pts"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exclusive_pairs() {
        let mut v = minimal();
        v["device"]["Ic_uA"] = serde_json::json!(3.9);
        let e = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let mut v = minimal();
        v["device"].as_object_mut().unwrap().remove("kappa");
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema { .. })));
    }

    #[test]
    fn physics_violation_is_not_schema() {
        let mut v = minimal();
        v["device"]["xe1"] = serde_json::json!(1.5);
        let e = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn lab_units_convert() {
        let mut v = minimal();
        let obj = v["device"].as_object_mut().unwrap();
        obj.remove("beta_L");
        obj.remove("kappa");
        obj.insert("Ic_uA".into(), serde_json::json!(3.9494));
        obj.insert("M_pH".into(), serde_json::json!(0.025));
        let p = RunConfig::from_json(&v.to_string()).unwrap().device_params().unwrap();
        assert!((p.beta_l() - 1.2).abs() < 1e-4);
        assert!((p.kappa() - 5e-4).abs() < 1e-15);
    }

    #[test]
    fn override_by_path() {
        let cfg = RunConfig::reference_defaults();
        let c2 = cfg.with_override("device.kappa", serde_json::json!(1e-3)).unwrap();
        assert_eq!(c2.device.kappa, Some(1e-3));
        let c3 = cfg.with_override("pulses.0.width", serde_json::json!(10.0)).unwrap();
        assert_eq!(c3.pulses[0].width, 10.0);
        assert!(cfg.with_override("nope.x", serde_json::json!(1)).is_err());
    }

    #[test]
    fn pulse_needs_one_carrier() {
        let mut v = minimal();
        v["pulses"] = serde_json::json!([{"line": "C", "amplitude": 1e-5, "width": 10.0}]);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema { .. })));
    }
}
