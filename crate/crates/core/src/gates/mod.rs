//! The gate layer: conditional decomposition of single-qubit gates, pulse
//! schedules for rotations, CNOT and Bell preparation, pi-pulse
//! calibration and gate scoring.

pub mod calibration;
pub mod decomposition;
pub mod evaluate;
pub mod schedule;

pub use calibration::{calibrate_pi_pulse, rwa_rabi_frequency, RabiCalibration};
pub use decomposition::{decompose_single_qubit, ConditionalGatePair, SingleQubitGate};
pub use evaluate::{extract_rotation_angle, AngleExtraction, GateResult, InitialStateRun, WidthScan};
pub use schedule::{GateDesigner, GateSchedule, GateSettings, RabiSource, RotationMode};
