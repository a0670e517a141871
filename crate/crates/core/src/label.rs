use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Computational basis label `|ij>`: `i` is the control qubit (qubit 1),
/// `j` the target qubit (qubit 2).
///
/// The ordering `00, 01, 10, 11` matches the eigenstate numbering
/// `|1), |2), |3), |4)` used for the coupled system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateLabel {
    L00,
    L01,
    L10,
    L11,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [StateLabel::L00, StateLabel::L01, StateLabel::L10, StateLabel::L11];

    pub fn from_bits(control: u8, target: u8) -> Self {
        match (control & 1, target & 1) {
            (0, 0) => StateLabel::L00,
            (0, 1) => StateLabel::L01,
            (1, 0) => StateLabel::L10,
            _ => StateLabel::L11,
        }
    }

    /// Position in the `00, 01, 10, 11` ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    pub fn control(self) -> u8 {
        (self.index() >> 1) as u8
    }

    pub fn target(self) -> u8 {
        (self.index() & 1) as u8
    }

    /// Same target state, control flipped.
    pub fn flip_control(self) -> Self {
        Self::from_bits(1 - self.control(), self.target())
    }

    pub fn flip_target(self) -> Self {
        Self::from_bits(self.control(), 1 - self.target())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::L00 => "00",
            StateLabel::L01 => "01",
            StateLabel::L10 => "10",
            StateLabel::L11 => "11",
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim().trim_start_matches('|').trim_end_matches('>');
        match t {
            "00" => Ok(StateLabel::L00),
            "01" => Ok(StateLabel::L01),
            "10" => Ok(StateLabel::L10),
            "11" => Ok(StateLabel::L11),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

impl TryFrom<String> for StateLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<StateLabel> for String {
    fn from(l: StateLabel) -> String {
        l.as_str().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_and_flips() {
        for l in StateLabel::ALL {
            assert_eq!(StateLabel::from_bits(l.control(), l.target()), l);
            assert_eq!(l.flip_control().flip_control(), l);
            assert_ne!(l.flip_target(), l);
        }
        assert_eq!(StateLabel::L01.flip_control(), StateLabel::L11);
        assert_eq!(StateLabel::L10.flip_target(), StateLabel::L11);
    }

    #[test]
    fn parse() {
        assert_eq!("|10>".parse::<StateLabel>().unwrap(), StateLabel::L10);
        assert!("2".parse::<StateLabel>().is_err());
    }
}
