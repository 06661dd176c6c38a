use serde::{Deserialize, Serialize};

use crate::hamiltonian::ChannelId;

use super::{Instruction, LibraryError};

/// One line of a scheduled deck: a pulse (`name` is its sample reference)
/// or a frame change (`name` is `fc`, `duration` 0, `phase` set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeckEntry {
    pub name: String,
    pub channel: ChannelId,
    pub time: i64,
    pub duration: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

impl DeckEntry {
    pub fn is_frame_change(&self) -> bool {
        self.phase.is_some()
    }
}

/// A globally scheduled, time-ordered list of pulses and frame changes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Deck {
    pub entries: Vec<DeckEntry>,
}

impl Deck {
    /// Flattens a scheduled analog program.
    pub fn from_program(program: &Instruction) -> Result<Self, LibraryError> {
        let entries = program
            .as_flat_pulse_list()?
            .into_iter()
            .map(|leaf| match leaf {
                Instruction::Pulse {
                    channel,
                    t0,
                    duration,
                    sample_ref,
                    ..
                } => DeckEntry {
                    name: sample_ref,
                    channel,
                    time: t0,
                    duration,
                    phase: None,
                },
                Instruction::FrameChange { channel, t0, phase } => DeckEntry {
                    name: "fc".into(),
                    channel,
                    time: t0,
                    duration: 0,
                    phase: Some(phase),
                },
                _ => unreachable!("flattening yields only leaves"),
            })
            .collect();
        Ok(Self { entries })
    }

    /// Latest `time + duration`, or 0 for an empty deck.
    pub fn end_time(&self) -> i64 {
        self.entries.iter().map(|e| e.time + e.duration).max().unwrap_or(0)
    }

    /// JSON array with one entry object per line.
    pub fn to_json(&self) -> String {
        if self.entries.is_empty() {
            return "[]\n".to_string();
        }
        let lines: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("  {}", serde_json::to_string(e).expect("deck entry serializes")))
            .collect();
        format!("[\n{}\n]\n", lines.join(",\n"))
    }

    pub fn from_json(json_text: &str) -> Result<Self, LibraryError> {
        let entries: Vec<DeckEntry> = serde_json::from_str(json_text).map_err(|e| LibraryError::Json(e.to_string()))?;
        for e in &entries {
            if e.time < 0 || e.duration < 0 {
                return Err(LibraryError::NegativeTime(format!("{} at {}", e.name, e.time)));
            }
        }
        Ok(Self { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_and_round_trip() {
        let deck = Deck {
            entries: vec![
                DeckEntry {
                    name: "fc".into(),
                    channel: ChannelId::drive(0),
                    time: 0,
                    duration: 0,
                    phase: Some(-std::f64::consts::PI),
                },
                DeckEntry {
                    name: "X_PI_2_D0p".into(),
                    channel: ChannelId::drive(0),
                    time: 0,
                    duration: 28,
                    phase: None,
                },
            ],
        };
        let text = deck.to_json();
        assert_eq!(
            text,
            "[\n  {\"name\":\"fc\",\"channel\":\"d0\",\"time\":0,\"duration\":0,\"phase\":-3.141592653589793},\n  {\"name\":\"X_PI_2_D0p\",\"channel\":\"d0\",\"time\":0,\"duration\":28}\n]\n"
        );
        assert_eq!(Deck::from_json(&text).unwrap(), deck);
        assert_eq!(deck.end_time(), 28);
        assert_eq!(Deck::default().to_json(), "[]\n");
        assert!(Deck::from_json("[{\"name\":\"p\",\"channel\":\"d0\",\"time\":-1,\"duration\":2}]").is_err());
    }
}
