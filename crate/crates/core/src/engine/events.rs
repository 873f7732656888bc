use std::io::Write;

use crate::codes::Coded;
use crate::geo::ShelterId;
use crate::risk::{Decision, WarningSource};
use crate::{Error, Result};

pub const EVENT_LOG_HEADER: [&str; 5] = ["tick", "agent_kind", "agent_id", "event", "detail"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Household,
    Rescuer,
    Shelter,
}

impl AgentKind {
    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Household => "household",
            AgentKind::Rescuer => "rescuer",
            AgentKind::Shelter => "shelter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// A rescuer told a household about the storm.
    Warned {
        household: u32,
    },
    Informed {
        source: WarningSource,
    },
    Decided {
        decision: Decision,
        perceived_risk: f64,
        highest_possible: f64,
    },
    Departed {
        shelter: ShelterId,
        distance: f64,
    },
    /// No shelter currently has room; the household waits and retries.
    Waiting,
    Admitted {
        household: u32,
        members: u32,
    },
    Redirected {
        household: u32,
        to: ShelterId,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Warned { .. } => "warned",
            Event::Informed { .. } => "informed",
            Event::Decided { .. } => "decided",
            Event::Departed { .. } => "departed",
            Event::Waiting => "waiting",
            Event::Admitted { .. } => "admitted",
            Event::Redirected { .. } => "redirected",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            Event::Warned { household } => format!("household={household}"),
            Event::Informed { source } => format!("source={}", source.label()),
            Event::Decided {
                decision,
                perceived_risk,
                highest_possible,
            } => format!(
                "decision={} perceived={perceived_risk} highest={highest_possible}",
                match decision {
                    Decision::Evacuate => "evacuate",
                    Decision::Stay => "stay",
                }
            ),
            Event::Departed { shelter, distance } => format!("shelter={shelter} distance={distance}"),
            Event::Waiting => String::new(),
            Event::Admitted { household, members } => format!("household={household} members={members}"),
            Event::Redirected { household, to } => format!("household={household} to={to}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub tick: u32,
    pub kind: AgentKind,
    pub agent_id: u32,
    pub event: Event,
}

pub fn write_event_log<W: Write>(events: &[EventRecord], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(EVENT_LOG_HEADER)?;
    for e in events {
        csv.write_record([
            e.tick.to_string(),
            e.kind.label().to_string(),
            e.agent_id.to_string(),
            e.event.name().to_string(),
            e.event.detail(),
        ])?;
    }
    csv.flush().map_err(|e| Error::io("<event log>", e))?;
    Ok(())
}
