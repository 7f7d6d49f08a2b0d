use serde::{Deserialize, Serialize};

use crate::oracle::{ElementId, RunLedger};

/// One record of the optional run trace (one JSON line each).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    /// Start of a threshold level inside one sampling pass.
    Level {
        iteration: usize,
        delta: f64,
        floor: f64,
        candidates: usize,
        ledger: RunLedger,
    },
    /// One inner iteration: `candidates` is X at the iteration head,
    /// `eta` the index returned by the search, `added` the sampled prefix.
    Inner {
        iteration: usize,
        delta: f64,
        candidates: Vec<ElementId>,
        sequence_len: usize,
        eta: usize,
        added: Vec<ElementId>,
        ledger: RunLedger,
    },
    /// End of an outer iteration.
    Iteration {
        iteration: usize,
        omega: Vec<ElementId>,
        lambda: Vec<ElementId>,
        ledger: RunLedger,
    },
}

/// Collects trace events when enabled; a disabled tracer drops them unbuilt.
#[derive(Default)]
pub struct Tracer {
    events: Option<Vec<TraceEvent>>,
}

impl Tracer {
    pub fn disabled() -> Self {
        Tracer { events: None }
    }

    pub fn enabled() -> Self {
        Tracer {
            events: Some(Vec::new()),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.events.is_some()
    }

    pub fn record(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(events) = self.events.as_mut() {
            events.push(event());
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        self.events.as_deref().unwrap_or_default()
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events.unwrap_or_default()
    }
}
