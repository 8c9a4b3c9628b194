//! Runtime side of the adaptive debugger: HTTP model backend, subprocess
//! sandbox, transcript files and replay, dataset loading, benchmark harness,
//! reports and the command line.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod executor;
pub mod http;
pub mod replay;
pub mod report;
pub mod script;
pub mod transcript_io;

use std::time::Instant;

use adaptive_debug_core::orchestrator::Clock;

/// Monotonic clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}
