use std::fmt;
use std::time::{Duration, Instant};

/// Conflict-detection posture of one operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectionMode {
    NoDetection = 0,
    DetectCritical = 1,
    DetectAll = 2,
}

impl DetectionMode {
    pub const ALL: [DetectionMode; 3] = [
        DetectionMode::NoDetection,
        DetectionMode::DetectCritical,
        DetectionMode::DetectAll,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectionMode::NoDetection => "no-detect",
            DetectionMode::DetectCritical => "detect-critical",
            DetectionMode::DetectAll => "detect-all",
        })
    }
}

/// Blocking timeout, in microseconds.
pub const INFINITE_TIMEOUT: f64 = f64::INFINITY;

/// Priority used where the classic protocols order waiters first-come
/// first-served; equal priorities fall back to arrival order.
pub const FIFO_PRIORITY: f32 = 0.5;

/// Concurrency-control decision for one operation.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub detection: DetectionMode,
    /// Microseconds; [`INFINITE_TIMEOUT`] waits without bound.
    pub timeout_us: f64,
    pub priority: f32,
    /// Pipeline waits, one per transaction type: the number of leading
    /// operations of a dependency of that type that must finish first.
    pub waits: Vec<u32>,
    pub expose: bool,
}

impl Action {
    pub fn new(detection: DetectionMode, timeout_us: f64, priority: f32, n_types: usize) -> Self {
        Action {
            detection,
            timeout_us,
            priority,
            waits: vec![0; n_types],
            expose: false,
        }
    }

    /// Row used for states the table has no entry for.
    pub fn conservative(n_types: usize) -> Self {
        Action::new(DetectionMode::DetectAll, INFINITE_TIMEOUT, FIFO_PRIORITY, n_types)
    }

    pub fn with_expose(mut self, expose: bool) -> Self {
        self.expose = expose;
        self
    }

    /// Absolute deadline for a wait starting at `start`; `None` for no bound.
    pub fn deadline(&self, start: Instant) -> Option<Instant> {
        if self.timeout_us.is_finite() {
            Some(start + Duration::from_secs_f64(self.timeout_us.max(0.0) * 1e-6))
        } else {
            None
        }
    }

    /// Checks the value ranges and, given per-type operation counts, the
    /// pipeline-wait bounds.
    pub fn check(&self, op_counts: Option<&[u32]>) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.priority) {
            return Err(format!("priority {} outside [0,1]", self.priority));
        }
        if self.timeout_us.is_nan() || self.timeout_us < 0.0 {
            return Err(format!("negative timeout {}", self.timeout_us));
        }
        if let Some(counts) = op_counts {
            if counts.len() != self.waits.len() {
                return Err(format!("{} waits for {} types", self.waits.len(), counts.len()));
            }
            for (i, (w, n)) in self.waits.iter().zip(counts).enumerate() {
                if w > n {
                    return Err(format!("wait {w} for type {i} exceeds its {n} operations"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = if self.timeout_us.is_finite() {
            format!("{:.1}us", self.timeout_us)
        } else {
            "inf".to_string()
        };
        write!(f, "{} t={} p={:.2} w={:?}", self.detection, t, self.priority, self.waits)?;
        if self.expose {
            f.write_str(" expose")?;
        }
        Ok(())
    }
}
