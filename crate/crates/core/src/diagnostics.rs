//! Warning counters shared by all worker threads.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// A particle is beyond a symmetric wall.
    SymmetricEscape,
    /// A particle crossed a cut-off face and was deactivated.
    CutoffEscape,
    /// Two particles at the same position inside a derivative operator.
    CoincidentPair,
    /// Social force agent sitting on its desired position.
    ZeroDirection,
    /// Interaction radius larger than the smallest cell edge.
    RadiusExceedsCell,
}

impl Warning {
    pub const ALL: [Warning; 5] = [
        Warning::SymmetricEscape,
        Warning::CutoffEscape,
        Warning::CoincidentPair,
        Warning::ZeroDirection,
        Warning::RadiusExceedsCell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Warning::SymmetricEscape => "symmetric_escape",
            Warning::CutoffEscape => "cutoff_escape",
            Warning::CoincidentPair => "coincident_pair",
            Warning::ZeroDirection => "zero_direction",
            Warning::RadiusExceedsCell => "radius_exceeds_cell",
        }
    }
}

#[derive(Debug, Default)]
pub struct Diagnostics {
    counts: [AtomicUsize; 5],
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true the first time this kind is recorded.
    pub fn warn(&self, kind: Warning) -> bool {
        self.add(kind, 1)
    }

    pub fn add(&self, kind: Warning, n: usize) -> bool {
        if n == 0 {
            return false;
        }
        self.counts[kind as usize].fetch_add(n, Ordering::Relaxed) == 0
    }

    pub fn count(&self, kind: Warning) -> usize {
        self.counts[kind as usize].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> usize {
        Warning::ALL.iter().map(|w| self.count(*w)).sum()
    }

    pub fn snapshot(&self) -> Vec<(Warning, usize)> {
        Warning::ALL
            .iter()
            .map(|w| (*w, self.count(*w)))
            .filter(|(_, n)| *n > 0)
            .collect()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .snapshot()
            .into_iter()
            .map(|(w, n)| format!("{}={n}", w.name()))
            .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_first_flag() {
        let d = Diagnostics::new();
        assert!(d.warn(Warning::CoincidentPair));
        assert!(!d.warn(Warning::CoincidentPair));
        assert_eq!(d.count(Warning::CoincidentPair), 2);
        assert_eq!(d.total(), 2);
        assert_eq!(d.to_string(), "coincident_pair=2");
    }
}
