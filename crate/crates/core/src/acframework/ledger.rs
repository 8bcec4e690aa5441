use crate::metrics::BoundReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonSource {
    /// Computed from an exact evaluation.
    Measured,
    /// Taken from a theorem or hash-family parameter.
    Asserted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub name: String,
    pub epsilon: f64,
    pub source: EpsilonSource,
}

/// Running sum of per-component construction errors. Serial and parallel
/// composition both add errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpsilonLedger {
    entries: Vec<LedgerEntry>,
}

impl EpsilonLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(name: impl Into<String>, epsilon: f64, source: EpsilonSource) -> Self {
        Self::new().with(name, epsilon, source)
    }

    pub fn with(mut self, name: impl Into<String>, epsilon: f64, source: EpsilonSource) -> Self {
        self.entries.push(LedgerEntry {
            name: name.into(),
            epsilon,
            source,
        });
        self
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc + e.epsilon)
    }

    pub fn serial_compose(&self, next: &EpsilonLedger) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(next.entries.iter().cloned());
        Self { entries }
    }

    /// Errors of components run side by side, entries tagged by position.
    pub fn parallel_compose(parts: &[&EpsilonLedger]) -> Self {
        let entries = parts
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                l.entries.iter().map(move |e| LedgerEntry {
                    name: format!("{}:{}", i + 1, e.name),
                    ..e.clone()
                })
            })
            .collect();
        Self { entries }
    }

    /// `measured ≤ total`.
    pub fn check(&self, name: impl Into<String>, measured: f64) -> BoundReport {
        BoundReport::new(name, measured, self.total())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_adds() {
        let a = EpsilonLedger::single("qkd", 0.1, EpsilonSource::Measured);
        let b = EpsilonLedger::single("otp", 0.0, EpsilonSource::Asserted);
        let s = a.serial_compose(&b);
        assert_eq!(s.entries().len(), 2);
        assert!((s.total() - 0.1).abs() < 1e-15);
        let p = EpsilonLedger::parallel_compose(&[&a, &a, &s]);
        assert!((p.total() - 0.3).abs() < 1e-15);
        assert_eq!(p.entries()[1].name, "2:qkd");
        assert!(p.check("x", 0.29).holds);
        assert!(!p.check("x", 0.31).holds);
    }
}
