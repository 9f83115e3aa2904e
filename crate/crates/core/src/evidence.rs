//! How strong a hypothesis verdict is.

/// A sampled pass is evidence, not proof: universally quantified hypotheses
/// cannot be certified from finitely many samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evidence {
    /// Verdict from a finite deterministic sample of the quantified variables.
    Sampled { samples: usize },
    /// Verdict known in closed form for the catalog object.
    ByConstruction,
}

impl Evidence {
    pub fn is_proof(&self) -> bool {
        matches!(self, Evidence::ByConstruction)
    }

    pub fn describe(&self) -> String {
        match self {
            Evidence::Sampled { samples } => {
                format!("sampled evidence over {samples} points (not a proof)")
            }
            Evidence::ByConstruction => "holds by construction".to_string(),
        }
    }
}
