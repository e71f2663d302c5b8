//! Deterministic architecture choices for a given sample size.

use htbnn_core::net::Architecture;

/// Width regime of the hosted networks.
#[derive(Debug, Clone, PartialEq)]
pub enum ArchMode {
    /// Depth `ceil(log^{1+delta} n)`, common width `ceil(sqrt n)`.
    CompWidth,
    /// Depth `ceil(log n)`, common width `n` (the sparse-approximation
    /// regime with quadratically larger width).
    LargeWidth,
    /// Caller-provided widths, flagged non-theoretical.
    Override { widths: Vec<usize> },
}

/// Selected architecture with its provenance flag.
#[derive(Debug, Clone)]
pub struct ChosenArch {
    pub arch: Architecture,
    /// False when the widths were overridden by hand.
    pub theoretical: bool,
    pub label: String,
}

pub fn choose_architecture(n: usize, d: usize, mode: &ArchMode, delta: f64) -> ChosenArch {
    assert!(n >= 3, "need n >= 3 for a log-based depth");
    match mode {
        ArchMode::CompWidth => {
            let depth = (n as f64).ln().powf(1.0 + delta).ceil() as usize;
            let width = (n as f64).sqrt().ceil() as usize;
            let mut widths = vec![d];
            widths.extend(std::iter::repeat(width).take(depth));
            widths.push(1);
            ChosenArch {
                arch: Architecture::new(widths).unwrap(),
                theoretical: true,
                label: format!("comp-width(n={n})"),
            }
        }
        ArchMode::LargeWidth => {
            let depth = (n as f64).ln().ceil() as usize;
            let mut widths = vec![d];
            widths.extend(std::iter::repeat(n).take(depth));
            widths.push(1);
            ChosenArch {
                arch: Architecture::new(widths).unwrap(),
                theoretical: true,
                label: format!("large-width(n={n})"),
            }
        }
        ArchMode::Override { widths } => ChosenArch {
            arch: Architecture::new(widths.clone()).expect("override widths must be valid"),
            theoretical: false,
            label: "override (non-theoretical architecture)".into(),
        },
    }
}
