//! Bundled scenario presets, embedded at compile time from `configs/` at the
//! repository root so the binary reproduces them without external files.

/// Scenario ids and their embedded JSON configs.
pub const FIGURES: [(&str, &str); 5] = [
    ("1a", include_str!("../../../configs/fig1a.json")),
    ("1b", include_str!("../../../configs/fig1b.json")),
    ("2", include_str!("../../../configs/fig2.json")),
    ("3a", include_str!("../../../configs/fig3a.json")),
    ("3b", include_str!("../../../configs/fig3b.json")),
];

/// The embedded config for a scenario id, if it exists.
#[must_use]
pub fn figure_config(id: &str) -> Option<&'static str> {
    FIGURES
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| *text)
}

/// Comma-separated list of known ids, for error messages.
#[must_use]
pub fn known_ids() -> String {
    FIGURES
        .iter()
        .map(|(name, _)| *name)
        .collect::<Vec<_>>()
        .join(", ")
}
