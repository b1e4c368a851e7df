use crate::error::Result;

use super::config::RunConfig;

/// The experiments shipped as configuration files under `configs/`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// 1q2l, direct mode, 80 intervals.
    BangBang,
    /// 1q2l, smoothed mode, 80 intervals.
    SmoothedX,
    /// 1q3l, smoothed mode, 80 intervals, coarse grid.
    QutritX,
    /// 2q2l, smoothed mode, 480 intervals, coarse grid.
    CrossResonance,
    /// 2q3l, smoothed mode, 480 intervals, fine grid with `R_c` fixed.
    ExtendedCr,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::BangBang,
        Experiment::SmoothedX,
        Experiment::QutritX,
        Experiment::CrossResonance,
        Experiment::ExtendedCr,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Experiment::BangBang => "bang_bang.toml",
            Experiment::SmoothedX => "smoothed_x.toml",
            Experiment::QutritX => "qutrit_x.toml",
            Experiment::CrossResonance => "cross_resonance.toml",
            Experiment::ExtendedCr => "extended_cr.toml",
        }
    }

    pub fn toml(self) -> &'static str {
        match self {
            Experiment::BangBang => include_str!("../../configs/bang_bang.toml"),
            Experiment::SmoothedX => include_str!("../../configs/smoothed_x.toml"),
            Experiment::QutritX => include_str!("../../configs/qutrit_x.toml"),
            Experiment::CrossResonance => include_str!("../../configs/cross_resonance.toml"),
            Experiment::ExtendedCr => include_str!("../../configs/extended_cr.toml"),
        }
    }

    pub fn config(self) -> Result<RunConfig> {
        RunConfig::from_toml_str(self.toml())
    }
}
