use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solar,
    Probe,
}

/// Every inference rule the engine can fire. Used for rule statistics and for
/// switching individual rules off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    ANew,
    ACpy,
    ALd,
    ASt,
    ACall,
    PForName,
    PGetMtd,
    PGetFld,
    IInvTp,
    IInvSig,
    IInvS2T,
    IGetTp,
    IGetSig,
    IGetS2T,
    ISetTp,
    ISetSig,
    ISetS2T,
    TInv,
    TGet,
    TSet,
    LKwTp,
    LUkwTp,
    LCast,
    LInv,
    LGSet,
    /// The `<:` filter applied to reflective arguments and stored values.
    TInvArgFilter,
}

impl Rule {
    pub const ALL: [Rule; 26] = [
        Rule::ANew,
        Rule::ACpy,
        Rule::ALd,
        Rule::ASt,
        Rule::ACall,
        Rule::PForName,
        Rule::PGetMtd,
        Rule::PGetFld,
        Rule::IInvTp,
        Rule::IInvSig,
        Rule::IInvS2T,
        Rule::IGetTp,
        Rule::IGetSig,
        Rule::IGetS2T,
        Rule::ISetTp,
        Rule::ISetSig,
        Rule::ISetS2T,
        Rule::TInv,
        Rule::TGet,
        Rule::TSet,
        Rule::LKwTp,
        Rule::LUkwTp,
        Rule::LCast,
        Rule::LInv,
        Rule::LGSet,
        Rule::TInvArgFilter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::ANew => "A-New",
            Rule::ACpy => "A-Cpy",
            Rule::ALd => "A-Ld",
            Rule::ASt => "A-St",
            Rule::ACall => "A-Call",
            Rule::PForName => "P-ForName",
            Rule::PGetMtd => "P-GetMtd",
            Rule::PGetFld => "P-GetFld",
            Rule::IInvTp => "I-InvTp",
            Rule::IInvSig => "I-InvSig",
            Rule::IInvS2T => "I-InvS2T",
            Rule::IGetTp => "I-GetTp",
            Rule::IGetSig => "I-GetSig",
            Rule::IGetS2T => "I-GetS2T",
            Rule::ISetTp => "I-SetTp",
            Rule::ISetSig => "I-SetSig",
            Rule::ISetS2T => "I-SetS2T",
            Rule::TInv => "T-Inv",
            Rule::TGet => "T-Get",
            Rule::TSet => "T-Set",
            Rule::LKwTp => "L-KwTp",
            Rule::LUkwTp => "L-UkwTp",
            Rule::LCast => "L-Cast",
            Rule::LInv => "L-Inv",
            Rule::LGSet => "L-GSet",
            Rule::TInvArgFilter => "T-Inv-ArgFilter",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Rules that Probe leaves out.
    pub fn off_in_probe(self) -> bool {
        matches!(
            self,
            Rule::IInvS2T | Rule::IGetS2T | Rule::ISetS2T | Rule::LCast | Rule::LInv | Rule::LGSet
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("threshold `{0}` must be at least 1")]
    Threshold(&'static str),
    #[error("iteration budget must be at least 1")]
    Budget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub mode: Mode,
    pub cast_threshold: usize,
    pub target_threshold: usize,
    pub max_iterations: usize,
    /// Rules switched off explicitly, on top of what the mode leaves out.
    pub disabled: BTreeSet<Rule>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Solar,
            cast_threshold: 10,
            target_threshold: 50,
            max_iterations: 10_000,
            disabled: BTreeSet::new(),
        }
    }
}

impl EngineConfig {
    pub fn probe() -> Self {
        EngineConfig {
            mode: Mode::Probe,
            ..Self::default()
        }
    }

    pub fn with_disabled(mut self, rule: Rule) -> Self {
        self.disabled.insert(rule);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cast_threshold == 0 {
            return Err(ConfigError::Threshold("cast"));
        }
        if self.target_threshold == 0 {
            return Err(ConfigError::Threshold("targets"));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::Budget);
        }
        Ok(())
    }

    pub fn enabled(&self, rule: Rule) -> bool {
        !self.disabled.contains(&rule) && !(self.mode == Mode::Probe && rule.off_in_probe())
    }
}
