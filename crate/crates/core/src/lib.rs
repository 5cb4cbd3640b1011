//! Virtual simulation-pilot engine: phraseology parsing, callsign
//! re-ranking against surveillance data, read-back generation and the
//! metrics used to evaluate each stage.

pub mod entity;
pub mod metrics;
pub mod phraseology;
pub mod pipeline;
pub mod resolver;
pub mod response;
pub mod scalar;
pub mod tts;

pub use entity::{
    EntityClass, EntityParser, EntitySpan, ParseError, ParsedCommunication, PhraseologyGrammar, Tag, TaggedUtterance,
    Tagger,
};
pub use phraseology::{
    normalize, verbalize_callsign, AirlineDesignatorTable, IcaoCallsign, PhraseologyError, SpokenCallsign, Utterance,
};
pub use pipeline::{Engine, EngineOptions, ExerciseConfig, PilotResponse, PipelineError, SessionRecord};
pub use resolver::{weighted_levenshtein, CallsignResolver, EditCosts, RankedMatch, SurveillanceSnapshot};
pub use response::{ReadbackPlan, RbeKind, WordFixerRules};
pub use scalar::Cost;

/// Fractional confusability weights.
pub type EditCostsF64 = EditCosts<f64>;
pub type EditCostsF32 = EditCosts<f32>;
/// Exact integer costs.
pub type UnitEditCosts = EditCosts<u32>;

pub type CallsignResolverF64 = CallsignResolver<f64>;
pub type RankedMatchF64 = RankedMatch<f64>;
