//! Knowledge-based enrolment, verification and identification (EVI) over
//! spoken-dialogue transcripts.

pub mod dataset;
pub mod dialogue;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fuzzy;
pub mod io;
pub mod kb;
pub mod locale;
pub mod nlu;
pub mod rng;
pub mod sim;
pub mod text;

pub use dialogue::{DialogueTranscript, TurnSelector};
pub use error::{Error, Result};
pub use eval::{DetCurve, MetricReport};
pub use experiment::{run_experiment, ExperimentConfig, ResultsFile, Task, Theta};
pub use fuzzy::{FuzzyConfig, ItemScore, ScorerModel};
pub use kb::{generate_kb, GenerationSpec, KnowledgeBase, Profile};
pub use locale::{Locale, LocaleResources};
pub use nlu::{ItemKind, Nlu, NluMode, NluResult, ParsedName, Turn, Value};
pub use sim::{simulate, SimSpec};
