//! Core library: patient bundle store, FHIRPath engine, paraphrase
//! pipeline, benchmark forge and evaluation harness.

pub mod digest;
pub mod fhirpath;
pub mod harness;
pub mod forge;
pub mod paraphrase;
pub mod placeholder;
pub mod store;
pub mod temporal;
pub mod value;

pub use fhirpath::{Collection, EngineError, EvalContext};
pub use harness::{EvalRecord, HarnessError, Report};
pub use forge::{BenchmarkSample, ForgeError, QuestionTemplate, Registry, ResponseType};
pub use paraphrase::{ParaphraseCandidate, ParaphraseError, Perspective};
pub use store::{PatientBundle, Resource, StoreError};
pub use value::FhirValue;
