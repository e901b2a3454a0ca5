//! Sources of grammar transformations consulted at transformative reductions.

use super::{parse_transformation_text, Grammar, GrammarError, Symbol, Transformation};
use crate::parser::ParseEvent;

/// What a provider sees when a transformative production is reduced.
pub struct DeltaContext<'a> {
    /// Terminals shifted since the previous reduction (w_Δ).
    pub scanned: &'a [Symbol],
    /// The provider's persistent memory (z_Δ).
    pub memory: &'a [u8],
    /// The grammar currently in force.
    pub grammar: &'a Grammar,
    /// Every event so far, for hosts that want the full yield.
    pub events: &'a [ParseEvent],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaOutput {
    pub memory: Vec<u8>,
    pub transformation: Transformation,
}

/// Emits the transformation to apply at each transformative reduction.
/// Implementations must return in finite time.
pub trait DeltaProvider {
    fn provide(&mut self, ctx: &DeltaContext<'_>) -> Result<DeltaOutput, GrammarError>;
}

impl<F> DeltaProvider for F
where
    F: FnMut(&DeltaContext<'_>) -> Result<DeltaOutput, GrammarError>,
{
    fn provide(&mut self, ctx: &DeltaContext<'_>) -> Result<DeltaOutput, GrammarError> {
        self(ctx)
    }
}

/// Always emits Δe.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityProvider;

impl DeltaProvider for IdentityProvider {
    fn provide(&mut self, ctx: &DeltaContext<'_>) -> Result<DeltaOutput, GrammarError> {
        Ok(DeltaOutput { memory: ctx.memory.to_vec(), transformation: Transformation::identity() })
    }
}

/// Emits the n-th transformation text at the n-th transformative reduction,
/// then Δe once the script runs out. Each text is parsed against the grammar
/// in force at the time of the call.
#[derive(Clone, Debug, Default)]
pub struct ScriptedProvider {
    script: Vec<String>,
    calls: usize,
}

impl ScriptedProvider {
    pub fn new<S: Into<String>>(script: impl IntoIterator<Item = S>) -> Self {
        ScriptedProvider { script: script.into_iter().map(Into::into).collect(), calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl DeltaProvider for ScriptedProvider {
    fn provide(&mut self, ctx: &DeltaContext<'_>) -> Result<DeltaOutput, GrammarError> {
        let n = self.calls;
        self.calls += 1;
        let transformation = match self.script.get(n) {
            Some(text) => parse_transformation_text(text, ctx.grammar)?,
            None => Transformation::identity(),
        };
        Ok(DeltaOutput { memory: ctx.memory.to_vec(), transformation })
    }
}
