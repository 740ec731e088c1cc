//! Name-keyed factories for interchangeable strategies.
//!
//! Generation backends, model checkers and oracle models are all selected at
//! runtime by name (from flags or a config file). Each family gets its own
//! [`Registry`] with a context type carrying whatever the factories need.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Errors raised while resolving a strategy by name.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown {kind} `{name}` (known: {})", known.join(", "))]
    Unknown {
        kind: &'static str,
        name: String,
        known: Vec<String>,
    },
    #[error("cannot construct {kind} `{name}`: {reason}")]
    Invalid {
        kind: &'static str,
        name: String,
        reason: String,
    },
}

type Factory<T, Ctx> = Box<dyn Fn(&Ctx) -> Result<Box<T>, String> + Send + Sync>;

/// A set of named constructors producing boxed trait objects.
pub struct Registry<T: ?Sized, Ctx> {
    kind: &'static str,
    factories: BTreeMap<String, Factory<T, Ctx>>,
}

impl<T: ?Sized, Ctx> Registry<T, Ctx> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            factories: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(&Ctx) -> Result<Box<T>, String> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    /// Registered names, sorted.
    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }

    pub fn create(&self, name: &str, ctx: &Ctx) -> Result<Box<T>, RegistryError> {
        let factory = self.factories.get(name).ok_or_else(|| RegistryError::Unknown {
            kind: self.kind,
            name: name.to_string(),
            known: self.names(),
        })?;
        factory(ctx).map_err(|reason| RegistryError::Invalid {
            kind: self.kind,
            name: name.to_string(),
            reason,
        })
    }
}

impl<T: ?Sized, Ctx> fmt::Debug for Registry<T, Ctx> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names())
            .finish()
    }
}
