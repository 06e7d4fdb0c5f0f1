use std::collections::BTreeMap;
use std::fmt;

use super::{AbrError, AbrPolicy, BufferBased, PolicyConfig, QualityBased, RateBased};

pub type PolicyFactory = fn(PolicyConfig) -> Box<dyn AbrPolicy>;

/// Policies by name.
#[derive(Clone)]
pub struct Registry {
    factories: BTreeMap<String, PolicyFactory>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `bb`, `rb`, `qb` and `oqb`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("bb", |c| Box::new(BufferBased::new(c)));
        r.register("rb", |c| Box::new(RateBased::new(c)));
        r.register("qb", |c| Box::new(QualityBased::estimated(c)));
        r.register("oqb", |c| Box::new(QualityBased::oracle(c)));
        r
    }

    /// Adds or replaces a policy.
    pub fn register(&mut self, name: &str, factory: PolicyFactory) {
        self.factories.insert(name.to_ascii_lowercase(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(&name.to_ascii_lowercase())
    }

    pub fn create(&self, name: &str, config: PolicyConfig) -> Result<Box<dyn AbrPolicy>, AbrError> {
        config.validate()?;
        let factory = self
            .factories
            .get(&name.to_ascii_lowercase())
            .ok_or_else(|| AbrError::UnknownPolicy(name.to_string()))?;
        Ok(factory(config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abr::{ClientState, Decision};

    #[test]
    fn builtin_names() {
        let r = Registry::builtin();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["bb", "oqb", "qb", "rb"]);
        for name in ["bb", "rb", "qb", "oqb", "QB"] {
            let p = r.create(name, PolicyConfig::default()).unwrap();
            assert_eq!(p.name(), name.to_ascii_lowercase());
        }
    }

    #[test]
    fn unknown_and_invalid() {
        let r = Registry::builtin();
        assert!(matches!(
            r.create("mpc", PolicyConfig::default()),
            Err(AbrError::UnknownPolicy(_))
        ));
        let bad = PolicyConfig {
            window: 0,
            ..PolicyConfig::default()
        };
        assert!(matches!(r.create("rb", bad), Err(AbrError::InvalidConfig(_))));
    }

    struct AlwaysTop;

    impl AbrPolicy for AlwaysTop {
        fn name(&self) -> &'static str {
            "top"
        }

        fn decide(&self, state: &ClientState<'_>) -> Result<Decision, AbrError> {
            Ok(Decision::Stream(state.chunk_map.n_streams() - 1))
        }
    }

    #[test]
    fn custom_policy() {
        let mut r = Registry::builtin();
        r.register("top", |_| Box::new(AlwaysTop));
        assert!(r.contains("top"));
        assert_eq!(r.create("top", PolicyConfig::default()).unwrap().name(), "top");
    }
}
