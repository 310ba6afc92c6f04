use std::collections::HashMap;

/// Handle for an interned string in a [`Interner`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

/// Append-only string table. High-volume event rows carry item names, units
/// and fluids as [`Symbol`]s instead of owned strings.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    names: Vec<String>,
    lookup: HashMap<String, Symbol>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> Symbol {
        if let Some(sym) = self.lookup.get(name) {
            return *sym;
        }
        let sym = Symbol(u32::try_from(self.names.len()).expect("interner overflow"));
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), sym);
        sym
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.lookup.get(name).copied()
    }

    /// Panics if `sym` came from another interner with more entries.
    pub fn resolve(&self, sym: Symbol) -> &str {
        &self.names[sym.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intern_is_idempotent() {
        let mut i = Interner::new();
        let a = i.intern("heart_rate");
        let b = i.intern("bpm");
        assert_eq!(i.intern("heart_rate"), a);
        assert_ne!(a, b);
        assert_eq!(i.resolve(b), "bpm");
        assert_eq!(i.get("missing"), None);
        assert_eq!(i.len(), 2);
    }
}
