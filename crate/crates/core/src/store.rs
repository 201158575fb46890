//! The value store σ and the object store θ.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::ast::{FunctionLabel, ObjRef, Ref, Value};

/// Faults that indicate an engine bug, not a Lua error.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreFault {
    #[error("unknown reference $r{0}")]
    UnknownRef(u32),
    #[error("unknown object reference $t{0}")]
    UnknownObject(u32),
}

/// σ: references to values. Allocation only ever extends the domain.
#[derive(Clone, Debug, Default)]
pub struct ValueStore {
    cells: Vec<Value>,
    touched: Vec<Ref>,
}

impl ValueStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, v: Value) -> Ref {
        let r = Ref(self.cells.len() as u32);
        self.cells.push(v);
        self.touched.push(r);
        r
    }

    pub fn read(&self, r: Ref) -> Result<&Value, StoreFault> {
        self.cells
            .get(r.0 as usize)
            .ok_or(StoreFault::UnknownRef(r.0))
    }

    pub fn write(&mut self, r: Ref, v: Value) -> Result<(), StoreFault> {
        let cell = self
            .cells
            .get_mut(r.0 as usize)
            .ok_or(StoreFault::UnknownRef(r.0))?;
        *cell = v;
        self.touched.push(r);
        Ok(())
    }

    pub fn contains(&self, r: Ref) -> bool {
        (r.0 as usize) < self.cells.len()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ref, &Value)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, v)| (Ref(i as u32), v))
    }

    /// References allocated or written since the last call.
    pub fn take_touched(&mut self) -> Vec<Ref> {
        std::mem::take(&mut self.touched)
    }

    pub fn clear_touched(&mut self) {
        self.touched.clear();
    }
}

/// A table key: any value except nil and NaN. Numbers compare by value
/// (so `-0` and `0` coincide); other values by raw equality.
#[derive(Clone, Debug)]
pub struct Key(Value);

impl Key {
    pub fn new(v: Value) -> Option<Key> {
        match v {
            Value::Nil => None,
            Value::Number(n) if n.is_nan() => None,
            Value::Number(0.0) => Some(Key(Value::Number(0.0))),
            other => Some(Key(other)),
        }
    }

    pub fn value(&self) -> &Value {
        &self.0
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.0.raw_eq(&other.0)
    }
}

impl Eq for Key {}

impl Hash for Key {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Value::Nil => 0u8.hash(state),
            Value::Bool(b) => (1u8, b).hash(state),
            Value::Number(n) => (2u8, n.to_bits()).hash(state),
            Value::Str(s) => (3u8, &**s).hash(state),
            Value::Function(f) => {
                4u8.hash(state);
                hash_label(&f.label, state);
            }
            Value::Table(t) => (5u8, t.0).hash(state),
        }
    }
}

fn hash_label<H: Hasher>(label: &FunctionLabel, state: &mut H) {
    label.hash(state)
}

/// `next` was given a key that is not in the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MissingKey;

/// A table: insertion-ordered entries plus the metatable slot.
///
/// Removing a key keeps a tombstone (an entry whose value is nil) so that a
/// traversal with `next` can continue past a field cleared during the
/// traversal. Tombstones are invisible through every accessor.
#[derive(Clone, Debug, Default)]
pub struct TableObject {
    entries: IndexMap<Key, Value>,
    pub metatable: Option<ObjRef>,
}

impl TableObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &Value) -> Value {
        Key::new(key.clone())
            .and_then(|k| self.entries.get(&k).cloned())
            .unwrap_or(Value::Nil)
    }

    pub fn get_str(&self, key: &str) -> Value {
        self.get(&Value::str(key))
    }

    /// Whether the key maps to a non-nil value.
    pub fn contains(&self, key: &Value) -> bool {
        !self.get(key).is_nil()
    }

    /// Raw update. Fails with the reference interpreter's message for nil
    /// and NaN keys.
    pub fn set(&mut self, key: Value, value: Value) -> Result<(), &'static str> {
        let k = match key {
            Value::Nil => return Err("table index is nil"),
            Value::Number(n) if n.is_nan() => return Err("table index is NaN"),
            other => Key::new(other).expect("non-nil key"),
        };
        if value.is_nil() {
            if let Some(slot) = self.entries.get_mut(&k) {
                *slot = Value::Nil;
            }
        } else {
            self.entries.insert(k, value);
        }
        Ok(())
    }

    /// Live entries in traversal order.
    pub fn entries(&self) -> impl Iterator<Item = (&Value, &Value)> {
        self.entries
            .iter()
            .filter(|(_, v)| !v.is_nil())
            .map(|(k, v)| (&k.0, v))
    }

    pub fn live_count(&self) -> usize {
        self.entries().count()
    }

    /// Entry following `key` in traversal order (`nil` starts the
    /// traversal). `Err` when the key is not in the table.
    pub fn next(&self, key: &Value) -> Result<Option<(Value, Value)>, MissingKey> {
        let start = if key.is_nil() {
            0
        } else {
            let k = Key::new(key.clone()).ok_or(MissingKey)?;
            self.entries.get_index_of(&k).ok_or(MissingKey)? + 1
        };
        Ok(self
            .entries
            .get_range(start..)
            .into_iter()
            .flat_map(|slice| slice.iter())
            .find(|(_, v)| !v.is_nil())
            .map(|(k, v)| (k.0.clone(), v.clone())))
    }

    /// A border: the first `n` with `t[n+1] == nil`, scanning upwards.
    pub fn border(&self) -> usize {
        let mut n = 0usize;
        while self.contains(&Value::Number((n + 1) as f64)) {
            n += 1;
        }
        n
    }
}

/// θ: object references to tables, plus the metatable shared by all
/// strings. Tables are shared between clones of the store until written.
#[derive(Clone, Debug, Default)]
pub struct ObjectStore {
    tables: Vec<Arc<TableObject>>,
    pub string_metatable: Option<ObjRef>,
    touched: Vec<ObjRef>,
}

impl ObjectStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, t: TableObject) -> ObjRef {
        let r = ObjRef(self.tables.len() as u32);
        self.tables.push(Arc::new(t));
        self.touched.push(r);
        r
    }

    pub fn get(&self, r: ObjRef) -> Result<&TableObject, StoreFault> {
        self.tables
            .get(r.0 as usize)
            .map(|t| &**t)
            .ok_or(StoreFault::UnknownObject(r.0))
    }

    pub fn get_mut(&mut self, r: ObjRef) -> Result<&mut TableObject, StoreFault> {
        self.touched.push(r);
        self.tables
            .get_mut(r.0 as usize)
            .map(Arc::make_mut)
            .ok_or(StoreFault::UnknownObject(r.0))
    }

    pub fn contains(&self, r: ObjRef) -> bool {
        (r.0 as usize) < self.tables.len()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjRef, &TableObject)> {
        self.tables
            .iter()
            .enumerate()
            .map(|(i, t)| (ObjRef(i as u32), &**t))
    }

    /// Raw field read; nil for non-tables and absent keys.
    pub fn rawget(&self, t: &Value, key: &Value) -> Value {
        match t {
            Value::Table(r) => self.get(*r).map(|t| t.get(key)).unwrap_or_default(),
            _ => Value::Nil,
        }
    }

    /// Metatable of any value: the table's own slot, or the per-type one.
    pub fn metatable_of(&self, v: &Value) -> Option<ObjRef> {
        match v {
            Value::Table(r) => self.get(*r).ok().and_then(|t| t.metatable),
            Value::Str(_) => self.string_metatable,
            _ => None,
        }
    }

    pub fn take_touched(&mut self) -> Vec<ObjRef> {
        std::mem::take(&mut self.touched)
    }

    pub fn clear_touched(&mut self) {
        self.touched.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_store_alloc_read_write() {
        let mut s = ValueStore::new();
        let a = s.alloc(Value::Bool(true));
        assert_eq!(s.len(), 1);
        let b = s.alloc(Value::Nil);
        assert_ne!(a, b);
        assert_eq!(s.read(a).unwrap(), &Value::Bool(true));
        s.write(b, Value::Number(2.0)).unwrap();
        assert_eq!(s.read(b).unwrap(), &Value::Number(2.0));
        assert_eq!(s.read(a).unwrap(), &Value::Bool(true));
        assert_eq!(s.write(Ref(7), Value::Nil), Err(StoreFault::UnknownRef(7)));
        assert!(s.read(Ref(7)).is_err());
    }

    #[test]
    fn number_keys_coincide() {
        let mut t = TableObject::new();
        t.set(Value::Number(1.0), Value::str("a")).unwrap();
        assert_eq!(t.get(&Value::Number(1.0)), Value::str("a"));
        t.set(Value::Number(-0.0), Value::str("z")).unwrap();
        assert_eq!(t.get(&Value::Number(0.0)), Value::str("z"));
        assert_eq!(
            t.set(Value::Nil, Value::Bool(true)),
            Err("table index is nil")
        );
        assert_eq!(
            t.set(Value::Number(f64::NAN), Value::Bool(true)),
            Err("table index is NaN")
        );
    }

    #[test]
    fn nil_assignment_hides_key_but_keeps_traversal() {
        let mut t = TableObject::new();
        for (i, k) in ["a", "b", "c"].iter().enumerate() {
            t.set(Value::str(k), Value::Number(i as f64)).unwrap();
        }
        t.set(Value::str("b"), Value::Nil).unwrap();
        assert!(!t.contains(&Value::str("b")));
        assert_eq!(t.live_count(), 2);
        let (k, _) = t.next(&Value::str("b")).unwrap().unwrap();
        assert_eq!(k, Value::str("c"));
        let (k, _) = t.next(&Value::str("a")).unwrap().unwrap();
        assert_eq!(k, Value::str("c"));
        assert!(t.next(&Value::str("nokey")).is_err());
        assert_eq!(t.next(&Value::str("c")), Ok(None));
    }

    #[test]
    fn border_scans_upward() {
        let mut t = TableObject::new();
        assert_eq!(t.border(), 0);
        for i in 1..=3 {
            t.set(Value::Number(i as f64), Value::Bool(true)).unwrap();
        }
        assert_eq!(t.border(), 3);
        t.set(Value::Number(5.0), Value::Bool(true)).unwrap();
        assert_eq!(t.border(), 3);
    }

    #[test]
    fn tables_are_distinct_objects() {
        let mut s = ObjectStore::new();
        let a = s.alloc(TableObject::new());
        let b = s.alloc(TableObject::new());
        assert_ne!(a, b);
        assert!(!Value::Table(a).raw_eq(&Value::Table(b)));
        assert!(s.get(a).unwrap().metatable.is_none());
    }
}
