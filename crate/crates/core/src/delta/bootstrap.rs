//! Initial stores: the global table, the library tables and the string
//! metatable.

use std::collections::BTreeMap;

use crate::ast::{Expr, FunctionDef, FunctionLabel, ObjRef, Ref, Stmt, Value};
use crate::store::{ObjectStore, TableObject, ValueStore};

use super::Service;

/// Where bootstrap put the environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Environment {
    /// The reference `_ENV` is substituted by.
    pub env_ref: Ref,
    /// The global table.
    pub globals: ObjRef,
}

/// `function $name(...) return $builtIn name(...) end`
pub fn wrapper(service: Service) -> Value {
    let body = Stmt::Return(vec![Expr::BuiltIn(service, vec![Expr::VarArg])]);
    Value::function(FunctionDef::new(
        FunctionLabel::Builtin(service),
        vec![],
        true,
        body,
    ))
}

fn set(t: &mut TableObject, key: &str, v: Value) {
    t.set(Value::str(key), v).expect("string keys are valid");
}

/// Populates fresh stores with the standard environment.
pub fn bootstrap_env(sigma: &mut ValueStore, theta: &mut ObjectStore) -> Environment {
    let mut globals = TableObject::new();
    let mut libraries: BTreeMap<&str, TableObject> = BTreeMap::new();
    for service in Service::ALL.iter().filter(|s| s.is_exported()) {
        match service.library() {
            None => set(&mut globals, service.field(), wrapper(*service)),
            Some(lib) => set(
                libraries.entry(lib).or_default(),
                service.field(),
                wrapper(*service),
            ),
        }
    }
    if let Some(math) = libraries.get_mut("math") {
        set(math, "huge", Value::Number(f64::INFINITY));
        set(math, "pi", Value::Number(std::f64::consts::PI));
    }
    set(&mut globals, "_VERSION", Value::str("Lua 5.2"));

    let globals_ref = theta.alloc(TableObject::new());
    for (lib, table) in libraries {
        let r = theta.alloc(table);
        set(&mut globals, lib, Value::Table(r));
        if lib == "string" {
            let mut mt = TableObject::new();
            set(&mut mt, "__index", Value::Table(r));
            theta.string_metatable = Some(theta.alloc(mt));
        }
    }
    set(&mut globals, "_G", Value::Table(globals_ref));
    *theta.get_mut(globals_ref).expect("just allocated") = globals;

    let env_ref = sigma.alloc(Value::Table(globals_ref));
    Environment {
        env_ref,
        globals: globals_ref,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn installs_globals_and_libraries() {
        let mut sigma = ValueStore::new();
        let mut theta = ObjectStore::new();
        let env = bootstrap_env(&mut sigma, &mut theta);
        assert_eq!(sigma.read(env.env_ref).unwrap(), &Value::Table(env.globals));
        let g = theta.get(env.globals).unwrap();
        assert_eq!(g.get_str("type"), wrapper(Service::Type));
        assert_eq!(g.get_str("_G"), Value::Table(env.globals));
        assert!(g.get_str("forprep").is_nil());
        let string = g.get_str("string").as_table().unwrap();
        assert_eq!(
            theta.get(string).unwrap().get_str("rep"),
            wrapper(Service::StringRep)
        );
        let mt = theta.string_metatable.unwrap();
        assert_eq!(
            theta.get(mt).unwrap().get_str("__index"),
            Value::Table(string)
        );
    }
}
