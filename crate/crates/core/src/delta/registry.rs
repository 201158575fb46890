//! The closed set of library services reachable through `$builtIn`.

use std::fmt;

/// How a service interacts with the object store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    /// Never looks at tables.
    Pure,
    /// Reads θ but leaves it unchanged.
    ReadsTables,
    /// May update or extend θ.
    WritesTables,
}

macro_rules! services {
    ($( $variant:ident => $name:literal, $cat:ident, $global:expr; )*) => {
        /// A library service. Every global library function is a wrapper
        /// whose body forwards to one of these.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Service {
            $( $variant, )*
        }

        impl Service {
            pub const ALL: &'static [Service] = &[ $( Service::$variant, )* ];

            /// Qualified name, as used by `$builtIn` and in error messages.
            pub fn name(&self) -> &'static str {
                match self {
                    $( Service::$variant => $name, )*
                }
            }

            pub fn category(&self) -> Category {
                match self {
                    $( Service::$variant => Category::$cat, )*
                }
            }

            /// Whether bootstrap installs a wrapper for this service (in the
            /// global table or one of the library tables).
            pub fn is_exported(&self) -> bool {
                match self {
                    $( Service::$variant => $global, )*
                }
            }
        }
    };
}

services! {
    Assert => "assert", Pure, true;
    Error => "error", Pure, true;
    GetMetatable => "getmetatable", ReadsTables, true;
    Ipairs => "ipairs", ReadsTables, true;
    Load => "load", ReadsTables, true;
    Next => "next", ReadsTables, true;
    Pairs => "pairs", ReadsTables, true;
    Pcall => "pcall", Pure, true;
    Print => "print", ReadsTables, true;
    RawEqual => "rawequal", Pure, true;
    RawGet => "rawget", ReadsTables, true;
    RawLen => "rawlen", ReadsTables, true;
    RawSet => "rawset", WritesTables, true;
    Select => "select", Pure, true;
    SetMetatable => "setmetatable", WritesTables, true;
    ToNumber => "tonumber", Pure, true;
    ToString => "tostring", ReadsTables, true;
    Type => "type", Pure, true;
    MathAbs => "math.abs", Pure, true;
    MathCeil => "math.ceil", Pure, true;
    MathFloor => "math.floor", Pure, true;
    MathFmod => "math.fmod", Pure, true;
    MathMax => "math.max", Pure, true;
    MathMin => "math.min", Pure, true;
    MathModf => "math.modf", Pure, true;
    MathSqrt => "math.sqrt", Pure, true;
    StringByte => "string.byte", Pure, true;
    StringChar => "string.char", Pure, true;
    StringDump => "string.dump", Pure, true;
    StringLen => "string.len", Pure, true;
    StringLower => "string.lower", Pure, true;
    StringRep => "string.rep", Pure, true;
    StringReverse => "string.reverse", Pure, true;
    StringSub => "string.sub", Pure, true;
    StringUpper => "string.upper", Pure, true;
    TableConcat => "table.concat", ReadsTables, true;
    TableInsert => "table.insert", WritesTables, true;
    TablePack => "table.pack", WritesTables, true;
    TableRemove => "table.remove", WritesTables, true;
    TableUnpack => "table.unpack", ReadsTables, true;
    // Engine-internal services, never installed as globals.
    ForPrep => "forprep", Pure, false;
    IpairsAux => "ipairsaux", ReadsTables, false;
    LoadPieces => "loadpieces", ReadsTables, false;
    GetIter => "getiter", Pure, false;
}

impl Service {
    pub fn from_name(name: &str) -> Option<Service> {
        Service::ALL.iter().copied().find(|s| s.name() == name)
    }

    /// Library table holding the wrapper, or `None` for base functions.
    pub fn library(&self) -> Option<&'static str> {
        self.name().split_once('.').map(|(lib, _)| lib)
    }

    /// Key under which the wrapper is stored in its table.
    pub fn field(&self) -> &'static str {
        match self.name().split_once('.') {
            Some((_, f)) => f,
            None => self.name(),
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_resolve() {
        for s in Service::ALL {
            assert_eq!(Service::from_name(s.name()), Some(*s));
        }
    }

    #[test]
    fn writers_match_table_updating_services() {
        let writers: Vec<_> = Service::ALL
            .iter()
            .filter(|s| s.category() == Category::WritesTables)
            .map(|s| s.name())
            .collect();
        assert!(writers.contains(&"rawset"));
        assert!(writers.contains(&"setmetatable"));
        assert_eq!(Service::Type.category(), Category::Pure);
        assert_eq!(Service::Next.category(), Category::ReadsTables);
    }

    #[test]
    fn library_split() {
        assert_eq!(Service::StringRep.library(), Some("string"));
        assert_eq!(Service::StringRep.field(), "rep");
        assert_eq!(Service::Next.library(), None);
    }
}
