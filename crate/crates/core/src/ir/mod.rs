//! The core IR: classes, members, statements and site identifiers.
//!
//! A [`Program`] is produced by [`parse_program`] and is immutable afterwards.
//! All cross references are dense indices (`ClassId`, `MethodId`, ...) into the
//! program tables, so the analysis can key its maps on small `Copy` values.

mod hierarchy;
mod parser;
mod print;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

pub use parser::{parse_program, IrError};

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

index_type!(ClassId);
index_type!(MethodId);
index_type!(FieldId);
index_type!(VarId);
index_type!(
    /// Position of a statement in [`Program::stmts`].
    StmtId
);

impl ClassId {
    pub const OBJECT: ClassId = ClassId(0);
    pub const CLASS: ClassId = ClassId(1);
    pub const STRING: ClassId = ClassId(2);
    pub const METHOD: ClassId = ClassId(3);
    pub const FIELD: ClassId = ClassId(4);
}

/// Names of the pre-registered classes, in `ClassId` order.
pub const BUILTIN_CLASSES: [&str; 5] = ["Object", "Class", "String", "Method", "Field"];

/// Method names that the textual format reserves for reflection calls.
pub const RESERVED_METHOD_NAMES: [&str; 15] = [
    "forName",
    "loadClass",
    "getClass",
    "getMethod",
    "getDeclaredMethod",
    "getMethods",
    "getDeclaredMethods",
    "getField",
    "getDeclaredField",
    "getFields",
    "getDeclaredFields",
    "newInstance",
    "invoke",
    "get",
    "set",
];

#[derive(Debug, Clone)]
pub struct ClassType {
    pub name: String,
    pub superclass: Option<ClassId>,
    pub interfaces: Vec<ClassId>,
    pub fields: Vec<FieldId>,
    pub methods: Vec<MethodId>,
    pub is_abstract: bool,
    pub is_interface: bool,
    /// Static initializer, if the class declares one.
    pub clinit: Option<MethodId>,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct FieldMember {
    pub name: String,
    pub declaring: ClassId,
    pub ty: ClassId,
    pub is_static: bool,
}

/// Built-in methods of `Object` that have no IR body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Native {
    ToString,
    GetClass,
}

#[derive(Debug, Clone)]
pub struct MethodMember {
    pub name: String,
    pub declaring: ClassId,
    pub params: Vec<ClassId>,
    /// `None` for `void`.
    pub ret: Option<ClassId>,
    pub is_static: bool,
    pub is_abstract: bool,
    pub native: Option<Native>,
    pub this_var: Option<VarId>,
    pub param_vars: Vec<VarId>,
    pub body: Vec<StmtId>,
    pub is_clinit: bool,
}

impl MethodMember {
    pub fn has_body(&self) -> bool {
        !self.is_abstract && self.native.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    pub method: MethodId,
}

/// A method signature whose parts may be unknown (`None`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MethodSig {
    pub ret: Option<ClassId>,
    pub name: Option<String>,
    pub params: Option<Vec<ClassId>>,
}

impl MethodSig {
    pub fn unknown() -> Self {
        Self::default()
    }

    pub fn named(name: impl Into<String>) -> Self {
        MethodSig {
            name: Some(name.into()),
            ..Self::default()
        }
    }

    /// The `m_u` shorthand: both the name and the parameter list are unknown.
    pub fn is_unknown(&self) -> bool {
        self.name.is_none() && self.params.is_none()
    }

    pub fn is_fully_unknown(&self) -> bool {
        self.is_unknown() && self.ret.is_none()
    }
}

/// A field signature whose parts may be unknown (`None`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldSig {
    pub ty: Option<ClassId>,
    pub name: Option<String>,
}

impl FieldSig {
    pub fn unknown() -> Self {
        Self::default()
    }

    pub fn named(name: impl Into<String>) -> Self {
        FieldSig {
            name: Some(name.into()),
            ty: None,
        }
    }

    /// The `f_u` shorthand.
    pub fn is_unknown(&self) -> bool {
        self.name.is_none() && self.ty.is_none()
    }
}

/// Stable, human-readable identity of a statement: `<method>/<callee>/<ordinal>`.
///
/// Ordinals count statements with the same callee inside the same (qualified)
/// method name, in source order, starting at 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId {
    pub method: String,
    pub callee: String,
    pub ordinal: u32,
}

impl SiteId {
    pub fn parse(text: &str) -> Option<SiteId> {
        let (rest, ordinal) = text.rsplit_once('/')?;
        let (method, callee) = rest.split_once('/')?;
        if method.is_empty() || callee.is_empty() {
            return None;
        }
        Some(SiteId {
            method: method.to_string(),
            callee: callee.to_string(),
            ordinal: ordinal.parse().ok()?,
        })
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.method, self.callee, self.ordinal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntrospectKind {
    GetMethod,
    GetDeclaredMethod,
    GetMethods,
    GetDeclaredMethods,
    GetField,
    GetDeclaredField,
    GetFields,
    GetDeclaredFields,
}

impl IntrospectKind {
    pub const ALL: [IntrospectKind; 8] = [
        IntrospectKind::GetMethod,
        IntrospectKind::GetDeclaredMethod,
        IntrospectKind::GetMethods,
        IntrospectKind::GetDeclaredMethods,
        IntrospectKind::GetField,
        IntrospectKind::GetDeclaredField,
        IntrospectKind::GetFields,
        IntrospectKind::GetDeclaredFields,
    ];

    pub fn method_name(self) -> &'static str {
        match self {
            IntrospectKind::GetMethod => "getMethod",
            IntrospectKind::GetDeclaredMethod => "getDeclaredMethod",
            IntrospectKind::GetMethods => "getMethods",
            IntrospectKind::GetDeclaredMethods => "getDeclaredMethods",
            IntrospectKind::GetField => "getField",
            IntrospectKind::GetDeclaredField => "getDeclaredField",
            IntrospectKind::GetFields => "getFields",
            IntrospectKind::GetDeclaredFields => "getDeclaredFields",
        }
    }

    pub fn from_method_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.method_name() == name)
    }

    pub fn is_plural(self) -> bool {
        matches!(
            self,
            IntrospectKind::GetMethods
                | IntrospectKind::GetDeclaredMethods
                | IntrospectKind::GetFields
                | IntrospectKind::GetDeclaredFields
        )
    }

    pub fn is_method(self) -> bool {
        matches!(
            self,
            IntrospectKind::GetMethod
                | IntrospectKind::GetDeclaredMethod
                | IntrospectKind::GetMethods
                | IntrospectKind::GetDeclaredMethods
        )
    }

    pub fn is_declared(self) -> bool {
        matches!(
            self,
            IntrospectKind::GetDeclaredMethod
                | IntrospectKind::GetDeclaredMethods
                | IntrospectKind::GetDeclaredField
                | IntrospectKind::GetDeclaredFields
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    Var(VarId),
    Null,
}

impl Receiver {
    pub fn var(self) -> Option<VarId> {
        match self {
            Receiver::Var(v) => Some(v),
            Receiver::Null => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Alloc {
        lhs: VarId,
        class: ClassId,
    },
    Copy {
        lhs: VarId,
        rhs: VarId,
    },
    /// Instance field read; the field is resolved by name against each receiver's class.
    Load {
        lhs: VarId,
        base: VarId,
        field: String,
    },
    Store {
        base: VarId,
        field: String,
        rhs: VarId,
    },
    StaticLoad {
        lhs: VarId,
        field: FieldId,
    },
    StaticStore {
        field: FieldId,
        rhs: VarId,
    },
    VirtualCall {
        lhs: Option<VarId>,
        recv: VarId,
        name: String,
        args: Vec<VarId>,
    },
    StaticCall {
        lhs: Option<VarId>,
        method: MethodId,
        args: Vec<VarId>,
    },
    StringConst {
        lhs: VarId,
        value: String,
    },
    UnknownString {
        lhs: VarId,
    },
    Cast {
        lhs: VarId,
        class: ClassId,
        rhs: VarId,
    },
    ArrayLit {
        lhs: VarId,
        elems: Vec<VarId>,
    },
    UnknownArray {
        lhs: VarId,
    },
    ArrayLoad {
        lhs: VarId,
        array: VarId,
    },
    ArrayStore {
        array: VarId,
        rhs: VarId,
    },
    /// `Class.forName(s)`, or `ClassLoader.loadClass(s)` when `via_loader` is set.
    ForName {
        lhs: VarId,
        name: VarId,
        via_loader: bool,
    },
    GetClass {
        lhs: VarId,
        recv: VarId,
    },
    ClassLit {
        lhs: VarId,
        class: ClassId,
    },
    GetMember {
        lhs: VarId,
        class_var: VarId,
        kind: IntrospectKind,
        name: Option<VarId>,
    },
    NewInstance {
        lhs: VarId,
        class_var: VarId,
    },
    /// `lhs = (cast) method_var.invoke(recv, args)`; an absent cast is `Object`.
    Invoke {
        lhs: Option<VarId>,
        cast: ClassId,
        method_var: VarId,
        recv: Receiver,
        args: VarId,
    },
    FieldGet {
        lhs: Option<VarId>,
        cast: ClassId,
        field_var: VarId,
        recv: Receiver,
    },
    FieldSet {
        field_var: VarId,
        recv: Receiver,
        value: VarId,
    },
    Return {
        value: VarId,
    },
}

impl StmtKind {
    pub fn is_side_effect_call(&self) -> bool {
        matches!(
            self,
            StmtKind::Invoke { .. } | StmtKind::FieldGet { .. } | StmtKind::FieldSet { .. }
        )
    }
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub site: SiteId,
    pub method: MethodId,
    pub line: usize,
    pub kind: StmtKind,
}

/// A parsed, resolved program.
#[derive(Debug, Clone)]
pub struct Program {
    pub classes: Vec<ClassType>,
    pub methods: Vec<MethodMember>,
    pub fields: Vec<FieldMember>,
    pub vars: Vec<VarInfo>,
    pub stmts: Vec<Statement>,
    pub main: MethodId,
    class_index: HashMap<String, ClassId>,
    site_index: HashMap<SiteId, StmtId>,
    /// Reflexive-transitive supertypes of every class.
    ancestors: Vec<BTreeSet<ClassId>>,
}

impl Program {
    pub fn class(&self, id: ClassId) -> &ClassType {
        &self.classes[id.index()]
    }

    pub fn method(&self, id: MethodId) -> &MethodMember {
        &self.methods[id.index()]
    }

    pub fn field(&self, id: FieldId) -> &FieldMember {
        &self.fields[id.index()]
    }

    pub fn var(&self, id: VarId) -> &VarInfo {
        &self.vars[id.index()]
    }

    pub fn stmt(&self, id: StmtId) -> &Statement {
        &self.stmts[id.index()]
    }

    pub fn class_by_name(&self, name: &str) -> Option<ClassId> {
        self.class_index.get(name).copied()
    }

    pub fn stmt_by_site(&self, site: &SiteId) -> Option<StmtId> {
        self.site_index.get(site).copied()
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.classes.len() as u32).map(ClassId)
    }

    pub fn stmt_ids(&self) -> impl Iterator<Item = StmtId> + '_ {
        (0..self.stmts.len() as u32).map(StmtId)
    }

    pub fn method_ids(&self) -> impl Iterator<Item = MethodId> + '_ {
        (0..self.methods.len() as u32).map(MethodId)
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        &self.class(id).name
    }

    /// `Class.method`, as used in site ids.
    pub fn method_qualified_name(&self, id: MethodId) -> String {
        let m = self.method(id);
        format!("{}.{}", self.class_name(m.declaring), m.name)
    }

    /// `Class.method(P1,P2)`, the descriptor form used in reports and annotations.
    pub fn method_descriptor(&self, id: MethodId) -> String {
        let m = self.method(id);
        let params: Vec<&str> = m.params.iter().map(|&p| self.class_name(p)).collect();
        format!(
            "{}.{}({})",
            self.class_name(m.declaring),
            m.name,
            params.join(",")
        )
    }

    pub fn field_descriptor(&self, id: FieldId) -> String {
        let f = self.field(id);
        format!("{}.{}", self.class_name(f.declaring), f.name)
    }

    /// The object-typed method (`Object.toString` / `Object.getClass`) for a native.
    pub fn native_method(&self, native: Native) -> MethodId {
        let name = match native {
            Native::ToString => "toString",
            Native::GetClass => "getClass",
        };
        self.class(ClassId::OBJECT)
            .methods
            .iter()
            .copied()
            .find(|&m| self.method(m).name == name)
            .expect("Object declares its natives")
    }
}
