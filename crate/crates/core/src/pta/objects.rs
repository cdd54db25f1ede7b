use serde::Serialize;

use crate::ir::{ClassId, FieldId, FieldSig, MethodId, MethodSig, Program, StmtId, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ObjId(pub u32);

impl ObjId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Which members a metaobject may denote during target search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    /// `getDeclared*`: only members declared by the class itself.
    DeclaredOnly,
    /// `get*`: members of the class and all its supertypes.
    Public,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbstractObj {
    /// `o_i^t`, or `o_i^u` when `ty` is `None`.
    Heap {
        site: StmtId,
        ty: Option<ClassId>,
    },
    StringConst {
        value: String,
        site: StmtId,
    },
    UnknownString {
        site: StmtId,
    },
    /// `c^t` / `c^u`; `origin` is the entry call that produced it.
    ClassObj {
        ty: Option<ClassId>,
        origin: StmtId,
    },
    MethodObj {
        class: Option<ClassId>,
        sig: MethodSig,
        scope: Scope,
        origin: StmtId,
        class_origin: Option<StmtId>,
    },
    FieldObj {
        class: Option<ClassId>,
        sig: FieldSig,
        scope: Scope,
        origin: StmtId,
        class_origin: Option<StmtId>,
    },
    /// `elems` is the exact element list when the array comes from a literal.
    ArrayObj {
        site: StmtId,
        elems: Option<Vec<VarId>>,
    },
    /// Result array of a plural introspection call.
    Placeholder {
        site: StmtId,
    },
}

impl AbstractObj {
    /// Dynamic type of the object; `None` only for `o_i^u`.
    pub fn type_of(&self) -> Option<ClassId> {
        match self {
            AbstractObj::Heap { ty, .. } => *ty,
            AbstractObj::StringConst { .. } | AbstractObj::UnknownString { .. } => {
                Some(ClassId::STRING)
            }
            AbstractObj::ClassObj { .. } => Some(ClassId::CLASS),
            AbstractObj::MethodObj { .. } => Some(ClassId::METHOD),
            AbstractObj::FieldObj { .. } => Some(ClassId::FIELD),
            AbstractObj::ArrayObj { .. } | AbstractObj::Placeholder { .. } => Some(ClassId::OBJECT),
        }
    }

    pub fn is_unknown_heap(&self) -> bool {
        matches!(self, AbstractObj::Heap { ty: None, .. })
    }

    pub fn is_array(&self) -> bool {
        matches!(
            self,
            AbstractObj::ArrayObj { .. } | AbstractObj::Placeholder { .. }
        )
    }

    /// Statements that created this object or the metaobjects it was derived from.
    pub fn origins(&self) -> Vec<StmtId> {
        match self {
            AbstractObj::ClassObj { origin, .. } => vec![*origin],
            AbstractObj::MethodObj {
                origin,
                class_origin,
                ..
            }
            | AbstractObj::FieldObj {
                origin,
                class_origin,
                ..
            } => {
                let mut v = vec![*origin];
                v.extend(*class_origin);
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn render(&self, p: &Program) -> String {
        let cls = |c: &Option<ClassId>| c.map_or("u".to_string(), |c| p.class_name(c).to_string());
        let site = |s: &StmtId| p.stmt(*s).site.to_string();
        match self {
            AbstractObj::Heap { site: s, ty } => format!("o[{}]^{}", site(s), cls(ty)),
            AbstractObj::StringConst { value, .. } => format!("\"{value}\""),
            AbstractObj::UnknownString { site: s } => format!("str[{}]^u", site(s)),
            AbstractObj::ClassObj { ty, origin } => format!("c^{}@{}", cls(ty), site(origin)),
            AbstractObj::MethodObj {
                class,
                sig,
                scope,
                origin,
                ..
            } => {
                format!(
                    "m^{}_{}{}@{}",
                    cls(class),
                    render_msig(p, sig),
                    scope_mark(*scope),
                    site(origin)
                )
            }
            AbstractObj::FieldObj {
                class,
                sig,
                scope,
                origin,
                ..
            } => {
                format!(
                    "f^{}_{}{}@{}",
                    cls(class),
                    render_fsig(p, sig),
                    scope_mark(*scope),
                    site(origin)
                )
            }
            AbstractObj::ArrayObj { site: s, elems } => {
                format!(
                    "arr[{}]{}",
                    site(s),
                    if elems.is_some() { "" } else { "^u" }
                )
            }
            AbstractObj::Placeholder { site: s } => format!("ph[{}]", site(s)),
        }
    }
}

fn scope_mark(s: Scope) -> &'static str {
    match s {
        Scope::DeclaredOnly => "!decl",
        Scope::Public => "",
    }
}

pub fn render_msig(p: &Program, s: &MethodSig) -> String {
    if s.is_fully_unknown() {
        return "u".into();
    }
    let ret = s
        .ret
        .map_or("?".to_string(), |c| p.class_name(c).to_string());
    let name = s.name.clone().unwrap_or_else(|| "?".into());
    let params = s.params.as_ref().map_or("?".to_string(), |ps| {
        ps.iter()
            .map(|&c| p.class_name(c))
            .collect::<Vec<_>>()
            .join(",")
    });
    format!("{ret} {name}({params})")
}

pub fn render_fsig(p: &Program, s: &FieldSig) -> String {
    if s.is_unknown() {
        return "u".into();
    }
    let ty =
        s.ty.map_or("?".to_string(), |c| p.class_name(c).to_string());
    let name = s.name.clone().unwrap_or_else(|| "?".into());
    format!("{ty} {name}")
}

/// A slot that holds a points-to set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pointer {
    Var(VarId),
    Field(ObjId, FieldId),
    /// The collapsed element slot of an array object.
    Arr(ObjId),
    Static(FieldId),
    Ret(MethodId),
    /// Unfiltered result of a reflective `invoke`/`get`, before its cast.
    SiteResult(StmtId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Filter {
    None,
    /// A cast at `point`: known types must be subtypes; `o^u` is split lazily.
    Cast {
        ty: ClassId,
        point: StmtId,
    },
    /// A reflective argument or stored value checked against a declared type.
    Param {
        ty: ClassId,
        point: StmtId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Flow {
    pub from: Pointer,
    pub to: Pointer,
    pub filter: Filter,
}
