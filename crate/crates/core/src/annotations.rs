//! Site annotations that replace what the analysis infers at `forName` and
//! member-introspection sites.
//!
//! One annotation per line: `<site> <value>`, where the value is a class name,
//! `NONE`, `METHOD C.m(T1,T2)` or `FIELD C.f`. Blank lines and `#` comments are
//! ignored; repeated sites accumulate.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ir::{
    ClassId, FieldId, FieldSig, MethodId, MethodSig, Program, SiteId, StmtId, StmtKind,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown site `{site}`")]
    UnknownSite { line: usize, site: String },
    #[error("line {line}: unknown class `{name}`")]
    UnknownClass { line: usize, name: String },
    #[error("line {line}: `{descriptor}` matches no member")]
    UnresolvedMember { line: usize, descriptor: String },
    #[error("line {line}: site `{site}` cannot take a {kind} annotation")]
    WrongKind {
        line: usize,
        site: String,
        kind: &'static str,
    },
    #[error("line {line}: site `{site}` mixes NONE with other values")]
    MixedNone { line: usize, site: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Class(String),
    Nothing,
    Method(String),
    Field(String),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Class(_) => "class",
            Value::Nothing => "NONE",
            Value::Method(_) => "METHOD",
            Value::Field(_) => "FIELD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub site: SiteId,
    pub value: Value,
    pub line: usize,
}

/// Parsed but unresolved annotations, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    pub entries: Vec<Annotation>,
}

impl AnnotationSet {
    pub fn parse(text: &str) -> Result<AnnotationSet, AnnotationError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut parts = body.split_whitespace();
            let site_text = parts.next().unwrap_or_default();
            let site = SiteId::parse(site_text).ok_or_else(|| AnnotationError::Syntax {
                line,
                msg: format!("malformed site `{site_text}`"),
            })?;
            let rest: Vec<&str> = parts.collect();
            let value = match rest.as_slice() {
                ["NONE"] => Value::Nothing,
                ["METHOD", d] => Value::Method(d.to_string()),
                ["FIELD", d] => Value::Field(d.to_string()),
                [c] if !c.contains('(') => Value::Class(c.to_string()),
                _ => {
                    return Err(AnnotationError::Syntax {
                        line,
                        msg: format!("malformed value in `{body}`"),
                    });
                }
            };
            entries.push(Annotation { site, value, line });
        }
        Ok(AnnotationSet { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves names against `p` and checks each value suits its site.
    pub fn resolve(&self, p: &Program) -> Result<ResolvedAnnotations, AnnotationError> {
        let mut by_site: BTreeMap<StmtId, Override> = BTreeMap::new();
        for a in &self.entries {
            let line = a.line;
            let sid = p
                .stmt_by_site(&a.site)
                .ok_or_else(|| AnnotationError::UnknownSite {
                    line,
                    site: a.site.to_string(),
                })?;
            let wrong = || AnnotationError::WrongKind {
                line,
                site: a.site.to_string(),
                kind: a.value.kind(),
            };
            let member_kind = match &p.stmt(sid).kind {
                StmtKind::ForName { .. } => None,
                StmtKind::GetMember { kind, .. } => Some(kind.is_method()),
                _ => return Err(wrong()),
            };
            let next = match &a.value {
                Value::Nothing => Override::Nothing,
                Value::Class(name) => {
                    if member_kind.is_some() {
                        return Err(wrong());
                    }
                    let c = p
                        .class_by_name(name)
                        .ok_or_else(|| AnnotationError::UnknownClass {
                            line,
                            name: name.clone(),
                        })?;
                    Override::Classes(BTreeSet::from([c]))
                }
                Value::Method(d) => {
                    if member_kind != Some(true) {
                        return Err(wrong());
                    }
                    Override::Methods(resolve_method(p, d, line)?)
                }
                Value::Field(d) => {
                    if member_kind != Some(false) {
                        return Err(wrong());
                    }
                    Override::Fields(resolve_field(p, d, line)?)
                }
            };
            match by_site.remove(&sid) {
                None => {
                    by_site.insert(sid, next);
                }
                Some(prev) => {
                    let merged = prev.merge(next).ok_or_else(|| AnnotationError::MixedNone {
                        line,
                        site: a.site.to_string(),
                    })?;
                    by_site.insert(sid, merged);
                }
            }
        }
        Ok(ResolvedAnnotations { by_site })
    }
}

/// The objects an annotated site produces instead of the inferred ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Override {
    Nothing,
    Classes(BTreeSet<ClassId>),
    Methods(BTreeSet<MethodId>),
    Fields(BTreeSet<FieldId>),
}

impl Override {
    fn merge(self, other: Override) -> Option<Override> {
        match (self, other) {
            (Override::Nothing, Override::Nothing) => Some(Override::Nothing),
            (Override::Classes(mut a), Override::Classes(b)) => {
                a.extend(b);
                Some(Override::Classes(a))
            }
            (Override::Methods(mut a), Override::Methods(b)) => {
                a.extend(b);
                Some(Override::Methods(a))
            }
            (Override::Fields(mut a), Override::Fields(b)) => {
                a.extend(b);
                Some(Override::Fields(a))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedAnnotations {
    by_site: BTreeMap<StmtId, Override>,
}

impl ResolvedAnnotations {
    pub fn get(&self, sid: StmtId) -> Option<&Override> {
        self.by_site.get(&sid)
    }

    pub fn sites(&self) -> impl Iterator<Item = StmtId> + '_ {
        self.by_site.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.by_site.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_site.is_empty()
    }
}

fn unresolved(d: &str, line: usize) -> AnnotationError {
    AnnotationError::UnresolvedMember {
        line,
        descriptor: d.to_string(),
    }
}

/// `C.m(T1,T2)`: every method named `m` with those parameters visible in `C`.
fn resolve_method(
    p: &Program,
    d: &str,
    line: usize,
) -> Result<BTreeSet<MethodId>, AnnotationError> {
    let (head, params) = d
        .strip_suffix(')')
        .and_then(|s| s.split_once('('))
        .ok_or_else(|| AnnotationError::Syntax {
            line,
            msg: format!("malformed method descriptor `{d}`"),
        })?;
    let (class, name) = head.rsplit_once('.').ok_or_else(|| unresolved(d, line))?;
    let c = p
        .class_by_name(class)
        .ok_or_else(|| AnnotationError::UnknownClass {
            line,
            name: class.to_string(),
        })?;
    let params = params
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|t| {
            p.class_by_name(t)
                .ok_or_else(|| AnnotationError::UnknownClass {
                    line,
                    name: t.to_string(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sig = MethodSig {
        ret: None,
        name: Some(name.to_string()),
        params: Some(params),
    };
    let found = p.mtd_lookup(c, &sig);
    if found.is_empty() {
        return Err(unresolved(d, line));
    }
    Ok(found)
}

/// `C.f`: the field named `f` visible in `C`.
fn resolve_field(p: &Program, d: &str, line: usize) -> Result<BTreeSet<FieldId>, AnnotationError> {
    let (class, name) = d.rsplit_once('.').ok_or_else(|| unresolved(d, line))?;
    let c = p
        .class_by_name(class)
        .ok_or_else(|| AnnotationError::UnknownClass {
            line,
            name: class.to_string(),
        })?;
    let found = p.fld_lookup(
        c,
        &FieldSig {
            ty: None,
            name: Some(name.to_string()),
        },
    );
    if found.is_empty() {
        return Err(unresolved(d, line));
    }
    Ok(found)
}
