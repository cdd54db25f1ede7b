//! Class-hierarchy services: subtyping, dispatch and member lookup.

use std::collections::BTreeSet;

use super::{ClassId, FieldId, FieldSig, MethodId, MethodSig, Native, Program};

impl Program {
    /// `t <: t2`: reflexive-transitive closure over extends and implements edges.
    pub fn is_subtype(&self, t: ClassId, t2: ClassId) -> bool {
        self.ancestors[t.index()].contains(&t2)
    }

    /// `t ≪: t2`. An unknown type is only compatible with `Object`.
    pub fn compatible(&self, t: Option<ClassId>, t2: ClassId) -> bool {
        match t {
            None => t2 == ClassId::OBJECT,
            Some(_) if t2 == ClassId::OBJECT => true,
            Some(t) => self.is_subtype(t, t2) || self.is_subtype(t2, t),
        }
    }

    /// All supertypes of `t`, including `t` itself.
    pub fn supertypes(&self, t: ClassId) -> &BTreeSet<ClassId> {
        &self.ancestors[t.index()]
    }

    /// All subtypes of `t`, including `t` itself, in id order.
    pub fn subtypes(&self, t: ClassId) -> Vec<ClassId> {
        self.class_ids()
            .filter(|&c| self.is_subtype(c, t))
            .collect()
    }

    /// All `t'` with `t' ≪: t`, in id order.
    pub fn compatible_types(&self, t: ClassId) -> Vec<ClassId> {
        self.class_ids()
            .filter(|&c| self.compatible(Some(c), t))
            .collect()
    }

    /// The superclass chain starting at `t` (inclusive), ending at `Object`.
    pub fn superclass_chain(&self, t: ClassId) -> impl Iterator<Item = ClassId> + '_ {
        std::iter::successors(Some(t), move |&c| self.class(c).superclass)
    }

    /// Virtual dispatch of `name(params)` on a receiver of the given type.
    ///
    /// Receivers of unknown type can only be dispatched on `toString()` and
    /// `getClass()`, which resolve to the built-in `Object` members.
    pub fn dispatch(
        &self,
        recv: Option<ClassId>,
        name: &str,
        params: &[ClassId],
    ) -> Option<MethodId> {
        match recv {
            Some(t) => {
                let found = self.superclass_chain(t).find_map(|c| {
                    self.class(c).methods.iter().copied().find(|&m| {
                        let mm = self.method(m);
                        !mm.is_static && mm.name == name && mm.params == params
                    })
                })?;
                (!self.method(found).is_abstract).then_some(found)
            }
            None => match (name, params.is_empty()) {
                ("toString", true) => Some(self.native_method(Native::ToString)),
                ("getClass", true) => Some(self.native_method(Native::GetClass)),
                _ => None,
            },
        }
    }

    /// Dispatch for untyped call sites: matches on name and arity.
    pub fn dispatch_by_arity(
        &self,
        recv: Option<ClassId>,
        name: &str,
        arity: usize,
    ) -> Option<MethodId> {
        let t = match recv {
            Some(t) => t,
            None if arity == 0 => return self.dispatch(None, name, &[]),
            None => return None,
        };
        let found = self.superclass_chain(t).find_map(|c| {
            self.class(c).methods.iter().copied().find(|&m| {
                let mm = self.method(m);
                !mm.is_static && mm.name == name && mm.params.len() == arity
            })
        })?;
        (!self.method(found).is_abstract).then_some(found)
    }

    /// Methods visible in `t` (declared, or inherited and not overridden).
    pub fn visible_methods(&self, t: ClassId) -> Vec<MethodId> {
        let mut seen: BTreeSet<(&str, &[ClassId])> = BTreeSet::new();
        let mut out = Vec::new();
        let mut queue = vec![t];
        let mut visited = BTreeSet::new();
        // Superclass chain first, so overriding declarations shadow inherited ones.
        let mut order: Vec<ClassId> = self.superclass_chain(t).collect();
        while let Some(c) = queue.pop() {
            if !visited.insert(c) {
                continue;
            }
            if !order.contains(&c) {
                order.push(c);
            }
            queue.extend(self.class(c).interfaces.iter().copied());
            queue.extend(self.class(c).superclass);
        }
        for c in order {
            for &m in &self.class(c).methods {
                let mm = self.method(m);
                if mm.is_clinit {
                    continue;
                }
                if seen.insert((mm.name.as_str(), mm.params.as_slice())) {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Fields visible in `t` (declared, or inherited and not shadowed by name).
    pub fn visible_fields(&self, t: ClassId) -> Vec<FieldId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for c in self.superclass_chain(t) {
            for &f in &self.class(c).fields {
                if seen.insert(self.field(f).name.as_str()) {
                    out.push(f);
                }
            }
        }
        out
    }

    pub fn method_matches(&self, m: MethodId, sig: &MethodSig) -> bool {
        let mm = self.method(m);
        if let Some(name) = &sig.name {
            if &mm.name != name {
                return false;
            }
        }
        if let Some(params) = &sig.params {
            if &mm.params != params {
                return false;
            }
        }
        match sig.ret {
            Some(r) => mm.ret == Some(r),
            None => true,
        }
    }

    pub fn field_matches(&self, f: FieldId, sig: &FieldSig) -> bool {
        let ff = self.field(f);
        sig.name.as_ref().is_none_or(|n| &ff.name == n) && sig.ty.is_none_or(|t| ff.ty == t)
    }

    /// Methods visible in `t` matching every known part of `sig`.
    pub fn mtd_lookup(&self, t: ClassId, sig: &MethodSig) -> BTreeSet<MethodId> {
        self.visible_methods(t)
            .into_iter()
            .filter(|&m| self.method_matches(m, sig))
            .collect()
    }

    /// Methods declared by `t` itself matching every known part of `sig`.
    pub fn mtd_lookup_declared(&self, t: ClassId, sig: &MethodSig) -> BTreeSet<MethodId> {
        self.class(t)
            .methods
            .iter()
            .copied()
            .filter(|&m| !self.method(m).is_clinit && self.method_matches(m, sig))
            .collect()
    }

    /// Fields visible in `t` matching every known part of `sig`.
    pub fn fld_lookup(&self, t: ClassId, sig: &FieldSig) -> BTreeSet<FieldId> {
        self.visible_fields(t)
            .into_iter()
            .filter(|&f| self.field_matches(f, sig))
            .collect()
    }

    pub fn fld_lookup_declared(&self, t: ClassId, sig: &FieldSig) -> BTreeSet<FieldId> {
        self.class(t)
            .fields
            .iter()
            .copied()
            .filter(|&f| self.field_matches(f, sig))
            .collect()
    }

    /// Resolves an instance field access `o.name` for an object of class `t`.
    pub fn resolve_instance_field(&self, t: ClassId, name: &str) -> Option<FieldId> {
        self.superclass_chain(t).find_map(|c| {
            self.class(c).fields.iter().copied().find(|&f| {
                let ff = self.field(f);
                !ff.is_static && ff.name == name
            })
        })
    }
}
