//! Entry methods, member introspection and reflective allocation.

use crate::annotations::Override;
use crate::ir::{ClassId, FieldSig, IntrospectKind, MethodSig, StmtId, StmtKind, VarId};
use crate::pta::{AbstractObj, FactKind, Pointer, Scope, Solver};

use super::Rule;

impl Solver<'_> {
    /// `Class.forName`, `getClass`, `.class` and the `get*Method(s)`/`get*Field(s)` calls.
    pub(crate) fn propagate(&mut self, sid: StmtId) {
        let prog = self.prog;
        match &prog.stmt(sid).kind {
            StmtKind::ForName { lhs, name, .. } => {
                if let Some(ov) = self.ann.get(sid) {
                    return self.apply_override(sid, *lhs, ov, None);
                }
                for o in self.var_pts(*name) {
                    match self.obj(o).clone() {
                        AbstractObj::StringConst { value, .. } => {
                            match prog.class_by_name(&value) {
                                Some(t) => {
                                    self.add_pt(
                                        Rule::PForName,
                                        Pointer::Var(*lhs),
                                        AbstractObj::ClassObj {
                                            ty: Some(t),
                                            origin: sid,
                                        },
                                    );
                                    self.emit(Rule::PForName, FactKind::Init(t));
                                }
                                None => self.diag(
                                    Rule::PForName,
                                    sid,
                                    format!("class `{value}` is not in the program"),
                                ),
                            }
                        }
                        AbstractObj::UnknownString { .. } => self.add_pt(
                            Rule::PForName,
                            Pointer::Var(*lhs),
                            AbstractObj::ClassObj {
                                ty: None,
                                origin: sid,
                            },
                        ),
                        _ => {}
                    }
                }
            }
            StmtKind::GetClass { lhs, recv } => {
                for o in self.var_pts(*recv) {
                    let ty = self.obj(o).type_of();
                    self.add_pt(
                        Rule::PForName,
                        Pointer::Var(*lhs),
                        AbstractObj::ClassObj { ty, origin: sid },
                    );
                }
            }
            StmtKind::ClassLit { lhs, class } => self.add_pt(
                Rule::PForName,
                Pointer::Var(*lhs),
                AbstractObj::ClassObj {
                    ty: Some(*class),
                    origin: sid,
                },
            ),
            StmtKind::GetMember {
                lhs,
                class_var,
                kind,
                name,
            } => {
                if let Some(ov) = self.ann.get(sid) {
                    return self.apply_override(sid, *lhs, ov, Some(*kind));
                }
                self.introspect(sid, *lhs, *class_var, *kind, *name);
            }
            _ => unreachable!("not an entry or introspection statement"),
        }
    }

    fn introspect(
        &mut self,
        sid: StmtId,
        lhs: VarId,
        class_var: VarId,
        kind: IntrospectKind,
        name: Option<VarId>,
    ) {
        let rule = if kind.is_method() {
            Rule::PGetMtd
        } else {
            Rule::PGetFld
        };
        let scope = if kind.is_declared() {
            Scope::DeclaredOnly
        } else {
            Scope::Public
        };
        let classes: Vec<(Option<ClassId>, StmtId)> = self
            .var_pts(class_var)
            .into_iter()
            .filter_map(|o| match self.obj(o) {
                AbstractObj::ClassObj { ty, origin } => Some((*ty, *origin)),
                _ => None,
            })
            .collect();
        let meta = |class: Option<ClassId>, member: Option<String>, class_origin: StmtId| {
            if kind.is_method() {
                AbstractObj::MethodObj {
                    class,
                    sig: MethodSig {
                        name: member,
                        ..MethodSig::unknown()
                    },
                    scope,
                    origin: sid,
                    class_origin: Some(class_origin),
                }
            } else {
                AbstractObj::FieldObj {
                    class,
                    sig: FieldSig {
                        name: member,
                        ty: None,
                    },
                    scope,
                    origin: sid,
                    class_origin: Some(class_origin),
                }
            }
        };
        match name {
            None => {
                let ph = self.intern(AbstractObj::Placeholder { site: sid });
                self.emit(rule, FactKind::Pt(Pointer::Var(lhs), ph));
                for (class, origin) in classes {
                    self.add_pt(rule, Pointer::Arr(ph), meta(class, None, origin));
                }
            }
            Some(name_var) => {
                let names: Vec<Option<String>> = self
                    .var_pts(name_var)
                    .into_iter()
                    .filter_map(|o| match self.obj(o) {
                        AbstractObj::StringConst { value, .. } => Some(Some(value.clone())),
                        AbstractObj::UnknownString { .. } => Some(None),
                        _ => None,
                    })
                    .collect();
                for &(class, origin) in &classes {
                    for n in &names {
                        self.add_pt(rule, Pointer::Var(lhs), meta(class, n.clone(), origin));
                    }
                }
            }
        }
    }

    /// Replaces the rule-derived output of an annotated site.
    fn apply_override(
        &mut self,
        sid: StmtId,
        lhs: VarId,
        ov: &Override,
        kind: Option<IntrospectKind>,
    ) {
        let prog = self.prog;
        let rule = match kind {
            None => Rule::PForName,
            Some(k) if k.is_method() => Rule::PGetMtd,
            Some(_) => Rule::PGetFld,
        };
        let objs: Vec<AbstractObj> = match ov {
            Override::Nothing => Vec::new(),
            Override::Classes(cs) => {
                for &c in cs {
                    self.emit(rule, FactKind::Init(c));
                }
                cs.iter()
                    .map(|&c| AbstractObj::ClassObj {
                        ty: Some(c),
                        origin: sid,
                    })
                    .collect()
            }
            Override::Methods(ms) => ms
                .iter()
                .map(|&m| {
                    let mm = prog.method(m);
                    AbstractObj::MethodObj {
                        class: Some(mm.declaring),
                        sig: MethodSig {
                            ret: mm.ret,
                            name: Some(mm.name.clone()),
                            params: Some(mm.params.clone()),
                        },
                        scope: Scope::DeclaredOnly,
                        origin: sid,
                        class_origin: None,
                    }
                })
                .collect(),
            Override::Fields(fs) => fs
                .iter()
                .map(|&f| {
                    let ff = prog.field(f);
                    AbstractObj::FieldObj {
                        class: Some(ff.declaring),
                        sig: FieldSig {
                            ty: Some(ff.ty),
                            name: Some(ff.name.clone()),
                        },
                        scope: Scope::DeclaredOnly,
                        origin: sid,
                        class_origin: None,
                    }
                })
                .collect(),
        };
        let target = match kind {
            Some(k) if k.is_plural() => {
                let ph = self.intern(AbstractObj::Placeholder { site: sid });
                self.emit(rule, FactKind::Pt(Pointer::Var(lhs), ph));
                Pointer::Arr(ph)
            }
            _ => Pointer::Var(lhs),
        };
        for o in objs {
            self.add_pt(rule, target, o);
        }
    }

    /// `L-KwTp` / `L-UkwTp`.
    pub(crate) fn new_instance(&mut self, sid: StmtId, lhs: VarId, class_var: VarId) {
        for o in self.var_pts(class_var) {
            match *self.obj(o) {
                AbstractObj::ClassObj { ty: Some(t), .. } => {
                    self.add_pt(
                        Rule::LKwTp,
                        Pointer::Var(lhs),
                        AbstractObj::Heap {
                            site: sid,
                            ty: Some(t),
                        },
                    );
                    self.emit(Rule::LKwTp, FactKind::Init(t));
                }
                AbstractObj::ClassObj { ty: None, .. } => self.add_pt(
                    Rule::LUkwTp,
                    Pointer::Var(lhs),
                    AbstractObj::Heap {
                        site: sid,
                        ty: None,
                    },
                ),
                _ => {}
            }
        }
    }
}
