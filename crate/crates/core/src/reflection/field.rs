//! `f.get(y)` / `f.set(y, x)`: I-Get*/I-Set*, T-Get, T-Set and L-GSet.

use std::collections::BTreeSet;

use crate::ir::{ClassId, FieldId, FieldSig, Receiver, StmtId, StmtKind, VarId};
use crate::pta::{AbstractObj, Derived, FactKind, Filter, ObjId, Pointer, Scope, Solver, Target};

use super::{classes_with_field, fld_targets, side_effect_lhm, Rule};

/// What distinguishes a read from a write at a field access site.
#[derive(Clone, Copy)]
enum Access {
    Get { lhs: Option<VarId>, cast: ClassId },
    Set { value: VarId },
}

impl Solver<'_> {
    pub(crate) fn on_field_access(&mut self, sid: StmtId) {
        let (field_var, recv, access) = match self.prog.stmt(sid).kind {
            StmtKind::FieldGet {
                lhs,
                cast,
                field_var,
                recv,
            } => (field_var, recv, Access::Get { lhs, cast }),
            StmtKind::FieldSet {
                field_var,
                recv,
                value,
            } => (field_var, recv, Access::Set { value }),
            _ => unreachable!("not a field access"),
        };
        let (tp, sig_rule, s2t) = match access {
            Access::Get { .. } => (Rule::IGetTp, Rule::IGetSig, Rule::IGetS2T),
            Access::Set { .. } => (Rule::ISetTp, Rule::ISetSig, Rule::ISetS2T),
        };
        let recv_objs = recv.var().map(|v| self.var_pts(v)).unwrap_or_default();
        let unknown_recv =
            recv == Receiver::Null || recv_objs.iter().any(|&o| self.obj(o).is_unknown_heap());
        let value_types: Option<BTreeSet<ClassId>> = match access {
            Access::Get { .. } => None,
            Access::Set { value } => Some(self.var_objs_types(value)),
        };
        let value_empty = match access {
            Access::Set { value } => self.st.var_pt(value).is_empty(),
            Access::Get { .. } => false,
        };

        for f in self.var_pts(field_var) {
            let AbstractObj::FieldObj {
                class,
                sig,
                scope,
                origin,
                class_origin,
            } = self.obj(f).clone()
            else {
                continue;
            };
            let refine =
                |class: Option<ClassId>, sig: FieldSig, scope: Scope| AbstractObj::FieldObj {
                    class,
                    sig,
                    scope,
                    origin,
                    class_origin,
                };
            if class.is_none() {
                for &o in &recv_objs {
                    if let Some(t) = self.obj(o).type_of() {
                        self.add_pt(
                            tp,
                            Pointer::Var(field_var),
                            refine(Some(t), sig.clone(), Scope::Public),
                        );
                    }
                }
            }
            if sig.is_unknown() {
                let tys: BTreeSet<ClassId> = self
                    .prog
                    .fields
                    .iter()
                    .map(|f| f.ty)
                    .filter(|&ty| self.field_type_fits(access, value_types.as_ref(), ty, false))
                    .collect();
                for ty in tys {
                    self.add_pt(
                        sig_rule,
                        Pointer::Var(field_var),
                        refine(
                            class,
                            FieldSig {
                                ty: Some(ty),
                                name: None,
                            },
                            scope,
                        ),
                    );
                }
            }
            if let (None, Some(name)) = (class, &sig.name) {
                if unknown_recv {
                    let sigs: BTreeSet<FieldSig> = self
                        .prog
                        .fields
                        .iter()
                        .filter(|f| &f.name == name && sig.ty.is_none_or(|t| t == f.ty))
                        .filter(|f| {
                            self.field_type_fits(access, value_types.as_ref(), f.ty, value_empty)
                        })
                        .map(|f| FieldSig {
                            ty: Some(f.ty),
                            name: Some(name.clone()),
                        })
                        .collect();
                    for s in sigs {
                        for t in classes_with_field(self.prog, &s) {
                            self.add_pt(
                                s2t,
                                Pointer::Var(field_var),
                                refine(Some(t), s.clone(), Scope::Public),
                            );
                        }
                    }
                }
            }
        }

        if let Access::Get { lhs, cast } = access {
            self.result_flow(Rule::TGet, sid, lhs, cast);
        }
        let unknown_objs: Vec<ObjId> = recv_objs
            .iter()
            .copied()
            .filter(|&o| self.obj(o).is_unknown_heap())
            .collect();
        for f in self.active_metas(sid, field_var) {
            let AbstractObj::FieldObj {
                class: Some(t),
                sig,
                scope,
                ..
            } = self.obj(f).clone()
            else {
                continue;
            };
            let targets = fld_targets(self.prog, self.cfg.mode, t, &sig, scope);
            if !unknown_objs.is_empty() {
                let decls: BTreeSet<ClassId> = targets
                    .iter()
                    .map(|&f| self.prog.field(f).declaring)
                    .collect();
                let recv_var = recv.var().expect("unknown receivers come from a variable");
                for ty in side_effect_lhm(self.prog, t, &decls) {
                    for &o in &unknown_objs {
                        let AbstractObj::Heap { site, .. } = *self.obj(o) else {
                            continue;
                        };
                        self.add_pt(
                            Rule::LGSet,
                            Pointer::Var(recv_var),
                            AbstractObj::Heap { site, ty: Some(ty) },
                        );
                    }
                    self.emit(Rule::LGSet, FactKind::Init(ty));
                    self.emit(
                        Rule::LGSet,
                        FactKind::Lhm {
                            point: sid,
                            ty,
                            cast: false,
                        },
                    );
                }
            }
            for target in targets {
                self.transform_field(sid, target, recv, &recv_objs, access);
            }
        }
    }

    fn var_objs_types(&self, v: VarId) -> BTreeSet<ClassId> {
        self.st
            .var_objs(v)
            .filter_map(AbstractObj::type_of)
            .collect()
    }

    /// Whether a field of type `ty` is consistent with the cast (get) or the stored values (set).
    fn field_type_fits(
        &self,
        access: Access,
        value_types: Option<&BTreeSet<ClassId>>,
        ty: ClassId,
        any_if_empty: bool,
    ) -> bool {
        match access {
            Access::Get { cast, .. } => {
                cast != ClassId::OBJECT && self.prog.compatible(Some(ty), cast)
            }
            Access::Set { .. } => {
                let vts = value_types.expect("set sites carry value types");
                (any_if_empty && vts.is_empty()) || vts.iter().any(|&t| self.prog.is_subtype(t, ty))
            }
        }
    }

    /// `T-Get` / `T-Set` for one target found by `FLD`.
    fn transform_field(
        &mut self,
        sid: StmtId,
        target: FieldId,
        recv: Receiver,
        recv_objs: &[ObjId],
        access: Access,
    ) {
        let p = self.prog;
        let f = p.field(target);
        let rule = match access {
            Access::Get { .. } => Rule::TGet,
            Access::Set { .. } => Rule::TSet,
        };
        self.emit(rule, FactKind::Target(sid, Target::Field(target)));
        let slots: Vec<Pointer> = if f.is_static {
            self.emit(rule, FactKind::Init(f.declaring));
            vec![Pointer::Static(target)]
        } else {
            if recv == Receiver::Null {
                let msg = format!(
                    "instance field `{}` accessed without a receiver",
                    p.field_descriptor(target)
                );
                self.diag(rule, sid, msg);
                return;
            }
            recv_objs
                .iter()
                .copied()
                .filter(|&o| {
                    self.obj(o)
                        .type_of()
                        .is_some_and(|t| p.is_subtype(t, f.declaring))
                })
                .map(|o| Pointer::Field(o, target))
                .collect()
        };
        for slot in slots {
            match access {
                Access::Get { .. } => {
                    self.add_flow(rule, slot, Pointer::SiteResult(sid), Filter::None);
                    self.emit(
                        rule,
                        FactKind::Derived(Derived::Load {
                            site: sid,
                            from: slot,
                        }),
                    );
                }
                Access::Set { value } => {
                    let filter = Filter::Param {
                        ty: f.ty,
                        point: sid,
                    };
                    self.add_flow(rule, Pointer::Var(value), slot, filter);
                    self.emit(
                        rule,
                        FactKind::Derived(Derived::Store {
                            site: sid,
                            to: slot,
                        }),
                    );
                }
            }
        }
    }
}
