//! `m.invoke(y, args)`: I-InvTp, I-InvSig, I-InvS2T, T-Inv and L-Inv.

use std::collections::BTreeSet;

use crate::ir::{ClassId, MethodId, MethodSig, Receiver, StmtId, StmtKind, VarId};
use crate::pta::{AbstractObj, Derived, FactKind, Filter, ObjId, Pointer, Scope, Solver, Target};

use super::{classes_with_method, mtd_targets, ptp, side_effect_lhm, ParamTypeTuples, Rule};

impl Solver<'_> {
    pub(crate) fn on_invoke(&mut self, sid: StmtId) {
        let StmtKind::Invoke {
            lhs,
            cast,
            method_var,
            recv,
            args,
        } = self.prog.stmt(sid).kind.clone()
        else {
            unreachable!("not an invoke statement")
        };
        let recv_objs = recv.var().map(|v| self.var_pts(v)).unwrap_or_default();
        let unknown_recv =
            recv == Receiver::Null || recv_objs.iter().any(|&o| self.obj(o).is_unknown_heap());
        let tuples = ptp(self.prog, &self.st, args);

        for m in self.var_pts(method_var) {
            let AbstractObj::MethodObj {
                class,
                sig,
                scope,
                origin,
                class_origin,
            } = self.obj(m).clone()
            else {
                continue;
            };
            let refine =
                |class: Option<ClassId>, sig: MethodSig, scope: Scope| AbstractObj::MethodObj {
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
                            Rule::IInvTp,
                            Pointer::Var(method_var),
                            refine(Some(t), sig.clone(), Scope::Public),
                        );
                    }
                }
            }
            if sig.is_fully_unknown() {
                for s in self.inv_sig_candidates(&tuples, cast) {
                    self.add_pt(
                        Rule::IInvSig,
                        Pointer::Var(method_var),
                        refine(class, s, scope),
                    );
                }
            }
            if class.is_none() && sig.name.is_some() && unknown_recv && !tuples.is_empty() {
                for (s, t) in self.inv_s2t_candidates(&sig, &tuples, cast) {
                    self.add_pt(
                        Rule::IInvS2T,
                        Pointer::Var(method_var),
                        refine(Some(t), s, Scope::Public),
                    );
                }
            }
        }

        self.result_flow(Rule::TInv, sid, lhs, cast);
        let arrays: Vec<ObjId> = self
            .var_pts(args)
            .into_iter()
            .filter(|&a| self.obj(a).is_array())
            .collect();
        let unknown_objs: Vec<ObjId> = recv_objs
            .iter()
            .copied()
            .filter(|&o| self.obj(o).is_unknown_heap())
            .collect();
        for m in self.active_metas(sid, method_var) {
            let AbstractObj::MethodObj {
                class: Some(t),
                sig,
                scope,
                ..
            } = self.obj(m).clone()
            else {
                continue;
            };
            let targets = mtd_targets(self.prog, self.cfg.mode, t, &sig, scope);
            if !unknown_objs.is_empty() {
                let decls: BTreeSet<ClassId> = targets
                    .iter()
                    .map(|&m| self.prog.method(m).declaring)
                    .collect();
                let recv_var = recv.var().expect("unknown receivers come from a variable");
                for ty in side_effect_lhm(self.prog, t, &decls) {
                    for &o in &unknown_objs {
                        let AbstractObj::Heap { site, .. } = *self.obj(o) else {
                            continue;
                        };
                        self.add_pt(
                            Rule::LInv,
                            Pointer::Var(recv_var),
                            AbstractObj::Heap { site, ty: Some(ty) },
                        );
                    }
                    self.emit(Rule::LInv, FactKind::Init(ty));
                    self.emit(
                        Rule::LInv,
                        FactKind::Lhm {
                            point: sid,
                            ty,
                            cast: false,
                        },
                    );
                }
            }
            for target in targets {
                self.transform_invoke(sid, target, &recv_objs, &arrays, lhs.is_some());
            }
        }
    }

    /// Signatures for `I-InvSig`, drawn from the methods that exist in the program.
    fn inv_sig_candidates(&self, tuples: &ParamTypeTuples, cast: ClassId) -> BTreeSet<MethodSig> {
        let p = self.prog;
        let use_cast = cast != ClassId::OBJECT;
        if tuples.is_empty() && !use_cast {
            return BTreeSet::new();
        }
        p.methods
            .iter()
            .filter(|m| !m.is_clinit)
            .filter(|m| tuples.is_empty() || tuples.contains(&m.params))
            .filter(|m| !use_cast || m.ret.is_some_and(|r| p.compatible(Some(r), cast)))
            .map(|m| MethodSig {
                ret: if use_cast { m.ret } else { None },
                name: None,
                params: (!tuples.is_empty()).then(|| m.params.clone()),
            })
            .collect()
    }

    /// `(s, t)` pairs for `I-InvS2T`: every matching method signature and each class in `𝓜(s)`.
    fn inv_s2t_candidates(
        &self,
        sig: &MethodSig,
        tuples: &ParamTypeTuples,
        cast: ClassId,
    ) -> BTreeSet<(MethodSig, ClassId)> {
        let p = self.prog;
        let mut out = BTreeSet::new();
        let sigs: BTreeSet<MethodSig> = p
            .methods
            .iter()
            .filter(|m| !m.is_clinit && Some(&m.name) == sig.name.as_ref())
            .filter(|m| tuples.contains(&m.params))
            .filter(|m| sig.params.as_ref().is_none_or(|ps| *ps == m.params))
            .filter(|m| sig.ret.is_none_or(|r| m.ret == Some(r)))
            .filter(|m| {
                cast == ClassId::OBJECT || m.ret.is_some_and(|r| p.compatible(Some(r), cast))
            })
            .map(|m| MethodSig {
                ret: m.ret,
                name: Some(m.name.clone()),
                params: Some(m.params.clone()),
            })
            .collect();
        for s in sigs {
            for t in classes_with_method(p, &s) {
                out.insert((s.clone(), t));
            }
        }
        out
    }

    /// Whether some argument array can be passed to a method with `arity` parameters.
    fn arity_fits(&self, arrays: &[ObjId], arity: usize) -> bool {
        arrays.is_empty()
            || arrays.iter().any(|&a| match self.obj(a) {
                AbstractObj::ArrayObj { elems: Some(e), .. } => e.len() == arity,
                _ => true,
            })
    }

    /// `T-Inv` for one target found by `MTD`.
    fn transform_invoke(
        &mut self,
        sid: StmtId,
        target: MethodId,
        recv_objs: &[ObjId],
        arrays: &[ObjId],
        has_lhs: bool,
    ) {
        let p = self.prog;
        let m = p.method(target);
        if !self.arity_fits(arrays, m.params.len()) {
            let msg = format!(
                "`{}` skipped: argument count does not match",
                p.method_descriptor(target)
            );
            return self.diag(Rule::TInv, sid, msg);
        }
        self.emit(Rule::TInv, FactKind::Target(sid, Target::Method(target)));
        if m.is_static {
            self.emit(Rule::TInv, FactKind::Init(m.declaring));
            return self.reflective_call(sid, target, None, arrays, has_lhs);
        }
        for &o in recv_objs {
            let Some(t) = self.obj(o).type_of() else {
                continue;
            };
            if !p.is_subtype(t, m.declaring) {
                continue;
            }
            if let Some(callee) = p.dispatch(Some(t), &m.name, &m.params) {
                self.reflective_call(sid, callee, Some(o), arrays, has_lhs);
            }
        }
    }

    fn reflective_call(
        &mut self,
        sid: StmtId,
        callee: MethodId,
        recv: Option<ObjId>,
        arrays: &[ObjId],
        has_lhs: bool,
    ) {
        let m = self.prog.method(callee);
        self.emit(Rule::TInv, FactKind::Edge(sid, callee));
        self.emit(
            Rule::TInv,
            FactKind::Derived(Derived::Call {
                site: sid,
                target: callee,
            }),
        );
        self.emit(Rule::TInv, FactKind::Reach(callee));
        if let Some(native) = m.native {
            if let (true, Some(o)) = (has_lhs, recv) {
                let obj = self.native_result(native, sid, o);
                self.add_pt(Rule::TInv, Pointer::SiteResult(sid), obj);
            }
            return;
        }
        if let (Some(this), Some(o)) = (m.this_var, recv) {
            self.emit(Rule::TInv, FactKind::Pt(Pointer::Var(this), o));
        }
        let params: Vec<(VarId, ClassId)> = m
            .param_vars
            .iter()
            .copied()
            .zip(m.params.iter().copied())
            .collect();
        for &a in arrays {
            for &(pv, ty) in &params {
                self.add_flow(
                    Rule::TInv,
                    Pointer::Arr(a),
                    Pointer::Var(pv),
                    Filter::Param { ty, point: sid },
                );
            }
        }
        if has_lhs {
            self.add_flow(
                Rule::TInv,
                Pointer::Ret(callee),
                Pointer::SiteResult(sid),
                Filter::None,
            );
        }
    }
}
