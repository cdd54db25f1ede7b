//! Reflection rules: propagation of metaobjects, collective inference, target
//! search, transformation of side-effect calls and lazy heap modeling.
//!
//! The rules are written as extra statement handlers on the points-to solver;
//! this module also exposes the pure helpers they share (`Ptp`, `𝓜`, `𝓕`,
//! `MTD`, `FLD`) so tests and the report builder can call them directly.

mod config;
mod field;
mod invoke;
mod propagation;

use std::collections::BTreeSet;

use crate::ir::{
    ClassId, FieldId, FieldSig, MethodId, MethodSig, Program, StmtId, StmtKind, VarId,
};
use crate::pta::{AbstractObj, Filter, ObjId, Pointer, PointsToState, Scope, Solver};

pub use config::{ConfigError, EngineConfig, Mode, Rule};

/// `Ptp(args) = P_0 × … × P_{n-1}`, or `∅` when `args` is not exactly analyzable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParamTypeTuples(Option<Vec<BTreeSet<ClassId>>>);

impl ParamTypeTuples {
    pub fn empty() -> Self {
        ParamTypeTuples(None)
    }

    pub fn from_positions(positions: Vec<BTreeSet<ClassId>>) -> Self {
        if positions.iter().any(BTreeSet::is_empty) {
            return Self::empty();
        }
        ParamTypeTuples(Some(positions))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn arity(&self) -> Option<usize> {
        self.0.as_ref().map(Vec::len)
    }

    pub fn positions(&self) -> Option<&[BTreeSet<ClassId>]> {
        self.0.as_deref()
    }

    pub fn contains(&self, params: &[ClassId]) -> bool {
        match &self.0 {
            None => false,
            Some(ps) => {
                ps.len() == params.len() && ps.iter().zip(params).all(|(set, p)| set.contains(p))
            }
        }
    }

    /// All tuples, enumerated. Only meant for small products.
    pub fn tuples(&self) -> BTreeSet<Vec<ClassId>> {
        let Some(ps) = &self.0 else {
            return BTreeSet::new();
        };
        let mut out: Vec<Vec<ClassId>> = vec![Vec::new()];
        for set in ps {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    set.iter().map(move |&c| {
                        let mut t = prefix.clone();
                        t.push(c);
                        t
                    })
                })
                .collect();
        }
        out.into_iter().collect()
    }
}

/// Element vars of an array literal whose collapsed slot only receives those elements.
fn exact_elems(st: &PointsToState, arr: ObjId) -> Option<&[VarId]> {
    let AbstractObj::ArrayObj {
        elems: Some(elems), ..
    } = st.obj(arr)
    else {
        return None;
    };
    let foreign = st.flows().iter().any(|f| {
        f.to == Pointer::Arr(arr) && !matches!(f.from, Pointer::Var(v) if elems.contains(&v))
    });
    (!foreign).then_some(elems.as_slice())
}

/// Computes `Ptp(args)` from the current state.
pub fn ptp(p: &Program, st: &PointsToState, args: VarId) -> ParamTypeTuples {
    let pts = st.var_pt(args);
    if pts.len() != 1 {
        return ParamTypeTuples::empty();
    }
    let arr = *pts.iter().next().expect("one element");
    let Some(elems) = exact_elems(st, arr) else {
        return ParamTypeTuples::empty();
    };
    let mut positions = Vec::with_capacity(elems.len());
    for &e in elems {
        let mut set = BTreeSet::new();
        for o in st.var_objs(e) {
            match o.type_of() {
                Some(t) => set.extend(p.supertypes(t).iter().copied()),
                None => return ParamTypeTuples::empty(),
            }
        }
        positions.push(set);
    }
    ParamTypeTuples::from_positions(positions)
}

/// `AllKwn(v)`: no object of unknown type in `pt(v)`. Vacuously true for an empty set.
pub fn all_known(st: &PointsToState, v: VarId) -> bool {
    st.var_objs(v).all(|o| !o.is_unknown_heap())
}

/// `𝓜(s)`: classes that declare or inherit a method matching `s`; needs a known name and parameters.
pub fn classes_with_method(p: &Program, s: &MethodSig) -> BTreeSet<ClassId> {
    if s.name.is_none() || s.params.is_none() {
        return BTreeSet::new();
    }
    p.class_ids()
        .filter(|&c| !p.mtd_lookup(c, s).is_empty())
        .collect()
}

/// `𝓕(s)`: classes that declare or inherit a field matching `s`; needs a known name and type.
pub fn classes_with_field(p: &Program, s: &FieldSig) -> BTreeSet<ClassId> {
    if s.name.is_none() || s.ty.is_none() {
        return BTreeSet::new();
    }
    p.class_ids()
        .filter(|&c| !p.fld_lookup(c, s).is_empty())
        .collect()
}

/// `MTD(m^t_s)`: methods a known-class method object may denote.
pub fn mtd_targets(
    p: &Program,
    mode: Mode,
    class: ClassId,
    sig: &MethodSig,
    scope: Scope,
) -> BTreeSet<MethodId> {
    if mode == Mode::Probe && sig.is_fully_unknown() {
        return BTreeSet::new();
    }
    match scope {
        Scope::DeclaredOnly => p.mtd_lookup_declared(class, sig),
        Scope::Public => p
            .supertypes(class)
            .iter()
            .flat_map(|&t| p.mtd_lookup(t, sig))
            .collect(),
    }
}

/// `FLD(f^t_s)`: fields a known-class field object may denote.
pub fn fld_targets(
    p: &Program,
    mode: Mode,
    class: ClassId,
    sig: &FieldSig,
    scope: Scope,
) -> BTreeSet<FieldId> {
    if mode == Mode::Probe && sig.is_unknown() {
        return BTreeSet::new();
    }
    match scope {
        Scope::DeclaredOnly => p.fld_lookup_declared(class, sig),
        Scope::Public => p
            .supertypes(class)
            .iter()
            .flat_map(|&t| p.fld_lookup(t, sig))
            .collect(),
    }
}

/// Types lazily created for `o^u` at a side-effect call whose metaobject has class `t`
/// and whose targets are declared in `decls`.
pub fn side_effect_lhm(p: &Program, t: ClassId, decls: &BTreeSet<ClassId>) -> BTreeSet<ClassId> {
    let mut out: BTreeSet<ClassId> = p.compatible_types(t).into_iter().collect();
    for &d in decls {
        out.extend(p.subtypes(d));
    }
    if !decls.contains(&ClassId::OBJECT) {
        out.remove(&ClassId::OBJECT);
    }
    out
}

impl Solver<'_> {
    /// Releases unrefined known-class metaobjects for target search at sites where no
    /// refinement covers them. Runs at each inner fixpoint; returns how many were released.
    pub(crate) fn activate_unrefined(&mut self) -> usize {
        let mut released = 0;
        for sid in self.prog.stmt_ids() {
            if !self.st.is_reachable(self.prog.stmt(sid).method) {
                continue;
            }
            let Some((meta_var, covered)) = self.refinement_coverage(sid) else {
                continue;
            };
            if covered {
                continue;
            }
            for o in self.var_pts(meta_var) {
                if self.is_unrefined_known(o) && self.st.activate(sid, o) {
                    released += 1;
                }
            }
        }
        released
    }

    /// The metaobject variable of a side-effect site, and whether signature refinement
    /// at the site covers every target an unrefined metaobject could denote.
    fn refinement_coverage(&self, sid: StmtId) -> Option<(VarId, bool)> {
        match &self.prog.stmt(sid).kind {
            StmtKind::Invoke {
                cast,
                method_var,
                args,
                ..
            } => {
                let info = *cast != ClassId::OBJECT || !ptp(self.prog, &self.st, *args).is_empty();
                Some((*method_var, self.cfg.enabled(Rule::IInvSig) && info))
            }
            StmtKind::FieldGet {
                cast, field_var, ..
            } => Some((
                *field_var,
                self.cfg.enabled(Rule::IGetSig) && *cast != ClassId::OBJECT,
            )),
            StmtKind::FieldSet {
                field_var, value, ..
            } => {
                let info = all_known(&self.st, *value) && !self.st.var_pt(*value).is_empty();
                Some((*field_var, self.cfg.enabled(Rule::ISetSig) && info))
            }
            _ => None,
        }
    }

    /// A known-class metaobject whose signature is entirely unknown.
    pub(crate) fn is_unrefined_known(&self, o: ObjId) -> bool {
        match self.obj(o) {
            AbstractObj::MethodObj {
                class: Some(_),
                sig,
                ..
            } => sig.is_fully_unknown(),
            AbstractObj::FieldObj {
                class: Some(_),
                sig,
                ..
            } => sig.is_unknown(),
            _ => false,
        }
    }

    /// Metaobjects at a side-effect site that target search uses.
    pub(crate) fn active_metas(&self, sid: StmtId, meta_var: VarId) -> Vec<ObjId> {
        self.var_pts(meta_var)
            .into_iter()
            .filter(|&o| {
                let known = matches!(
                    self.obj(o),
                    AbstractObj::MethodObj { class: Some(_), .. }
                        | AbstractObj::FieldObj { class: Some(_), .. }
                );
                known && (!self.is_unrefined_known(o) || self.st.is_activated(sid, o))
            })
            .collect()
    }

    /// Flow from the unfiltered site result into the assigned variable, through the site's cast.
    pub(crate) fn result_flow(
        &mut self,
        rule: Rule,
        sid: StmtId,
        lhs: Option<VarId>,
        cast: ClassId,
    ) {
        if let Some(lhs) = lhs {
            let filter = if cast == ClassId::OBJECT {
                Filter::None
            } else {
                Filter::Cast {
                    ty: cast,
                    point: sid,
                }
            };
            self.add_flow(rule, Pointer::SiteResult(sid), Pointer::Var(lhs), filter);
        }
    }
}
