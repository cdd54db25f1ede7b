//! Inclusion-based, flow-insensitive, context-insensitive points-to solver.
//!
//! The solver runs deterministic rounds: every statement of every reachable
//! method is processed in `StmtId` order, then every flow edge is propagated once.
//! Rounds repeat until nothing changes. Statement handlers only read the state
//! and queue [`Fact`]s, which are applied immediately after each statement.

mod objects;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::annotations::ResolvedAnnotations;
use crate::ir::{ClassId, FieldId, MethodId, Native, Program, StmtId, StmtKind, VarId};
use crate::reflection::{EngineConfig, Mode, Rule};

pub use objects::{render_fsig, render_msig, AbstractObj, Filter, Flow, ObjId, Pointer, Scope};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("iteration budget of {0} rounds exceeded")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Config(#[from] crate::reflection::ConfigError),
}

/// A member resolved at a reflective call site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Method(MethodId),
    Field(FieldId),
}

/// A load, store or call synthesized by the transformation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Derived {
    Call { site: StmtId, target: MethodId },
    Load { site: StmtId, from: Pointer },
    Store { site: StmtId, to: Pointer },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub site: StmtId,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum FactKind {
    Pt(Pointer, ObjId),
    Flow(Flow),
    Edge(StmtId, MethodId),
    Reach(MethodId),
    Init(ClassId),
    /// A lazily created type at an LHM point; `cast` separates cast points from side-effect calls.
    Lhm {
        point: StmtId,
        ty: ClassId,
        cast: bool,
    },
    Target(StmtId, Target),
    Derived(Derived),
    Diag(Diagnostic),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Fact {
    pub rule: Rule,
    pub kind: FactKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PointsToState {
    objects: Vec<AbstractObj>,
    obj_index: HashMap<AbstractObj, ObjId>,
    pt: BTreeMap<Pointer, BTreeSet<ObjId>>,
    flows: BTreeSet<Flow>,
    call_edges: BTreeSet<(StmtId, MethodId)>,
    reachable: BTreeSet<MethodId>,
    initialized: BTreeSet<ClassId>,
    targets: BTreeMap<StmtId, BTreeSet<Target>>,
    lhm_cast: BTreeMap<StmtId, BTreeSet<ClassId>>,
    lhm_side: BTreeMap<StmtId, BTreeSet<ClassId>>,
    derived: BTreeSet<Derived>,
    diagnostics: BTreeSet<Diagnostic>,
    /// Unrefined known-class metaobjects released for target search at a site.
    activated: BTreeSet<(StmtId, ObjId)>,
    rule_hits: BTreeMap<Rule, u64>,
    iterations: usize,
}

static EMPTY: BTreeSet<ObjId> = BTreeSet::new();

impl PointsToState {
    pub fn obj(&self, id: ObjId) -> &AbstractObj {
        &self.objects[id.index()]
    }

    pub fn objects(&self) -> &[AbstractObj] {
        &self.objects
    }

    pub fn find_obj(&self, obj: &AbstractObj) -> Option<ObjId> {
        self.obj_index.get(obj).copied()
    }

    pub fn pt(&self, p: Pointer) -> &BTreeSet<ObjId> {
        self.pt.get(&p).unwrap_or(&EMPTY)
    }

    pub fn var_pt(&self, v: VarId) -> &BTreeSet<ObjId> {
        self.pt(Pointer::Var(v))
    }

    pub fn var_objs(&self, v: VarId) -> impl Iterator<Item = &AbstractObj> + '_ {
        self.var_pt(v).iter().map(|&o| self.obj(o))
    }

    pub fn pointers(&self) -> impl Iterator<Item = (&Pointer, &BTreeSet<ObjId>)> + '_ {
        self.pt.iter()
    }

    pub fn flows(&self) -> &BTreeSet<Flow> {
        &self.flows
    }

    pub fn call_edges(&self) -> &BTreeSet<(StmtId, MethodId)> {
        &self.call_edges
    }

    pub fn reachable(&self) -> &BTreeSet<MethodId> {
        &self.reachable
    }

    pub fn is_reachable(&self, m: MethodId) -> bool {
        self.reachable.contains(&m)
    }

    pub fn initialized(&self) -> &BTreeSet<ClassId> {
        &self.initialized
    }

    /// Members resolved at each reflective `invoke`/`get`/`set` site.
    pub fn targets(&self) -> &BTreeMap<StmtId, BTreeSet<Target>> {
        &self.targets
    }

    pub fn targets_at(&self, site: StmtId) -> BTreeSet<Target> {
        self.targets.get(&site).cloned().unwrap_or_default()
    }

    pub fn lhm_cast(&self) -> &BTreeMap<StmtId, BTreeSet<ClassId>> {
        &self.lhm_cast
    }

    pub fn lhm_side(&self) -> &BTreeMap<StmtId, BTreeSet<ClassId>> {
        &self.lhm_side
    }

    /// Types lazily created at an LHM point, cast or side-effect call.
    pub fn lhm_at(&self, point: StmtId) -> BTreeSet<ClassId> {
        let mut out = self.lhm_cast.get(&point).cloned().unwrap_or_default();
        out.extend(self.lhm_side.get(&point).into_iter().flatten().copied());
        out
    }

    pub fn derived(&self) -> &BTreeSet<Derived> {
        &self.derived
    }

    pub fn diagnostics(&self) -> &BTreeSet<Diagnostic> {
        &self.diagnostics
    }

    pub fn rule_hits(&self) -> &BTreeMap<Rule, u64> {
        &self.rule_hits
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Call edges whose target is reached through a reflective call.
    pub fn reflective_edges(&self, p: &Program) -> BTreeSet<(StmtId, MethodId)> {
        self.call_edges
            .iter()
            .copied()
            .filter(|(s, _)| p.stmt(*s).kind.is_side_effect_call())
            .collect()
    }

    /// Number of facts in the state, for growth comparisons.
    pub fn fact_count(&self) -> usize {
        self.pt.values().map(BTreeSet::len).sum::<usize>()
            + self.flows.len()
            + self.call_edges.len()
            + self.reachable.len()
            + self.initialized.len()
            + self.targets.values().map(BTreeSet::len).sum::<usize>()
            + self.lhm_cast.values().map(BTreeSet::len).sum::<usize>()
            + self.lhm_side.values().map(BTreeSet::len).sum::<usize>()
            + self.derived.len()
            + self.diagnostics.len()
            + self.activated.len()
    }

    pub fn is_activated(&self, site: StmtId, obj: ObjId) -> bool {
        self.activated.contains(&(site, obj))
    }

    pub(crate) fn activate(&mut self, site: StmtId, obj: ObjId) -> bool {
        self.activated.insert((site, obj))
    }
}

pub(crate) struct Solver<'a> {
    pub prog: &'a Program,
    pub cfg: &'a EngineConfig,
    pub ann: &'a ResolvedAnnotations,
    pub st: PointsToState,
    pending: Vec<Fact>,
    new_facts: usize,
}

/// Runs the analysis to a fixpoint.
pub fn solve(
    program: &Program,
    config: &EngineConfig,
    annotations: &ResolvedAnnotations,
) -> Result<PointsToState, SolveError> {
    let (state, _) = resume(program, config, annotations, PointsToState::default())?;
    Ok(state)
}

/// Continues solving from an existing state; returns the state and how many new facts were added.
pub fn resume(
    program: &Program,
    config: &EngineConfig,
    annotations: &ResolvedAnnotations,
    state: PointsToState,
) -> Result<(PointsToState, usize), SolveError> {
    config.validate()?;
    let mut s = Solver {
        prog: program,
        cfg: config,
        ann: annotations,
        st: state,
        pending: Vec::new(),
        new_facts: 0,
    };
    s.run()?;
    Ok((s.st, s.new_facts))
}

impl<'a> Solver<'a> {
    fn run(&mut self) -> Result<(), SolveError> {
        self.st.iterations = 0;
        let main = self.prog.main;
        self.emit(Rule::ACall, FactKind::Reach(main));
        self.emit(
            Rule::ACall,
            FactKind::Init(self.prog.method(main).declaring),
        );
        self.flush();
        loop {
            let before = self.new_facts;
            if self.st.iterations >= self.cfg.max_iterations {
                return Err(SolveError::BudgetExceeded(self.cfg.max_iterations));
            }
            self.st.iterations += 1;
            for sid in self.prog.stmt_ids() {
                if self.st.reachable.contains(&self.prog.stmt(sid).method) {
                    self.process_statement(sid);
                    self.flush();
                }
            }
            self.propagate_flows();
            if self.new_facts == before {
                let activated = self.activate_unrefined();
                if activated == 0 {
                    return Ok(());
                }
                self.new_facts += activated;
            }
        }
    }

    pub fn intern(&mut self, obj: AbstractObj) -> ObjId {
        if let Some(&id) = self.st.obj_index.get(&obj) {
            return id;
        }
        let id = ObjId(self.st.objects.len() as u32);
        self.st.objects.push(obj.clone());
        self.st.obj_index.insert(obj, id);
        id
    }

    pub fn obj(&self, id: ObjId) -> &AbstractObj {
        self.st.obj(id)
    }

    /// Snapshot of a points-to set.
    pub fn pts(&self, p: Pointer) -> Vec<ObjId> {
        self.st.pt(p).iter().copied().collect()
    }

    pub fn var_pts(&self, v: VarId) -> Vec<ObjId> {
        self.pts(Pointer::Var(v))
    }

    pub fn emit(&mut self, rule: Rule, kind: FactKind) {
        self.pending.push(Fact { rule, kind });
    }

    pub fn add_pt(&mut self, rule: Rule, p: Pointer, obj: AbstractObj) {
        let id = self.intern(obj);
        self.emit(rule, FactKind::Pt(p, id));
    }

    pub fn add_flow(&mut self, rule: Rule, from: Pointer, to: Pointer, filter: Filter) {
        self.emit(rule, FactKind::Flow(Flow { from, to, filter }));
    }

    pub fn diag(&mut self, rule: Rule, site: StmtId, message: String) {
        self.emit(rule, FactKind::Diag(Diagnostic { site, message }));
    }

    fn flush(&mut self) {
        let facts = std::mem::take(&mut self.pending);
        for f in facts {
            if !self.cfg.enabled(f.rule) {
                continue;
            }
            let rule = f.rule;
            if self.apply(f.kind) {
                self.new_facts += 1;
                *self.st.rule_hits.entry(rule).or_insert(0) += 1;
            }
        }
    }

    fn apply(&mut self, kind: FactKind) -> bool {
        let st = &mut self.st;
        match kind {
            FactKind::Pt(p, o) => st.pt.entry(p).or_default().insert(o),
            FactKind::Flow(f) => st.flows.insert(f),
            FactKind::Edge(s, m) => st.call_edges.insert((s, m)),
            FactKind::Reach(m) => st.reachable.insert(m),
            FactKind::Init(c) => {
                let mut changed = false;
                let chain: Vec<ClassId> = self.prog.superclass_chain(c).collect();
                for k in chain {
                    if self.st.initialized.insert(k) {
                        changed = true;
                        if let Some(clinit) = self.prog.class(k).clinit {
                            self.st.reachable.insert(clinit);
                        }
                    }
                }
                changed
            }
            FactKind::Lhm { point, ty, cast } => {
                let map = if cast {
                    &mut st.lhm_cast
                } else {
                    &mut st.lhm_side
                };
                map.entry(point).or_default().insert(ty)
            }
            FactKind::Target(s, t) => st.targets.entry(s).or_default().insert(t),
            FactKind::Derived(d) => st.derived.insert(d),
            FactKind::Diag(d) => st.diagnostics.insert(d),
        }
    }

    fn propagate_flows(&mut self) {
        let flows: Vec<Flow> = self.st.flows.iter().copied().collect();
        for f in flows {
            for o in self.pts(f.from) {
                self.pass_filter(f.filter, o, f.from, f.to);
            }
            self.flush();
        }
    }

    /// Moves `o` across a filtered flow into `to`, splitting `o^u` where the filter allows it.
    /// A cast places the split objects on its source, so every alias of the cast variable sees them.
    fn pass_filter(&mut self, filter: Filter, o: ObjId, from: Pointer, to: Pointer) {
        let (ty, point, rule, cast) = match filter {
            Filter::None => return self.emit(Rule::ACpy, FactKind::Pt(to, o)),
            Filter::Cast { ty, point } => (ty, point, Rule::LCast, true),
            Filter::Param { ty, point } => {
                if !self.cfg.enabled(Rule::TInvArgFilter) {
                    return self.emit(Rule::ACpy, FactKind::Pt(to, o));
                }
                (ty, point, Rule::TInv, false)
            }
        };
        if ty == ClassId::OBJECT {
            return self.emit(Rule::ACpy, FactKind::Pt(to, o));
        }
        let obj = self.obj(o).clone();
        match obj.type_of() {
            Some(t) => {
                if self.prog.is_subtype(t, ty) {
                    self.emit(Rule::ACpy, FactKind::Pt(to, o));
                }
            }
            None => {
                let AbstractObj::Heap { site, .. } = obj else {
                    return;
                };
                if !cast && self.cfg.mode == Mode::Probe {
                    return;
                }
                let dest = if cast { from } else { to };
                for t in self.prog.subtypes(ty) {
                    self.add_pt(rule, dest, AbstractObj::Heap { site, ty: Some(t) });
                    self.emit(rule, FactKind::Init(t));
                    if cast {
                        self.emit(
                            rule,
                            FactKind::Lhm {
                                point,
                                ty: t,
                                cast: true,
                            },
                        );
                    }
                }
            }
        }
    }

    /// Applies the rule(s) matching one reachable statement.
    pub fn process_statement(&mut self, sid: StmtId) {
        let prog = self.prog;
        let stmt = prog.stmt(sid);
        match &stmt.kind {
            StmtKind::Alloc { lhs, class } => {
                self.add_pt(
                    Rule::ANew,
                    Pointer::Var(*lhs),
                    AbstractObj::Heap {
                        site: sid,
                        ty: Some(*class),
                    },
                );
                self.emit(Rule::ANew, FactKind::Init(*class));
            }
            StmtKind::Copy { lhs, rhs } => self.add_flow(
                Rule::ACpy,
                Pointer::Var(*rhs),
                Pointer::Var(*lhs),
                Filter::None,
            ),
            StmtKind::Load { lhs, base, field } => {
                for o in self.var_pts(*base) {
                    if let Some(f) = self.instance_field(o, field) {
                        self.add_flow(
                            Rule::ALd,
                            Pointer::Field(o, f),
                            Pointer::Var(*lhs),
                            Filter::None,
                        );
                    }
                }
            }
            StmtKind::Store { base, field, rhs } => {
                for o in self.var_pts(*base) {
                    if let Some(f) = self.instance_field(o, field) {
                        self.add_flow(
                            Rule::ASt,
                            Pointer::Var(*rhs),
                            Pointer::Field(o, f),
                            Filter::None,
                        );
                    }
                }
            }
            StmtKind::StaticLoad { lhs, field } => {
                self.add_flow(
                    Rule::ALd,
                    Pointer::Static(*field),
                    Pointer::Var(*lhs),
                    Filter::None,
                );
                self.emit(Rule::ALd, FactKind::Init(prog.field(*field).declaring));
            }
            StmtKind::StaticStore { field, rhs } => {
                self.add_flow(
                    Rule::ASt,
                    Pointer::Var(*rhs),
                    Pointer::Static(*field),
                    Filter::None,
                );
                self.emit(Rule::ASt, FactKind::Init(prog.field(*field).declaring));
            }
            StmtKind::VirtualCall {
                lhs,
                recv,
                name,
                args,
            } => {
                for o in self.var_pts(*recv) {
                    let ty = self.obj(o).type_of();
                    if let Some(target) = prog.dispatch_by_arity(ty, name, args.len()) {
                        self.call(Rule::ACall, sid, target, Some(o), args, *lhs);
                    }
                }
            }
            StmtKind::StaticCall { lhs, method, args } => {
                self.call(Rule::ACall, sid, *method, None, args, *lhs);
                self.emit(Rule::ACall, FactKind::Init(prog.method(*method).declaring));
            }
            StmtKind::StringConst { lhs, value } => self.add_pt(
                Rule::ANew,
                Pointer::Var(*lhs),
                AbstractObj::StringConst {
                    value: value.clone(),
                    site: sid,
                },
            ),
            StmtKind::UnknownString { lhs } => self.add_pt(
                Rule::ANew,
                Pointer::Var(*lhs),
                AbstractObj::UnknownString { site: sid },
            ),
            StmtKind::Cast { lhs, class, rhs } => {
                let filter = if *class == ClassId::OBJECT {
                    Filter::None
                } else {
                    Filter::Cast {
                        ty: *class,
                        point: sid,
                    }
                };
                self.add_flow(Rule::ACpy, Pointer::Var(*rhs), Pointer::Var(*lhs), filter);
            }
            StmtKind::ArrayLit { lhs, elems } => {
                let arr = self.intern(AbstractObj::ArrayObj {
                    site: sid,
                    elems: Some(elems.clone()),
                });
                self.emit(Rule::ANew, FactKind::Pt(Pointer::Var(*lhs), arr));
                for &e in elems {
                    self.add_flow(Rule::ASt, Pointer::Var(e), Pointer::Arr(arr), Filter::None);
                }
            }
            StmtKind::UnknownArray { lhs } => self.add_pt(
                Rule::ANew,
                Pointer::Var(*lhs),
                AbstractObj::ArrayObj {
                    site: sid,
                    elems: None,
                },
            ),
            StmtKind::ArrayLoad { lhs, array } => {
                for a in self.var_pts(*array) {
                    if self.obj(a).is_array() {
                        self.add_flow(Rule::ALd, Pointer::Arr(a), Pointer::Var(*lhs), Filter::None);
                    }
                }
            }
            StmtKind::ArrayStore { array, rhs } => {
                for a in self.var_pts(*array) {
                    if self.obj(a).is_array() {
                        self.add_flow(Rule::ASt, Pointer::Var(*rhs), Pointer::Arr(a), Filter::None);
                    }
                }
            }
            StmtKind::Return { value } => self.add_flow(
                Rule::ACpy,
                Pointer::Var(*value),
                Pointer::Ret(stmt.method),
                Filter::None,
            ),
            StmtKind::ForName { .. }
            | StmtKind::GetClass { .. }
            | StmtKind::ClassLit { .. }
            | StmtKind::GetMember { .. } => self.propagate(sid),
            StmtKind::NewInstance { lhs, class_var } => self.new_instance(sid, *lhs, *class_var),
            StmtKind::Invoke { .. } => self.on_invoke(sid),
            StmtKind::FieldGet { .. } | StmtKind::FieldSet { .. } => self.on_field_access(sid),
        }
    }

    /// Resolves an instance field by name on a known-type object.
    fn instance_field(&self, o: ObjId, name: &str) -> Option<FieldId> {
        match self.obj(o) {
            AbstractObj::Heap { ty: Some(t), .. } => self.prog.resolve_instance_field(*t, name),
            _ => None,
        }
    }

    /// A regular call edge with unfiltered argument and return flows.
    fn call(
        &mut self,
        rule: Rule,
        site: StmtId,
        target: MethodId,
        recv: Option<ObjId>,
        args: &[VarId],
        lhs: Option<VarId>,
    ) {
        let m = self.prog.method(target);
        self.emit(rule, FactKind::Edge(site, target));
        self.emit(rule, FactKind::Reach(target));
        if let Some(native) = m.native {
            if let (Some(lhs), Some(o)) = (lhs, recv) {
                let obj = self.native_result(native, site, o);
                self.add_pt(rule, Pointer::Var(lhs), obj);
            }
            return;
        }
        if let (Some(this), Some(o)) = (m.this_var, recv) {
            self.emit(rule, FactKind::Pt(Pointer::Var(this), o));
        }
        for (&a, &p) in args.iter().zip(&m.param_vars) {
            self.add_flow(rule, Pointer::Var(a), Pointer::Var(p), Filter::None);
        }
        if let Some(lhs) = lhs {
            self.add_flow(rule, Pointer::Ret(target), Pointer::Var(lhs), Filter::None);
        }
    }

    /// Result of `toString()` / `getClass()` on a receiver.
    pub fn native_result(&self, native: Native, site: StmtId, recv: ObjId) -> AbstractObj {
        match native {
            Native::ToString => AbstractObj::UnknownString { site },
            Native::GetClass => AbstractObj::ClassObj {
                ty: self.obj(recv).type_of(),
                origin: site,
            },
        }
    }
}
