//! A concrete interpreter with real reflection semantics, used as ground
//! truth for the analysis.
//!
//! Every reference carries a `raw` bit: it is set on `newInstance` results and
//! cleared by a non-`Object` cast, by binding the reference as a receiver, or
//! by passing it into a typed reflective parameter. Using a raw reference in a
//! way that a statically typed program could not (calling a non-`Object`
//! method, touching a field) is recorded as a violation, as are failed casts
//! on reflectively created objects, reflectively created objects that never
//! reach a cast or a side-effect receiver, and static members accessed through
//! a non-null receiver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ir::{
    ClassId, FieldId, IntrospectKind, MethodId, Native, Program, Receiver, SiteId, StmtId,
    StmtKind, VarId,
};
use crate::pta::{PointsToState, Target};

pub const DEFAULT_FUEL: usize = 100_000;
const MAX_DEPTH: usize = 256;

/// Runtime inputs: values of `unknown_string` sites, lengths of
/// `unknown_array` sites and choices at sites with several outcomes
/// (array indices, overloaded `getMethod` names).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteEnv {
    pub strings: BTreeMap<SiteId, String>,
    pub array_lengths: BTreeMap<SiteId, usize>,
    pub choices: BTreeMap<SiteId, usize>,
    pub fuel: usize,
}

impl Default for ConcreteEnv {
    fn default() -> Self {
        ConcreteEnv {
            strings: BTreeMap::new(),
            array_lengths: BTreeMap::new(),
            choices: BTreeMap::new(),
            fuel: DEFAULT_FUEL,
        }
    }
}

impl ConcreteEnv {
    pub fn with_string(mut self, site: &str, value: &str) -> Self {
        let site = SiteId::parse(site).expect("valid site id");
        self.strings.insert(site, value.to_string());
        self
    }

    fn choice(&self, site: &SiteId, n: usize) -> usize {
        self.choices.get(site).copied().unwrap_or(0) % n.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no value bound for unknown string at `{0}`")]
    UnboundString(SiteId),
    #[error("step budget exhausted")]
    FuelExhausted,
    #[error("call depth limit exceeded")]
    DepthExceeded,
}

/// A failure that stops execution, as an exception would.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    NullPointer,
    ClassCast { from: ClassId, to: ClassId },
    ClassNotFound(String),
    NoSuchMember(String),
    Instantiation(ClassId),
    IllegalArgument(String),
    NotApplicable(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// A cast on a reflectively created object, or on the result of `invoke`/`get`, failed.
    FailedReflectiveCast,
    /// A reflectively created object never reached a cast or a side-effect receiver.
    UnusedReflectiveObject,
    /// A raw `newInstance` reference used as if it were typed.
    UntypedUse,
    /// A static member reached through a non-null receiver.
    StaticWithReceiver,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub site: StmtId,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub edges: BTreeSet<(StmtId, MethodId)>,
    /// Fields touched by reflective `get`/`set`.
    pub fields: BTreeSet<(StmtId, FieldId)>,
    pub allocs: BTreeSet<(StmtId, ClassId)>,
    pub errors: Vec<(StmtId, RuntimeError)>,
    pub violations: BTreeSet<Violation>,
    pub steps: usize,
}

impl Trace {
    /// Whether the run stayed inside the assumptions the analysis relies on.
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ref {
    obj: usize,
    raw: bool,
}

type Value = Option<Ref>;

#[derive(Debug, Clone)]
enum Obj {
    Instance {
        class: ClassId,
        fields: BTreeMap<FieldId, Value>,
        /// `newInstance` site, for reflectively created objects.
        reflective: Option<StmtId>,
    },
    Str(String),
    Class(ClassId),
    Method(MethodId),
    Field(FieldId),
    Array(Vec<Value>),
}

/// Why a method body stopped.
enum Halt {
    Error(StmtId, RuntimeError),
    Hard(OracleError),
}

type Exec<T> = Result<T, Halt>;

struct Interp<'a> {
    p: &'a Program,
    env: &'a ConcreteEnv,
    heap: Vec<Obj>,
    statics: BTreeMap<FieldId, Value>,
    initialized: BTreeSet<ClassId>,
    /// Reflective objects that reached a cast or a side-effect receiver.
    used: BTreeSet<usize>,
    trace: Trace,
    depth: usize,
}

/// Runs `main` under `env`.
pub fn interpret(p: &Program, env: &ConcreteEnv) -> Result<Trace, OracleError> {
    let mut it = Interp {
        p,
        env,
        heap: Vec::new(),
        statics: BTreeMap::new(),
        initialized: BTreeSet::new(),
        used: BTreeSet::new(),
        trace: Trace::default(),
        depth: 0,
    };
    let outcome = it
        .init(p.method(p.main).declaring)
        .and_then(|_| it.call(p.main, None, &[]).map(|_| ()));
    match outcome {
        Ok(()) => {}
        Err(Halt::Error(site, e)) => it.trace.errors.push((site, e)),
        Err(Halt::Hard(e)) => return Err(e),
    }
    for (i, o) in it.heap.iter().enumerate() {
        if let Obj::Instance {
            reflective: Some(site),
            ..
        } = o
        {
            if !it.used.contains(&i) {
                it.trace.violations.insert(Violation {
                    site: *site,
                    kind: ViolationKind::UnusedReflectiveObject,
                });
            }
        }
    }
    Ok(it.trace)
}

impl Interp<'_> {
    fn alloc(&mut self, o: Obj, raw: bool) -> Value {
        self.heap.push(o);
        Some(Ref {
            obj: self.heap.len() - 1,
            raw,
        })
    }

    fn class_of(&self, r: Ref) -> ClassId {
        match &self.heap[r.obj] {
            Obj::Instance { class, .. } => *class,
            Obj::Str(_) => ClassId::STRING,
            Obj::Class(_) => ClassId::CLASS,
            Obj::Method(_) => ClassId::METHOD,
            Obj::Field(_) => ClassId::FIELD,
            Obj::Array(_) => ClassId::OBJECT,
        }
    }

    fn violation(&mut self, site: StmtId, kind: ViolationKind) {
        self.trace.violations.insert(Violation { site, kind });
    }

    /// A result cast that only a null could pass (void or unrelated declared type) is not a correct cast.
    fn check_declared_type(&mut self, site: StmtId, declared: Option<ClassId>, cast: ClassId) {
        if !self.p.compatible(declared, cast) {
            self.violation(site, ViolationKind::FailedReflectiveCast);
        }
    }

    fn init(&mut self, c: ClassId) -> Exec<()> {
        let chain: Vec<ClassId> = self.p.superclass_chain(c).collect();
        for k in chain.into_iter().rev() {
            if self.initialized.insert(k) {
                if let Some(clinit) = self.p.class(k).clinit {
                    self.call(clinit, None, &[])?;
                }
            }
        }
        Ok(())
    }

    fn call(&mut self, m: MethodId, this: Value, args: &[Value]) -> Exec<Value> {
        if self.depth >= MAX_DEPTH {
            return Err(Halt::Hard(OracleError::DepthExceeded));
        }
        self.depth += 1;
        let r = self.run_body(m, this, args);
        self.depth -= 1;
        r
    }

    fn run_body(&mut self, m: MethodId, this: Value, args: &[Value]) -> Exec<Value> {
        let mm = self.p.method(m);
        let mut frame: BTreeMap<VarId, Value> = BTreeMap::new();
        if let Some(t) = mm.this_var {
            frame.insert(t, this);
        }
        for (&pv, &a) in mm.param_vars.iter().zip(args) {
            frame.insert(pv, a);
        }
        for &sid in &mm.body {
            if self.trace.steps >= self.env.fuel {
                return Err(Halt::Hard(OracleError::FuelExhausted));
            }
            self.trace.steps += 1;
            if let StmtKind::Return { value } = self.p.stmt(sid).kind {
                return Ok(get(&frame, value));
            }
            self.step(sid, &mut frame)?;
        }
        Ok(None)
    }

    fn native(&mut self, native: Native, recv: Ref) -> Value {
        match native {
            Native::ToString => {
                let text = format!("{}@{}", self.p.class_name(self.class_of(recv)), recv.obj);
                self.alloc(Obj::Str(text), false)
            }
            Native::GetClass => {
                let c = self.class_of(recv);
                self.alloc(Obj::Class(c), false)
            }
        }
    }

    /// Cast check; a non-`Object` cast clears the raw bit.
    /// `side_effect` marks the cast applied to the result of `invoke` or `get`.
    fn cast(&mut self, sid: StmtId, v: Value, to: ClassId, side_effect: bool) -> Exec<Value> {
        let Some(r) = v else { return Ok(None) };
        if to == ClassId::OBJECT {
            return Ok(v);
        }
        let reflective = matches!(
            self.heap[r.obj],
            Obj::Instance {
                reflective: Some(_),
                ..
            }
        );
        if reflective {
            self.used.insert(r.obj);
        }
        let from = self.class_of(r);
        if !self.p.is_subtype(from, to) {
            if reflective || side_effect {
                self.violation(sid, ViolationKind::FailedReflectiveCast);
            }
            return Err(Halt::Error(sid, RuntimeError::ClassCast { from, to }));
        }
        Ok(Some(Ref { raw: false, ..r }))
    }

    fn step(&mut self, sid: StmtId, frame: &mut BTreeMap<VarId, Value>) -> Exec<()> {
        let p = self.p;
        let stmt = p.stmt(sid);
        let err = |e: RuntimeError| Err(Halt::Error(sid, e));
        match &stmt.kind {
            StmtKind::Alloc { lhs, class } => {
                self.init(*class)?;
                self.trace.allocs.insert((sid, *class));
                let v = self.alloc(
                    Obj::Instance {
                        class: *class,
                        fields: BTreeMap::new(),
                        reflective: None,
                    },
                    false,
                );
                frame.insert(*lhs, v);
            }
            StmtKind::Copy { lhs, rhs } => {
                frame.insert(*lhs, get(frame, *rhs));
            }
            StmtKind::Load { lhs, base, field } => {
                let r = self.deref(sid, get(frame, *base))?;
                let f = self.instance_field(sid, r, field)?;
                let Obj::Instance { fields, .. } = &self.heap[r.obj] else {
                    unreachable!()
                };
                frame.insert(*lhs, fields.get(&f).copied().flatten());
            }
            StmtKind::Store { base, field, rhs } => {
                let r = self.deref(sid, get(frame, *base))?;
                let f = self.instance_field(sid, r, field)?;
                let v = get(frame, *rhs);
                let Obj::Instance { fields, .. } = &mut self.heap[r.obj] else {
                    unreachable!()
                };
                fields.insert(f, v);
            }
            StmtKind::StaticLoad { lhs, field } => {
                self.init(p.field(*field).declaring)?;
                frame.insert(*lhs, self.statics.get(field).copied().flatten());
            }
            StmtKind::StaticStore { field, rhs } => {
                self.init(p.field(*field).declaring)?;
                self.statics.insert(*field, get(frame, *rhs));
            }
            StmtKind::VirtualCall {
                lhs,
                recv,
                name,
                args,
            } => {
                let r = self.deref(sid, get(frame, *recv))?;
                let Some(target) = p.dispatch_by_arity(Some(self.class_of(r)), name, args.len())
                else {
                    return err(RuntimeError::NoSuchMember(name.clone()));
                };
                let m = p.method(target);
                if r.raw && m.native.is_none() {
                    self.violation(sid, ViolationKind::UntypedUse);
                }
                self.trace.edges.insert((sid, target));
                let result = match m.native {
                    Some(n) => self.native(n, r),
                    None => {
                        let argv: Vec<Value> = args.iter().map(|&a| get(frame, a)).collect();
                        self.call(target, Some(r), &argv)?
                    }
                };
                if let Some(lhs) = lhs {
                    frame.insert(*lhs, result);
                }
            }
            StmtKind::StaticCall { lhs, method, args } => {
                self.init(p.method(*method).declaring)?;
                self.trace.edges.insert((sid, *method));
                let argv: Vec<Value> = args.iter().map(|&a| get(frame, a)).collect();
                let result = self.call(*method, None, &argv)?;
                if let Some(lhs) = lhs {
                    frame.insert(*lhs, result);
                }
            }
            StmtKind::StringConst { lhs, value } => {
                let v = self.alloc(Obj::Str(value.clone()), false);
                frame.insert(*lhs, v);
            }
            StmtKind::UnknownString { lhs } => {
                let Some(s) = self.env.strings.get(&stmt.site) else {
                    return Err(Halt::Hard(OracleError::UnboundString(stmt.site.clone())));
                };
                let v = self.alloc(Obj::Str(s.clone()), false);
                frame.insert(*lhs, v);
            }
            StmtKind::Cast { lhs, class, rhs } => {
                let v = self.cast(sid, get(frame, *rhs), *class, false)?;
                frame.insert(*lhs, v);
            }
            StmtKind::ArrayLit { lhs, elems } => {
                let vals = elems.iter().map(|&e| get(frame, e)).collect();
                let v = self.alloc(Obj::Array(vals), false);
                frame.insert(*lhs, v);
            }
            StmtKind::UnknownArray { lhs } => {
                let n = self.env.array_lengths.get(&stmt.site).copied().unwrap_or(0);
                let v = self.alloc(Obj::Array(vec![None; n]), false);
                frame.insert(*lhs, v);
            }
            StmtKind::ArrayLoad { lhs, array } => {
                let r = self.deref(sid, get(frame, *array))?;
                let Obj::Array(vals) = &self.heap[r.obj] else {
                    return err(RuntimeError::NotApplicable("array load"));
                };
                let v = if vals.is_empty() {
                    None
                } else {
                    vals[self.env.choice(&stmt.site, vals.len())]
                };
                frame.insert(*lhs, v);
            }
            StmtKind::ArrayStore { array, rhs } => {
                let r = self.deref(sid, get(frame, *array))?;
                let v = get(frame, *rhs);
                let i = match &self.heap[r.obj] {
                    Obj::Array(vals) if !vals.is_empty() => self.env.choice(&stmt.site, vals.len()),
                    Obj::Array(_) => return Ok(()),
                    _ => return err(RuntimeError::NotApplicable("array store")),
                };
                let Obj::Array(vals) = &mut self.heap[r.obj] else {
                    unreachable!()
                };
                vals[i] = v;
            }
            StmtKind::Return { .. } => unreachable!("handled by the caller"),
            StmtKind::ForName { lhs, name, .. } => {
                let r = self.deref(sid, get(frame, *name))?;
                let Obj::Str(s) = &self.heap[r.obj] else {
                    return err(RuntimeError::NotApplicable("forName"));
                };
                let Some(c) = p.class_by_name(s) else {
                    return err(RuntimeError::ClassNotFound(s.clone()));
                };
                let v = self.alloc(Obj::Class(c), false);
                frame.insert(*lhs, v);
            }
            StmtKind::GetClass { lhs, recv } => {
                let r = self.deref(sid, get(frame, *recv))?;
                let v = self.native(Native::GetClass, r);
                frame.insert(*lhs, v);
            }
            StmtKind::ClassLit { lhs, class } => {
                let v = self.alloc(Obj::Class(*class), false);
                frame.insert(*lhs, v);
            }
            StmtKind::GetMember {
                lhs,
                class_var,
                kind,
                name,
            } => {
                let c = self.class_value(sid, get(frame, *class_var))?;
                let name = match name {
                    Some(n) => {
                        let r = self.deref(sid, get(frame, *n))?;
                        let Obj::Str(s) = &self.heap[r.obj] else {
                            return err(RuntimeError::NotApplicable("member name"));
                        };
                        Some(s.clone())
                    }
                    None => None,
                };
                let v = self.get_member(sid, c, *kind, name)?;
                frame.insert(*lhs, v);
            }
            StmtKind::NewInstance { lhs, class_var } => {
                let c = self.class_value(sid, get(frame, *class_var))?;
                let cls = p.class(c);
                if cls.is_abstract || cls.is_interface {
                    return err(RuntimeError::Instantiation(c));
                }
                self.init(c)?;
                self.trace.allocs.insert((sid, c));
                let v = self.alloc(
                    Obj::Instance {
                        class: c,
                        fields: BTreeMap::new(),
                        reflective: Some(sid),
                    },
                    true,
                );
                frame.insert(*lhs, v);
            }
            StmtKind::Invoke {
                lhs,
                cast,
                method_var,
                recv,
                args,
            } => {
                let result = self.invoke(sid, frame, *method_var, *recv, *args, *cast)?;
                let result = self.cast(sid, result, *cast, true)?;
                if let Some(lhs) = lhs {
                    frame.insert(*lhs, result);
                }
            }
            StmtKind::FieldGet {
                lhs,
                cast,
                field_var,
                recv,
            } => {
                let (f, slot) = self.field_slot(sid, frame, *field_var, *recv)?;
                self.trace.fields.insert((sid, f));
                self.check_declared_type(sid, Some(p.field(f).ty), *cast);
                let v = match slot {
                    None => self.statics.get(&f).copied().flatten(),
                    Some(o) => match &self.heap[o] {
                        Obj::Instance { fields, .. } => fields.get(&f).copied().flatten(),
                        _ => unreachable!("checked by field_slot"),
                    },
                };
                let v = self.cast(sid, v, *cast, true)?;
                if let Some(lhs) = lhs {
                    frame.insert(*lhs, v);
                }
            }
            StmtKind::FieldSet {
                field_var,
                recv,
                value,
            } => {
                let (f, slot) = self.field_slot(sid, frame, *field_var, *recv)?;
                let v = self.typed_arg(get(frame, *value), p.field(f).ty);
                if let Some(r) = v {
                    if !p.is_subtype(self.class_of(r), p.field(f).ty) {
                        return err(RuntimeError::IllegalArgument(p.field_descriptor(f)));
                    }
                }
                self.trace.fields.insert((sid, f));
                match slot {
                    None => {
                        self.statics.insert(f, v);
                    }
                    Some(o) => {
                        let Obj::Instance { fields, .. } = &mut self.heap[o] else {
                            unreachable!()
                        };
                        fields.insert(f, v);
                    }
                }
            }
        }
        Ok(())
    }

    fn deref(&self, sid: StmtId, v: Value) -> Exec<Ref> {
        v.ok_or(Halt::Error(sid, RuntimeError::NullPointer))
    }

    fn instance_field(&mut self, sid: StmtId, r: Ref, name: &str) -> Exec<FieldId> {
        if r.raw {
            self.violation(sid, ViolationKind::UntypedUse);
        }
        let found = match self.heap[r.obj] {
            Obj::Instance { class, .. } => self.p.resolve_instance_field(class, name),
            _ => None,
        };
        found.ok_or_else(|| Halt::Error(sid, RuntimeError::NoSuchMember(name.to_string())))
    }

    fn class_value(&self, sid: StmtId, v: Value) -> Exec<ClassId> {
        let r = self.deref(sid, v)?;
        match self.heap[r.obj] {
            Obj::Class(c) => Ok(c),
            _ => Err(Halt::Error(
                sid,
                RuntimeError::NotApplicable("expected a Class"),
            )),
        }
    }

    fn get_member(
        &mut self,
        sid: StmtId,
        c: ClassId,
        kind: IntrospectKind,
        name: Option<String>,
    ) -> Exec<Value> {
        let p = self.p;
        let objs: Vec<Obj> = if kind.is_method() {
            let pool: Vec<MethodId> = if kind.is_declared() {
                p.class(c)
                    .methods
                    .iter()
                    .copied()
                    .filter(|&m| !p.method(m).is_clinit)
                    .collect()
            } else {
                p.visible_methods(c)
            };
            pool.into_iter()
                .filter(|&m| name.as_ref().is_none_or(|n| &p.method(m).name == n))
                .map(Obj::Method)
                .collect()
        } else {
            let pool: Vec<FieldId> = if kind.is_declared() {
                p.class(c).fields.clone()
            } else {
                p.visible_fields(c)
            };
            pool.into_iter()
                .filter(|&f| name.as_ref().is_none_or(|n| &p.field(f).name == n))
                .map(Obj::Field)
                .collect()
        };
        if kind.is_plural() {
            let vals: Vec<Value> = objs.into_iter().map(|o| self.alloc(o, false)).collect();
            return Ok(self.alloc(Obj::Array(vals), false));
        }
        if objs.is_empty() {
            let what = format!("{}.{}", p.class_name(c), name.unwrap_or_default());
            return Err(Halt::Error(sid, RuntimeError::NoSuchMember(what)));
        }
        let i = self.env.choice(&p.stmt(sid).site, objs.len());
        let chosen = objs.into_iter().nth(i).expect("index in range");
        Ok(self.alloc(chosen, false))
    }

    /// A reference entering a parameter or field of type `ty`; a typed slot clears the raw bit.
    fn typed_arg(&self, v: Value, ty: ClassId) -> Value {
        v.map(|r| Ref {
            raw: r.raw && ty == ClassId::OBJECT,
            ..r
        })
    }

    /// Marks a side-effect receiver as used and returns it.
    fn receiver(&mut self, frame: &BTreeMap<VarId, Value>, recv: Receiver) -> Value {
        let v = recv.var().and_then(|y| get(frame, y));
        if let Some(r) = v {
            if matches!(
                self.heap[r.obj],
                Obj::Instance {
                    reflective: Some(_),
                    ..
                }
            ) {
                self.used.insert(r.obj);
            }
        }
        v
    }

    fn invoke(
        &mut self,
        sid: StmtId,
        frame: &BTreeMap<VarId, Value>,
        method_var: VarId,
        recv: Receiver,
        args: VarId,
        cast: ClassId,
    ) -> Exec<Value> {
        let p = self.p;
        let err = |e: RuntimeError| Err(Halt::Error(sid, e));
        let mr = self.deref(sid, get(frame, method_var))?;
        let Obj::Method(m) = self.heap[mr.obj] else {
            return err(RuntimeError::NotApplicable("expected a Method"));
        };
        let recv_val = self.receiver(frame, recv);
        let argv: Vec<Value> = match get(frame, args) {
            None => Vec::new(),
            Some(a) => match &self.heap[a.obj] {
                Obj::Array(vals) => vals.clone(),
                _ => return err(RuntimeError::NotApplicable("expected an argument array")),
            },
        };
        let mm = p.method(m);
        self.check_declared_type(sid, mm.ret, cast);
        if argv.len() != mm.params.len() {
            return err(RuntimeError::IllegalArgument(p.method_descriptor(m)));
        }
        let mut typed = Vec::with_capacity(argv.len());
        for (&a, &ty) in argv.iter().zip(&mm.params) {
            if let Some(r) = a {
                if !p.is_subtype(self.class_of(r), ty) {
                    return err(RuntimeError::IllegalArgument(p.method_descriptor(m)));
                }
            }
            typed.push(self.typed_arg(a, ty));
        }
        if mm.is_static {
            if recv_val.is_some() {
                self.violation(sid, ViolationKind::StaticWithReceiver);
            }
            self.init(mm.declaring)?;
            self.trace.edges.insert((sid, m));
            return self.call(m, None, &typed);
        }
        let r = self.deref(sid, recv_val)?;
        let t = self.class_of(r);
        if !p.is_subtype(t, mm.declaring) {
            return err(RuntimeError::IllegalArgument(p.method_descriptor(m)));
        }
        let Some(callee) = p.dispatch(Some(t), &mm.name, &mm.params) else {
            return err(RuntimeError::NoSuchMember(p.method_descriptor(m)));
        };
        self.trace.edges.insert((sid, callee));
        let this = Ref { raw: false, ..r };
        match p.method(callee).native {
            Some(n) => Ok(self.native(n, this)),
            None => self.call(callee, Some(this), &typed),
        }
    }

    /// Resolves the field and the object holding it (`None` for a static field).
    fn field_slot(
        &mut self,
        sid: StmtId,
        frame: &BTreeMap<VarId, Value>,
        field_var: VarId,
        recv: Receiver,
    ) -> Exec<(FieldId, Option<usize>)> {
        let p = self.p;
        let fr = self.deref(sid, get(frame, field_var))?;
        let Obj::Field(f) = self.heap[fr.obj] else {
            return Err(Halt::Error(
                sid,
                RuntimeError::NotApplicable("expected a Field"),
            ));
        };
        let recv_val = self.receiver(frame, recv);
        let ff = p.field(f);
        if ff.is_static {
            if recv_val.is_some() {
                self.violation(sid, ViolationKind::StaticWithReceiver);
            }
            self.init(ff.declaring)?;
            return Ok((f, None));
        }
        let r = self.deref(sid, recv_val)?;
        match self.heap[r.obj] {
            Obj::Instance { class, .. } if p.is_subtype(class, ff.declaring) => {
                Ok((f, Some(r.obj)))
            }
            _ => Err(Halt::Error(
                sid,
                RuntimeError::IllegalArgument(p.field_descriptor(f)),
            )),
        }
    }
}

fn get(frame: &BTreeMap<VarId, Value>, v: VarId) -> Value {
    frame.get(&v).copied().flatten()
}

/// Something the oracle observed that the analysis does not contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Missing {
    Edge(StmtId, MethodId),
    Field(StmtId, FieldId),
}

impl Missing {
    pub fn describe(&self, p: &Program) -> String {
        match *self {
            Missing::Edge(s, m) => format!("call {} -> {}", p.stmt(s).site, p.method_descriptor(m)),
            Missing::Field(s, f) => {
                format!("field {} -> {}", p.stmt(s).site, p.field_descriptor(f))
            }
        }
    }
}

/// Observed edges and reflective field accesses absent from the analysis result.
pub fn missing(trace: &Trace, st: &PointsToState) -> Vec<Missing> {
    let edges = trace
        .edges
        .iter()
        .filter(|e| !st.call_edges().contains(e))
        .map(|&(s, m)| Missing::Edge(s, m));
    let fields = trace
        .fields
        .iter()
        .filter(|&&(s, f)| !st.targets_at(s).contains(&Target::Field(f)))
        .map(|&(s, f)| Missing::Field(s, f));
    edges.chain(fields).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub env: usize,
    pub missing: Missing,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SoundnessCheck {
    /// Environments whose traces were compared.
    pub checked: usize,
    /// Environments skipped for assumption violations or interpreter errors.
    pub excluded: usize,
    pub counterexample: Option<Counterexample>,
}

impl SoundnessCheck {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl fmt::Display for SoundnessCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} checked, {} excluded", self.checked, self.excluded)?;
        if let Some(c) = &self.counterexample {
            write!(f, ", counterexample in env {}: {:?}", c.env, c.missing)?;
        }
        Ok(())
    }
}

/// Runs every environment and checks each admissible trace against the analysis.
pub fn check_soundness(p: &Program, envs: &[ConcreteEnv], st: &PointsToState) -> SoundnessCheck {
    let mut out = SoundnessCheck::default();
    for (i, env) in envs.iter().enumerate() {
        let trace = match interpret(p, env) {
            Ok(t) if t.is_admissible() => t,
            _ => {
                out.excluded += 1;
                continue;
            }
        };
        out.checked += 1;
        if let Some(m) = missing(&trace, st).into_iter().next() {
            out.counterexample = Some(Counterexample { env: i, missing: m });
            return out;
        }
    }
    out
}
