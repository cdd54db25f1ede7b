//! Random program generator for the oracle and desugaring suites.

use std::fmt::{self, Write as _};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use refpta::ir::{Program, StmtKind};
use refpta::oracle::ConcreteEnv;

const CLASS_NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];
const SHAPE_NAMES: [&str; 4] = ["m", "n", "k", "run"];
const FIELD_NAMES: [&str; 3] = ["f", "g", "h"];
const STATIC_FIELD: &str = "sf";

#[derive(Debug, Clone)]
pub struct Shape {
    pub name: String,
    pub params: Vec<String>,
    pub ret: Option<String>,
    pub is_static: bool,
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub name: String,
    pub ty: String,
    pub is_static: bool,
}

#[derive(Debug, Clone)]
pub struct ClassDecl {
    pub name: String,
    pub sup: Option<usize>,
    pub fields: Vec<FieldDecl>,
    /// Shape index and body lines.
    pub methods: Vec<(usize, Vec<String>)>,
    pub clinit: Vec<String>,
}

/// Statements of `Main.main`, kept structured so they can be desugared.
#[derive(Debug, Clone)]
pub enum Ms {
    New {
        lhs: String,
        class: String,
    },
    Str {
        lhs: String,
        value: Option<String>,
    },
    ForName {
        lhs: String,
        name: String,
    },
    ClassLit {
        lhs: String,
        class: String,
    },
    GetClass {
        lhs: String,
        recv: String,
    },
    GetMember {
        lhs: String,
        class_var: String,
        kind: &'static str,
        name: Option<String>,
    },
    NewInstance {
        lhs: String,
        class_var: String,
    },
    Copy {
        lhs: String,
        rhs: String,
    },
    Cast {
        lhs: String,
        class: String,
        rhs: String,
    },
    Array {
        lhs: String,
        elems: Vec<String>,
    },
    UnknownArray {
        lhs: String,
    },
    ArrayLoad {
        lhs: String,
        array: String,
    },
    ArrayStore {
        array: String,
        rhs: String,
    },
    Invoke {
        lhs: Option<String>,
        cast: Option<String>,
        method: String,
        recv: Option<String>,
        args: String,
    },
    Get {
        lhs: String,
        cast: Option<String>,
        field: String,
        recv: Option<String>,
    },
    Set {
        field: String,
        recv: Option<String>,
        value: String,
    },
    Call {
        lhs: Option<String>,
        recv: String,
        name: String,
        args: Vec<String>,
    },
    StaticCall {
        lhs: Option<String>,
        class: String,
        name: String,
        args: Vec<String>,
    },
    Load {
        lhs: String,
        base: String,
        field: String,
    },
    Store {
        base: String,
        field: String,
        rhs: String,
    },
    StaticLoad {
        lhs: String,
        class: String,
        field: String,
    },
    StaticStore {
        class: String,
        field: String,
        rhs: String,
    },
}

fn recv_text(r: &Option<String>) -> &str {
    r.as_deref().unwrap_or("null")
}

fn cast_prefix(c: &Option<String>) -> String {
    c.as_ref().map(|c| format!("({c}) ")).unwrap_or_default()
}

fn assign(lhs: &Option<String>) -> String {
    lhs.as_ref().map(|l| format!("{l} = ")).unwrap_or_default()
}

impl fmt::Display for Ms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ms::New { lhs, class } => write!(f, "{lhs} = new {class};"),
            Ms::Str {
                lhs,
                value: Some(v),
            } => write!(f, "{lhs} = \"{v}\";"),
            Ms::Str { lhs, value: None } => write!(f, "{lhs} = unknown_string;"),
            Ms::ForName { lhs, name } => write!(f, "{lhs} = Class.forName({name});"),
            Ms::ClassLit { lhs, class } => write!(f, "{lhs} = {class}.class;"),
            Ms::GetClass { lhs, recv } => write!(f, "{lhs} = {recv}.getClass();"),
            Ms::GetMember {
                lhs,
                class_var,
                kind,
                name,
            } => {
                write!(
                    f,
                    "{lhs} = {class_var}.{kind}({});",
                    name.as_deref().unwrap_or("")
                )
            }
            Ms::NewInstance { lhs, class_var } => write!(f, "{lhs} = {class_var}.newInstance();"),
            Ms::Copy { lhs, rhs } => write!(f, "{lhs} = {rhs};"),
            Ms::Cast { lhs, class, rhs } => write!(f, "{lhs} = ({class}) {rhs};"),
            Ms::Array { lhs, elems } => write!(f, "{lhs} = array [{}];", elems.join(", ")),
            Ms::UnknownArray { lhs } => write!(f, "{lhs} = unknown_array;"),
            Ms::ArrayLoad { lhs, array } => write!(f, "{lhs} = {array}[*];"),
            Ms::ArrayStore { array, rhs } => write!(f, "{array}[*] = {rhs};"),
            Ms::Invoke {
                lhs,
                cast,
                method,
                recv,
                args,
            } => {
                write!(
                    f,
                    "{}{}{method}.invoke({}, {args});",
                    assign(lhs),
                    cast_prefix(cast),
                    recv_text(recv)
                )
            }
            Ms::Get {
                lhs,
                cast,
                field,
                recv,
            } => {
                write!(
                    f,
                    "{lhs} = {}{field}.get({});",
                    cast_prefix(cast),
                    recv_text(recv)
                )
            }
            Ms::Set { field, recv, value } => {
                write!(f, "{field}.set({}, {value});", recv_text(recv))
            }
            Ms::Call {
                lhs,
                recv,
                name,
                args,
            } => write!(f, "{}{recv}.{name}({});", assign(lhs), args.join(", ")),
            Ms::StaticCall {
                lhs,
                class,
                name,
                args,
            } => {
                write!(f, "{}{class}.{name}({});", assign(lhs), args.join(", "))
            }
            Ms::Load { lhs, base, field } => write!(f, "{lhs} = {base}.{field};"),
            Ms::Store { base, field, rhs } => write!(f, "{base}.{field} = {rhs};"),
            Ms::StaticLoad { lhs, class, field } => write!(f, "{lhs} = {class}.{field};"),
            Ms::StaticStore { class, field, rhs } => write!(f, "{class}.{field} = {rhs};"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenProgram {
    pub classes: Vec<ClassDecl>,
    pub shapes: Vec<Shape>,
    pub main: Vec<Ms>,
}

impl GenProgram {
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    /// `ci` and its superclasses, nearest first.
    pub fn chain(&self, ci: usize) -> Vec<usize> {
        std::iter::successors(Some(ci), |&c| self.classes[c].sup).collect()
    }

    /// Subtyping on type names; `Object` is the top.
    pub fn is_sub(&self, a: &str, b: &str) -> bool {
        b == "Object"
            || self
                .class_index(a)
                .is_some_and(|ci| self.chain(ci).iter().any(|&c| self.classes[c].name == b))
    }

    pub fn compatible(&self, a: &str, b: &str) -> bool {
        self.is_sub(a, b) || self.is_sub(b, a)
    }

    /// Instance shapes callable on an object of class `ci`.
    pub fn instance_shapes(&self, ci: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .chain(ci)
            .iter()
            .flat_map(|&c| self.classes[c].methods.iter().map(|(s, _)| *s))
            .filter(|&s| !self.shapes[s].is_static)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn instance_fields(&self, ci: usize) -> Vec<&FieldDecl> {
        self.chain(ci)
            .iter()
            .flat_map(|&c| self.classes[c].fields.iter())
            .filter(|f| !f.is_static)
            .collect()
    }

    pub fn string_pool(&self) -> Vec<String> {
        let mut out: Vec<String> = self.classes.iter().map(|c| c.name.clone()).collect();
        out.extend(self.shapes.iter().map(|s| s.name.clone()));
        out.extend(
            FIELD_NAMES
                .iter()
                .chain([&STATIC_FIELD, &"toString", &"Object", &"Nope"])
                .map(|s| s.to_string()),
        );
        out.sort();
        out.dedup();
        out
    }

    pub fn render(&self) -> String {
        self.render_with_main(&self.main.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }

    pub fn render_with_main(&self, main: &[String]) -> String {
        let mut out = String::new();
        for c in &self.classes {
            let sup = c
                .sup
                .map(|s| format!(" extends {}", self.classes[s].name))
                .unwrap_or_default();
            let _ = writeln!(out, "class {}{sup} {{", c.name);
            for f in &c.fields {
                let st = if f.is_static { "static " } else { "" };
                let _ = writeln!(out, "  {st}field {}: {};", f.name, f.ty);
            }
            for (s, body) in &c.methods {
                let sh = &self.shapes[*s];
                let st = if sh.is_static { "static " } else { "" };
                let params: Vec<String> = sh
                    .params
                    .iter()
                    .enumerate()
                    .map(|(i, t)| format!("p{i}: {t}"))
                    .collect();
                let ret = sh.ret.as_deref().unwrap_or("void");
                let _ = writeln!(
                    out,
                    "  {st}method {}({}): {ret} {{ {} }}",
                    sh.name,
                    params.join(", "),
                    body.join(" ")
                );
            }
            if !c.clinit.is_empty() {
                let _ = writeln!(out, "  static {{ {} }}", c.clinit.join(" "));
            }
            out.push_str("}\n");
        }
        out.push_str("class Main {\n  static method main(): void {\n");
        for s in main {
            let _ = writeln!(out, "    {s}");
        }
        out.push_str("  }\n}\n");
        out
    }
}

/// `Constant` keeps every reflective name a string constant or class literal, with
/// single-typed receivers and arguments, so the program can be desugared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    General,
    Constant,
}

struct Gen<'r> {
    rng: &'r mut StdRng,
    mode: GenMode,
    p: GenProgram,
    next: usize,
    /// Variables holding objects of exactly one known class.
    exact: Vec<(String, String)>,
    /// Variables with a declared type but possibly several runtime types.
    typed: Vec<(String, String)>,
    /// Uncast `newInstance` results.
    raw: Vec<String>,
}

pub fn generate(rng: &mut StdRng, mode: GenMode) -> GenProgram {
    let mut g = Gen {
        rng,
        mode,
        p: GenProgram {
            classes: Vec::new(),
            shapes: Vec::new(),
            main: Vec::new(),
        },
        next: 0,
        exact: Vec::new(),
        typed: Vec::new(),
        raw: Vec::new(),
    };
    g.hierarchy();
    g.shapes();
    g.members();
    g.main();
    g.p
}

impl Gen<'_> {
    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn class_name(&mut self) -> String {
        self.p
            .classes
            .choose(self.rng)
            .expect("classes")
            .name
            .clone()
    }

    fn type_name(&mut self) -> String {
        if self.chance(0.15) {
            "Object".into()
        } else {
            self.class_name()
        }
    }

    fn hierarchy(&mut self) {
        let n = self.rng.gen_range(3..=CLASS_NAMES.len());
        for (i, name) in CLASS_NAMES.iter().take(n).enumerate() {
            let sup = (i > 0 && self.chance(0.5)).then(|| self.rng.gen_range(0..i));
            self.p.classes.push(ClassDecl {
                name: name.to_string(),
                sup,
                fields: Vec::new(),
                methods: Vec::new(),
                clinit: Vec::new(),
            });
        }
    }

    fn shapes(&mut self) {
        let mut used = Vec::new();
        for _ in 0..self.rng.gen_range(3..=5) {
            let name = SHAPE_NAMES.choose(self.rng).unwrap().to_string();
            let arity = self.rng.gen_range(0..=2);
            if used.contains(&(name.clone(), arity)) {
                continue;
            }
            used.push((name.clone(), arity));
            let params = (0..arity).map(|_| self.type_name()).collect();
            let ret = self.chance(0.75).then(|| self.type_name());
            self.p.shapes.push(Shape {
                name,
                params,
                ret,
                is_static: false,
            });
        }
        if self.chance(0.6) {
            let params = (0..self.rng.gen_range(0..=1))
                .map(|_| self.type_name())
                .collect();
            let ret = self.chance(0.7).then(|| self.type_name());
            self.p.shapes.push(Shape {
                name: "st".into(),
                params,
                ret,
                is_static: true,
            });
        }
    }

    fn members(&mut self) {
        for ci in 0..self.p.classes.len() {
            let ancestors: Vec<usize> = self.p.chain(ci).into_iter().skip(1).collect();
            for (name, is_static) in FIELD_NAMES
                .iter()
                .map(|n| (*n, false))
                .chain([(STATIC_FIELD, true)])
            {
                let inherited = ancestors
                    .iter()
                    .any(|&a| self.p.classes[a].fields.iter().any(|f| f.name == name));
                if !inherited && self.chance(if is_static { 0.3 } else { 0.35 }) {
                    let ty = self.type_name();
                    self.p.classes[ci].fields.push(FieldDecl {
                        name: name.into(),
                        ty,
                        is_static,
                    });
                }
            }
        }
        let static_owner: Vec<usize> = (0..self.p.shapes.len())
            .map(|_| self.rng.gen_range(0..self.p.classes.len()))
            .collect();
        for ci in 0..self.p.classes.len() {
            for (s, &owner) in static_owner.iter().enumerate() {
                let declare = if self.p.shapes[s].is_static {
                    owner == ci
                } else {
                    self.chance(0.45)
                };
                if declare {
                    let body = self.body(ci, s);
                    self.p.classes[ci].methods.push((s, body));
                }
            }
        }
        for ci in 0..self.p.classes.len() {
            if self.chance(0.3) {
                self.p.classes[ci].clinit = self.clinit(ci);
            }
        }
    }

    /// Arguments for a call to shape `s` drawn from `vars`, preferring well-typed ones.
    fn pick_args(&mut self, s: usize, vars: &[(String, String)]) -> Option<Vec<String>> {
        let params = self.p.shapes[s].params.clone();
        let mut out = Vec::new();
        for t in params {
            let fits: Vec<&(String, String)> = vars
                .iter()
                .filter(|(_, vt)| self.p.is_sub(vt, &t))
                .collect();
            let pick = fits
                .choose(self.rng)
                .copied()
                .or_else(|| vars.choose(self.rng))?;
            out.push(pick.0.clone());
        }
        Some(out)
    }

    fn body(&mut self, ci: usize, s: usize) -> Vec<String> {
        let shape = self.p.shapes[s].clone();
        let mut vars: Vec<(String, String)> = shape
            .params
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("p{i}"), t.clone()))
            .collect();
        if !shape.is_static {
            vars.push(("this".into(), self.p.classes[ci].name.clone()));
        }
        let mut out = Vec::new();
        if self.chance(0.4) {
            let t = self.class_name();
            out.push(format!("l0 = new {t};"));
            vars.push(("l0".into(), t));
        }
        if !shape.is_static && self.chance(0.5) {
            let fields: Vec<String> = self
                .p
                .instance_fields(ci)
                .iter()
                .map(|f| f.name.clone())
                .collect();
            if let (Some(fd), Some((v, _))) = (
                fields.choose(self.rng).cloned(),
                vars.choose(self.rng).cloned(),
            ) {
                if self.chance(0.5) {
                    out.push(format!("this.{fd} = {v};"));
                } else {
                    out.push(format!("l1 = this.{fd};"));
                }
            }
        }
        // Calls only go to later shapes, which rules out recursion.
        for _ in 0..2 {
            if !self.chance(0.45) {
                continue;
            }
            let candidates: Vec<(String, String)> = vars
                .iter()
                .filter(|(_, t)| t != "Object")
                .cloned()
                .collect();
            let params: Vec<(String, String)> = candidates
                .iter()
                .filter(|(v, _)| v.starts_with('p'))
                .cloned()
                .collect();
            let pool = if !params.is_empty() && self.chance(0.7) {
                params
            } else {
                candidates
            };
            let Some((recv, rt)) = pool.choose(self.rng).cloned() else {
                continue;
            };
            let rci = self.p.class_index(&rt).unwrap();
            let later: Vec<usize> = self
                .p
                .instance_shapes(rci)
                .into_iter()
                .filter(|&t| t > s)
                .collect();
            let Some(&callee) = later.choose(self.rng) else {
                continue;
            };
            if let Some(args) = self.pick_args(callee, &vars) {
                let lhs = format!("c{}", out.len());
                out.push(format!(
                    "{lhs} = {recv}.{}({});",
                    self.p.shapes[callee].name,
                    args.join(", ")
                ));
                if let Some(r) = self.p.shapes[callee].ret.clone() {
                    vars.push((lhs, r));
                }
            }
        }
        if let Some(ret) = &shape.ret {
            let fits: Vec<String> = vars
                .iter()
                .filter(|(_, t)| self.p.is_sub(t, ret))
                .map(|(v, _)| v.clone())
                .collect();
            match fits.choose(self.rng) {
                Some(v) if self.chance(0.7) => out.push(format!("return {v};")),
                _ => {
                    let subs: Vec<String> = self
                        .p
                        .classes
                        .iter()
                        .map(|c| c.name.clone())
                        .filter(|c| self.p.is_sub(c, ret))
                        .collect();
                    let t = subs
                        .choose(self.rng)
                        .expect("a return type has at least one subclass");
                    out.push(format!("r = new {t};"));
                    out.push("return r;".into());
                }
            }
        }
        out
    }

    fn clinit(&mut self, ci: usize) -> Vec<String> {
        let t = self.class_name();
        let mut out = vec![format!("x = new {t};")];
        let tci = self.p.class_index(&t).unwrap();
        let shapes = self.p.instance_shapes(tci);
        if let Some(&s) = shapes.choose(self.rng) {
            if let Some(args) = self.pick_args(s, &[("x".into(), t.clone())]) {
                out.push(format!(
                    "y = x.{}({});",
                    self.p.shapes[s].name,
                    args.join(", ")
                ));
            }
        }
        if self.p.classes[ci]
            .fields
            .iter()
            .any(|f| f.is_static && f.name == STATIC_FIELD)
        {
            out.push(format!("{}.{STATIC_FIELD} = x;", self.p.classes[ci].name));
        }
        out
    }

    fn push(&mut self, s: Ms) {
        self.p.main.push(s);
    }

    fn alloc(&mut self) -> (String, String) {
        let v = self.fresh("o");
        let t = self.class_name();
        self.push(Ms::New {
            lhs: v.clone(),
            class: t.clone(),
        });
        self.exact.push((v.clone(), t.clone()));
        self.typed.push((v.clone(), t.clone()));
        (v, t)
    }

    fn exact_or_new(&mut self) -> (String, String) {
        let reuse = self.chance(0.6);
        match self.exact.choose(self.rng).cloned() {
            Some(e) if reuse => e,
            _ => self.alloc(),
        }
    }

    fn constant(&mut self) -> bool {
        self.mode == GenMode::Constant || self.chance(0.45)
    }

    /// A `Class` variable; returns it with the class when statically evident.
    fn class_source(&mut self) -> (String, Option<String>) {
        let lhs = self.fresh("c");
        let roll: f64 = self.rng.gen();
        if roll < 0.6 {
            let s = self.fresh("s");
            let known = self.constant().then(|| self.class_name());
            self.push(Ms::Str {
                lhs: s.clone(),
                value: known.clone(),
            });
            self.push(Ms::ForName {
                lhs: lhs.clone(),
                name: s,
            });
            (lhs, known)
        } else if roll < 0.8 {
            let t = self.class_name();
            self.push(Ms::ClassLit {
                lhs: lhs.clone(),
                class: t.clone(),
            });
            (lhs, Some(t))
        } else if self.mode == GenMode::General && !self.raw.is_empty() && self.chance(0.4) {
            let r = self.raw.choose(self.rng).unwrap().clone();
            self.push(Ms::GetClass {
                lhs: lhs.clone(),
                recv: r,
            });
            (lhs, None)
        } else {
            let (v, t) = self.exact_or_new();
            self.push(Ms::GetClass {
                lhs: lhs.clone(),
                recv: v,
            });
            (lhs, Some(t))
        }
    }

    fn name_var(&mut self, pool: &[String]) -> String {
        let s = self.fresh("s");
        let value = self
            .constant()
            .then(|| pool.choose(self.rng).unwrap().clone());
        self.push(Ms::Str {
            lhs: s.clone(),
            value,
        });
        s
    }

    fn new_instance(&mut self, class_var: &str, known: &Option<String>) -> String {
        let o = self.fresh("o");
        self.push(Ms::NewInstance {
            lhs: o.clone(),
            class_var: class_var.into(),
        });
        if self.mode == GenMode::Constant {
            let t = known.clone().expect("constant mode knows every class");
            self.exact.push((o.clone(), t.clone()));
            self.typed.push((o.clone(), t));
            return o;
        }
        if self.chance(0.8) {
            let t = match known {
                Some(k) if self.chance(0.6) => {
                    let ci = self.p.class_index(k).unwrap();
                    let chain = self.p.chain(ci);
                    self.p.classes[*chain.choose(self.rng).unwrap()]
                        .name
                        .clone()
                }
                _ => self.class_name(),
            };
            let a = self.fresh("a");
            let src = if self.chance(0.5) {
                let c = self.fresh("o");
                self.push(Ms::Copy {
                    lhs: c.clone(),
                    rhs: o.clone(),
                });
                c
            } else {
                o.clone()
            };
            self.push(Ms::Cast {
                lhs: a.clone(),
                class: t.clone(),
                rhs: src,
            });
            self.typed.push((a, t));
        }
        self.raw.push(o.clone());
        o
    }

    fn scene_new_instance(&mut self) {
        let (c, known) = self.class_source();
        self.new_instance(&c, &known);
        if let Some((v, t)) = self.typed.last().cloned() {
            self.regular_call(&v, &t);
        }
    }

    fn regular_call(&mut self, v: &str, t: &str) {
        let Some(ci) = self.p.class_index(t) else {
            return;
        };
        let shapes = self.p.instance_shapes(ci);
        let Some(&s) = shapes.choose(self.rng) else {
            return;
        };
        let pool = self.typed.clone();
        if let Some(args) = self.pick_args(s, &pool) {
            let lhs = self.p.shapes[s].ret.is_some().then(|| self.fresh("r"));
            if let (Some(l), Some(r)) = (&lhs, &self.p.shapes[s].ret) {
                if r != "Object" {
                    self.typed.push((l.clone(), r.clone()));
                }
            }
            self.push(Ms::Call {
                lhs,
                recv: v.into(),
                name: self.p.shapes[s].name.clone(),
                args,
            });
        }
    }

    /// Receiver for a reflective call on members of the class held by `c`.
    /// Receiver for a reflective call on a member of the class held by `c`, preferring
    /// objects whose class is `want` or a subclass of it.
    fn receiver(&mut self, c: &str, known: &Option<String>, want: Option<&str>) -> Option<String> {
        let roll: f64 = self.rng.gen();
        if roll < 0.1 {
            return None;
        }
        let fresh_share = if known.is_some() { 0.4 } else { 0.6 };
        if roll < fresh_share && (self.mode == GenMode::General || known.is_some()) {
            return Some(self.new_instance(c, known));
        }
        if roll < fresh_share + 0.1 && self.mode == GenMode::General && !self.raw.is_empty() {
            return self.raw.choose(self.rng).cloned();
        }
        if let Some(w) = want {
            let fits: Vec<String> = self
                .exact
                .iter()
                .filter(|(_, t)| self.p.is_sub(t, w))
                .map(|(v, _)| v.clone())
                .collect();
            if let Some(v) = fits.choose(self.rng) {
                return Some(v.clone());
            }
        }
        Some(self.exact_or_new().0)
    }

    /// A variable to pass where `want` is expected, usually of a fitting type.
    fn arg_var(&mut self, want: Option<&str>) -> String {
        let roll: f64 = self.rng.gen();
        if self.mode == GenMode::General && roll < 0.2 && !self.raw.is_empty() {
            return self.raw.choose(self.rng).unwrap().clone();
        }
        let pool = if self.mode == GenMode::General && roll < 0.35 {
            &self.typed
        } else {
            &self.exact
        };
        if let Some(w) = want.filter(|_| self.rng.gen_bool(0.85)) {
            let fits: Vec<String> = pool
                .iter()
                .filter(|(_, t)| self.p.is_sub(t, w))
                .map(|(v, _)| v.clone())
                .collect();
            if let Some(v) = fits.choose(self.rng) {
                return v.clone();
            }
            let subs: Vec<String> = self
                .p
                .classes
                .iter()
                .map(|c| c.name.clone())
                .filter(|c| self.p.is_sub(c, w))
                .collect();
            let t = subs
                .choose(self.rng)
                .expect("every type has a subclass")
                .clone();
            let v = self.fresh("o");
            self.push(Ms::New {
                lhs: v.clone(),
                class: t.clone(),
            });
            self.exact.push((v.clone(), t.clone()));
            self.typed.push((v.clone(), t));
            return v;
        }
        self.exact_or_new().0
    }

    fn args_array(&mut self, params: Option<Vec<String>>, min: usize) -> String {
        let lhs = self.fresh("args");
        if self.mode == GenMode::General && self.chance(0.12) {
            self.push(Ms::UnknownArray { lhs: lhs.clone() });
        } else {
            let wants: Vec<Option<String>> = match params {
                Some(ps) if ps.len() >= min => ps.into_iter().map(Some).collect(),
                _ => (0..self.rng.gen_range(min..=2)).map(|_| None).collect(),
            };
            let elems = wants.iter().map(|w| self.arg_var(w.as_deref())).collect();
            self.push(Ms::Array {
                lhs: lhs.clone(),
                elems,
            });
        }
        if self.mode == GenMode::General && self.chance(0.08) {
            let x = self.arg_var(None);
            self.push(Ms::ArrayStore {
                array: lhs.clone(),
                rhs: x,
            });
        }
        lhs
    }

    /// Cast for a result of declared type `ret`, usually one that can succeed.
    fn result_cast(&mut self, ret: Option<&str>) -> Option<String> {
        if !self.chance(0.5) {
            return None;
        }
        match ret {
            Some(r) if r != "Object" && self.chance(0.8) => {
                let ok: Vec<String> = self
                    .p
                    .classes
                    .iter()
                    .map(|c| c.name.clone())
                    .filter(|c| self.p.compatible(c, r))
                    .collect();
                ok.choose(self.rng).cloned()
            }
            _ => Some(self.class_name()),
        }
    }

    /// Shapes reachable through `get[Declared]Method` on `class`.
    fn member_shapes(&self, class: &str, declared: bool) -> Vec<usize> {
        let ci = self.p.class_index(class).unwrap();
        let classes = if declared { vec![ci] } else { self.p.chain(ci) };
        let mut out: Vec<usize> = classes
            .iter()
            .flat_map(|&c| self.p.classes[c].methods.iter().map(|(s, _)| *s))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn member_fields(&self, class: &str, declared: bool) -> Vec<FieldDecl> {
        let ci = self.p.class_index(class).unwrap();
        let classes = if declared { vec![ci] } else { self.p.chain(ci) };
        classes
            .iter()
            .flat_map(|&c| self.p.classes[c].fields.iter().cloned())
            .collect()
    }

    fn scene_invoke(&mut self) {
        let (c, known) = self.class_source();
        let m = self.fresh("m");
        let plural = self.chance(0.3);
        let declared = self.chance(0.25);
        let candidates = match &known {
            Some(k) => self.member_shapes(k, declared),
            None => (0..self.p.shapes.len()).collect(),
        };
        let intended = candidates
            .choose(self.rng)
            .copied()
            .filter(|_| self.rng.gen_bool(0.85));
        if plural {
            let ms = self.fresh("ms");
            let kind = if declared {
                "getDeclaredMethods"
            } else {
                "getMethods"
            };
            self.push(Ms::GetMember {
                lhs: ms.clone(),
                class_var: c.clone(),
                kind,
                name: None,
            });
            self.push(Ms::ArrayLoad {
                lhs: m.clone(),
                array: ms,
            });
        } else {
            let mut pool: Vec<String> = self.p.shapes.iter().map(|s| s.name.clone()).collect();
            pool.push("toString".into());
            if let Some(s) = intended {
                pool = vec![self.p.shapes[s].name.clone()];
            }
            let n = self.name_var(&pool);
            let kind = if declared {
                "getDeclaredMethod"
            } else {
                "getMethod"
            };
            self.push(Ms::GetMember {
                lhs: m.clone(),
                class_var: c.clone(),
                kind,
                name: Some(n),
            });
        }
        let shape = intended.map(|s| self.p.shapes[s].clone());
        let recv = match &shape {
            Some(sh) if sh.is_static && self.chance(0.8) => None,
            _ => self.receiver(&c, &known, known.as_deref()),
        };
        let args = self.args_array(
            shape.as_ref().map(|s| s.params.clone()),
            usize::from(plural && self.mode == GenMode::Constant),
        );
        let ret = shape.as_ref().and_then(|s| s.ret.clone());
        let roll: f64 = self.rng.gen();
        let (lhs, cast) = if roll < 0.75 {
            (Some(self.fresh("r")), self.result_cast(ret.as_deref()))
        } else {
            (None, None)
        };
        if let (Some(l), Some(t)) = (&lhs, &cast) {
            self.typed.push((l.clone(), t.clone()));
        }
        self.push(Ms::Invoke {
            lhs: lhs.clone(),
            cast: cast.clone(),
            method: m,
            recv,
            args,
        });
        if let (Some(l), Some(t)) = (lhs, cast) {
            if self.chance(0.4) {
                self.regular_call(&l, &t);
            }
        }
    }

    fn scene_field(&mut self) {
        let (c, known) = self.class_source();
        let f = self.fresh("fl");
        let declared = self.chance(0.25);
        let candidates = match &known {
            Some(k) => self.member_fields(k, declared),
            None => Vec::new(),
        };
        let intended = candidates
            .choose(self.rng)
            .cloned()
            .filter(|_| self.rng.gen_bool(0.85));
        if self.chance(0.3) {
            let fs = self.fresh("fs");
            let kind = if declared {
                "getDeclaredFields"
            } else {
                "getFields"
            };
            self.push(Ms::GetMember {
                lhs: fs.clone(),
                class_var: c.clone(),
                kind,
                name: None,
            });
            self.push(Ms::ArrayLoad {
                lhs: f.clone(),
                array: fs,
            });
        } else {
            let pool: Vec<String> = match &intended {
                Some(fd) => vec![fd.name.clone()],
                None => FIELD_NAMES
                    .iter()
                    .chain([&STATIC_FIELD])
                    .map(|s| s.to_string())
                    .collect(),
            };
            let n = self.name_var(&pool);
            let kind = if declared {
                "getDeclaredField"
            } else {
                "getField"
            };
            self.push(Ms::GetMember {
                lhs: f.clone(),
                class_var: c.clone(),
                kind,
                name: Some(n),
            });
        }
        let recv = match &intended {
            Some(fd) if fd.is_static && self.chance(0.8) => None,
            _ => self.receiver(&c, &known, known.as_deref()),
        };
        let ty = intended.as_ref().map(|fd| fd.ty.clone());
        if self.chance(0.5) {
            let lhs = self.fresh("v");
            let cast = self.result_cast(ty.as_deref());
            if let Some(t) = &cast {
                self.typed.push((lhs.clone(), t.clone()));
            }
            self.push(Ms::Get {
                lhs,
                cast,
                field: f,
                recv,
            });
        } else {
            let value = self.arg_var(ty.as_deref());
            self.push(Ms::Set {
                field: f,
                recv,
                value,
            });
        }
    }

    fn scene_regular(&mut self) {
        let (v, t) = self.exact_or_new();
        let ci = self.p.class_index(&t).unwrap();
        let fields: Vec<String> = self
            .p
            .instance_fields(ci)
            .iter()
            .map(|f| f.name.clone())
            .collect();
        match self.rng.gen_range(0..4) {
            0 if !fields.is_empty() => {
                let fd = fields.choose(self.rng).unwrap().clone();
                let rhs = self.exact_or_new().0;
                self.push(Ms::Store {
                    base: v.clone(),
                    field: fd.clone(),
                    rhs,
                });
                let lhs = self.fresh("l");
                self.push(Ms::Load {
                    lhs,
                    base: v,
                    field: fd,
                });
            }
            1 => {
                let owners: Vec<String> = self
                    .p
                    .classes
                    .iter()
                    .filter(|c| c.fields.iter().any(|f| f.is_static))
                    .map(|c| c.name.clone())
                    .collect();
                if let Some(o) = owners.choose(self.rng).cloned() {
                    self.push(Ms::StaticStore {
                        class: o.clone(),
                        field: STATIC_FIELD.into(),
                        rhs: v,
                    });
                    let lhs = self.fresh("l");
                    self.push(Ms::StaticLoad {
                        lhs,
                        class: o,
                        field: STATIC_FIELD.into(),
                    });
                }
            }
            2 => {
                let statics: Vec<(usize, usize)> = self
                    .p
                    .classes
                    .iter()
                    .enumerate()
                    .flat_map(|(ci, c)| c.methods.iter().map(move |(s, _)| (ci, *s)))
                    .filter(|&(_, s)| self.p.shapes[s].is_static)
                    .collect();
                if let Some(&(owner, s)) = statics.choose(self.rng) {
                    let pool = self.typed.clone();
                    if let Some(args) = self.pick_args(s, &pool) {
                        let lhs = self.p.shapes[s].ret.is_some().then(|| self.fresh("r"));
                        let class = self.p.classes[owner].name.clone();
                        self.push(Ms::StaticCall {
                            lhs,
                            class,
                            name: self.p.shapes[s].name.clone(),
                            args,
                        });
                    }
                }
            }
            _ => self.regular_call(&v, &t),
        }
    }

    /// Passes a raw `newInstance` object to a reflectively invoked method that
    /// dispatches on the matching parameter.
    fn scene_handoff(&mut self) {
        let mut sites = Vec::new();
        for (ci, c) in self.p.classes.iter().enumerate() {
            for (s, body) in &c.methods {
                let sh = &self.p.shapes[*s];
                for (i, t) in sh.params.iter().enumerate() {
                    if t != "Object" && body.iter().any(|l| l.contains(&format!(" p{i}."))) {
                        sites.push((ci, *s, i));
                    }
                }
            }
        }
        let Some(&(ci, s, i)) = sites.choose(self.rng) else {
            return;
        };
        let name = self.fresh("s");
        self.push(Ms::Str {
            lhs: name.clone(),
            value: None,
        });
        let c = self.fresh("c");
        self.push(Ms::ForName {
            lhs: c.clone(),
            name,
        });
        let o = self.fresh("o");
        self.push(Ms::NewInstance {
            lhs: o.clone(),
            class_var: c,
        });
        let a = self.fresh("a");
        let param = self.p.shapes[s].params[i].clone();
        // Cast a copy, so the objects the cast creates stay off `o`.
        let o2 = self.fresh("o");
        self.push(Ms::Copy {
            lhs: o2.clone(),
            rhs: o.clone(),
        });
        self.push(Ms::Cast {
            lhs: a.clone(),
            class: param.clone(),
            rhs: o2,
        });
        self.typed.push((a, param));
        self.raw.push(o.clone());
        let class = self.p.classes[ci].name.clone();
        let cm = self.fresh("c");
        self.push(Ms::ClassLit {
            lhs: cm.clone(),
            class: class.clone(),
        });
        let n = self.fresh("s");
        self.push(Ms::Str {
            lhs: n.clone(),
            value: Some(self.p.shapes[s].name.clone()),
        });
        let m = self.fresh("m");
        self.push(Ms::GetMember {
            lhs: m.clone(),
            class_var: cm,
            kind: "getMethod",
            name: Some(n),
        });
        let mut elems = Vec::new();
        for (j, t) in self.p.shapes[s].params.clone().iter().enumerate() {
            if j == i {
                elems.push(o.clone());
            } else {
                let fits: Vec<String> = self
                    .exact
                    .iter()
                    .filter(|(_, et)| self.p.is_sub(et, t))
                    .map(|(v, _)| v.clone())
                    .collect();
                match fits.choose(self.rng) {
                    Some(v) => elems.push(v.clone()),
                    None => elems.push(self.alloc().0),
                }
            }
        }
        let args = self.fresh("args");
        self.push(Ms::Array {
            lhs: args.clone(),
            elems,
        });
        let recv = if self.p.shapes[s].is_static {
            None
        } else {
            let v = self.fresh("o");
            self.push(Ms::New {
                lhs: v.clone(),
                class,
            });
            Some(v)
        };
        self.push(Ms::Invoke {
            lhs: None,
            cast: None,
            method: m,
            recv,
            args,
        });
    }

    fn main(&mut self) {
        for _ in 0..self.rng.gen_range(1..=2) {
            self.alloc();
        }
        if self.mode == GenMode::General && self.chance(0.25) {
            self.scene_handoff();
        }
        for _ in 0..self.rng.gen_range(2..=5) {
            match self.rng.gen_range(0..11) {
                0..=1 => self.scene_new_instance(),
                2..=5 => self.scene_invoke(),
                6..=8 => self.scene_field(),
                9 if self.mode == GenMode::General => self.scene_handoff(),
                _ => self.scene_regular(),
            }
        }
    }
}

/// Candidate strings for each use an unknown string can have.
#[derive(Debug, Clone, Default)]
pub struct StringPools {
    pub classes: Vec<String>,
    pub methods: Vec<String>,
    pub fields: Vec<String>,
    pub all: Vec<String>,
}

impl GenProgram {
    pub fn pools(&self) -> StringPools {
        let mut methods: Vec<String> = self.shapes.iter().map(|s| s.name.clone()).collect();
        methods.push("toString".into());
        methods.sort();
        methods.dedup();
        StringPools {
            classes: self.classes.iter().map(|c| c.name.clone()).collect(),
            methods,
            fields: FIELD_NAMES
                .iter()
                .chain([&STATIC_FIELD])
                .map(|s| s.to_string())
                .collect(),
            all: self.string_pool(),
        }
    }
}

/// Random runtime inputs for every unknown string, unknown array and choice point of `p`.
/// Strings mostly fit their use: class names for `forName`, member names for lookups.
pub fn random_env(rng: &mut StdRng, p: &Program, pools: &StringPools) -> ConcreteEnv {
    let mut uses = std::collections::HashMap::new();
    for sid in p.stmt_ids() {
        match &p.stmt(sid).kind {
            StmtKind::ForName { name, .. } => {
                uses.insert(*name, &pools.classes);
            }
            StmtKind::GetMember {
                name: Some(n),
                kind,
                ..
            } => {
                uses.insert(
                    *n,
                    if kind.is_method() {
                        &pools.methods
                    } else {
                        &pools.fields
                    },
                );
            }
            _ => {}
        }
    }
    let mut env = ConcreteEnv::default();
    for sid in p.stmt_ids() {
        let st = p.stmt(sid);
        match st.kind {
            StmtKind::UnknownString { lhs } => {
                let pool = match uses.get(&lhs) {
                    Some(pool) if rng.gen_bool(0.9) => pool,
                    _ => &pools.all,
                };
                env.strings
                    .insert(st.site.clone(), pool.choose(rng).unwrap().clone());
            }
            StmtKind::UnknownArray { .. } => {
                env.array_lengths
                    .insert(st.site.clone(), rng.gen_range(0..=3));
            }
            _ => {}
        }
        env.choices.insert(st.site.clone(), rng.gen_range(0..8));
    }
    env
}
