//! Pretty printer producing text that [`parse_program`](super::parse_program) accepts.

use std::fmt;

use super::{ClassId, MethodId, Program, Receiver, StmtId, StmtKind, VarId, BUILTIN_CLASSES};

impl Program {
    fn vname(&self, v: VarId) -> &str {
        &self.var(v).name
    }

    fn recv_name(&self, r: Receiver) -> &str {
        match r {
            Receiver::Var(v) => self.vname(v),
            Receiver::Null => "null",
        }
    }

    fn ret_name(&self, r: Option<ClassId>) -> &str {
        r.map_or("void", |c| self.class_name(c))
    }

    /// One statement in source syntax, without the trailing `;`.
    pub fn render_stmt(&self, id: StmtId) -> String {
        let v = |x: VarId| self.vname(x);
        let list = |xs: &[VarId]| {
            xs.iter()
                .map(|&x| self.vname(x))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let assign = |lhs: Option<VarId>, rhs: String| match lhs {
            Some(l) => format!("{} = {rhs}", v(l)),
            None => rhs,
        };
        let cast_prefix = |c: ClassId| {
            if c == ClassId::OBJECT {
                String::new()
            } else {
                format!("({}) ", self.class_name(c))
            }
        };
        match &self.stmt(id).kind {
            StmtKind::Alloc { lhs, class } => {
                format!("{} = new {}", v(*lhs), self.class_name(*class))
            }
            StmtKind::Copy { lhs, rhs } => format!("{} = {}", v(*lhs), v(*rhs)),
            StmtKind::Load { lhs, base, field } => format!("{} = {}.{field}", v(*lhs), v(*base)),
            StmtKind::Store { base, field, rhs } => format!("{}.{field} = {}", v(*base), v(*rhs)),
            StmtKind::StaticLoad { lhs, field } => {
                format!("{} = {}", v(*lhs), self.field_descriptor(*field))
            }
            StmtKind::StaticStore { field, rhs } => {
                format!("{} = {}", self.field_descriptor(*field), v(*rhs))
            }
            StmtKind::VirtualCall {
                lhs,
                recv,
                name,
                args,
            } => assign(*lhs, format!("{}.{name}({})", v(*recv), list(args))),
            StmtKind::StaticCall { lhs, method, args } => assign(
                *lhs,
                format!("{}({})", self.method_qualified_name(*method), list(args)),
            ),
            StmtKind::StringConst { lhs, value } => format!("{} = \"{value}\"", v(*lhs)),
            StmtKind::UnknownString { lhs } => format!("{} = unknown_string", v(*lhs)),
            StmtKind::Cast { lhs, class, rhs } => {
                format!("{} = ({}) {}", v(*lhs), self.class_name(*class), v(*rhs))
            }
            StmtKind::ArrayLit { lhs, elems } => format!("{} = array [{}]", v(*lhs), list(elems)),
            StmtKind::UnknownArray { lhs } => format!("{} = unknown_array", v(*lhs)),
            StmtKind::ArrayLoad { lhs, array } => format!("{} = {}[*]", v(*lhs), v(*array)),
            StmtKind::ArrayStore { array, rhs } => format!("{}[*] = {}", v(*array), v(*rhs)),
            StmtKind::ForName {
                lhs,
                name,
                via_loader,
            } => {
                let callee = if *via_loader {
                    "ClassLoader.loadClass"
                } else {
                    "Class.forName"
                };
                format!("{} = {callee}({})", v(*lhs), v(*name))
            }
            StmtKind::GetClass { lhs, recv } => format!("{} = {}.getClass()", v(*lhs), v(*recv)),
            StmtKind::ClassLit { lhs, class } => {
                format!("{} = {}.class", v(*lhs), self.class_name(*class))
            }
            StmtKind::GetMember {
                lhs,
                class_var,
                kind,
                name,
            } => format!(
                "{} = {}.{}({})",
                v(*lhs),
                v(*class_var),
                kind.method_name(),
                name.map_or("", |n| self.vname(n))
            ),
            StmtKind::NewInstance { lhs, class_var } => {
                format!("{} = {}.newInstance()", v(*lhs), v(*class_var))
            }
            StmtKind::Invoke {
                lhs,
                cast,
                method_var,
                recv,
                args,
            } => assign(
                *lhs,
                format!(
                    "{}{}.invoke({}, {})",
                    cast_prefix(*cast),
                    v(*method_var),
                    self.recv_name(*recv),
                    v(*args)
                ),
            ),
            StmtKind::FieldGet {
                lhs,
                cast,
                field_var,
                recv,
            } => assign(
                *lhs,
                format!(
                    "{}{}.get({})",
                    cast_prefix(*cast),
                    v(*field_var),
                    self.recv_name(*recv)
                ),
            ),
            StmtKind::FieldSet {
                field_var,
                recv,
                value,
            } => {
                format!(
                    "{}.set({}, {})",
                    v(*field_var),
                    self.recv_name(*recv),
                    v(*value)
                )
            }
            StmtKind::Return { value } => format!("return {}", v(*value)),
        }
    }

    fn fmt_body(&self, f: &mut fmt::Formatter<'_>, m: MethodId) -> fmt::Result {
        for &s in &self.method(m).body {
            writeln!(f, "    {};", self.render_stmt(s))?;
        }
        Ok(())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.classes.iter().skip(BUILTIN_CLASSES.len()) {
            if c.is_interface {
                write!(f, "interface {}", c.name)?;
                if !c.interfaces.is_empty() {
                    let names: Vec<&str> =
                        c.interfaces.iter().map(|&x| self.class_name(x)).collect();
                    write!(f, " extends {}", names.join(", "))?;
                }
            } else {
                if c.is_abstract {
                    write!(f, "abstract ")?;
                }
                write!(f, "class {}", c.name)?;
                if let Some(s) = c.superclass.filter(|&s| s != ClassId::OBJECT) {
                    write!(f, " extends {}", self.class_name(s))?;
                }
                if !c.interfaces.is_empty() {
                    let names: Vec<&str> =
                        c.interfaces.iter().map(|&x| self.class_name(x)).collect();
                    write!(f, " implements {}", names.join(", "))?;
                }
            }
            writeln!(f, " {{")?;
            for &fid in &c.fields {
                let fm = self.field(fid);
                let st = if fm.is_static { "static " } else { "" };
                writeln!(f, "  {st}field {}: {};", fm.name, self.class_name(fm.ty))?;
            }
            for &mid in &c.methods {
                let m = self.method(mid);
                let params: Vec<String> = m
                    .param_vars
                    .iter()
                    .zip(&m.params)
                    .map(|(&v, &t)| format!("{}: {}", self.vname(v), self.class_name(t)))
                    .collect();
                let st = if m.is_static { "static " } else { "" };
                let ab = if m.is_abstract && !c.is_interface {
                    "abstract "
                } else {
                    ""
                };
                write!(
                    f,
                    "  {st}{ab}method {}({}): {}",
                    m.name,
                    params.join(", "),
                    self.ret_name(m.ret)
                )?;
                if m.is_abstract {
                    writeln!(f, ";")?;
                } else {
                    writeln!(f, " {{")?;
                    self.fmt_body(f, mid)?;
                    writeln!(f, "  }}")?;
                }
            }
            if let Some(clinit) = c.clinit {
                writeln!(f, "  static {{")?;
                self.fmt_body(f, clinit)?;
                writeln!(f, "  }}")?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}
