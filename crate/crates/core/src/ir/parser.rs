//! Line-oriented text format for programs.
//!
//! ```text
//! class B extends D implements I {
//!   field f: X;
//!   static field g: X;
//!   method m1(x: X): X { y = x; return y; }
//!   static { s = "A"; }
//! }
//! ```
//!
//! Parsing happens in two passes: a syntactic pass producing a raw AST of names,
//! and a resolution pass that builds the class tables, checks the hierarchy and
//! binds every name in a statement to a variable, class, field or method.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use super::{
    ClassId, ClassType, FieldId, FieldMember, IntrospectKind, MethodId, MethodMember, Native,
    Program, Receiver, SiteId, Statement, StmtId, StmtKind, VarId, VarInfo, BUILTIN_CLASSES,
    RESERVED_METHOD_NAMES,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unresolved type `{name}`")]
    UnresolvedType { line: usize, name: String },
    #[error("line {line}: unresolved field `{name}`")]
    UnresolvedField { line: usize, name: String },
    #[error("line {line}: unresolved method `{name}`")]
    UnresolvedMethod { line: usize, name: String },
    #[error("line {line}: undeclared variable `{name}`")]
    UndeclaredVariable { line: usize, name: String },
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("cyclic extends involving `{0}`")]
    CyclicExtends(String),
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("missing entry point `Main.main()`")]
    MissingMain,
}

fn syntax(line: usize, msg: impl Into<String>) -> IrError {
    IrError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn invalid(line: usize, msg: impl Into<String>) -> IrError {
    IrError::Invalid {
        line,
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

fn lex(text: &str) -> Result<Vec<Token>, IrError> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let mut chars = raw_line.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c == '#' {
                break;
            } else if c == '"' {
                chars.next();
                let mut value = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    value.push(c);
                }
                if !closed {
                    return Err(syntax(line, "unterminated string literal"));
                }
                out.push(Token {
                    tok: Tok::Str(value),
                    line,
                });
            } else if is_ident_start(c) {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                out.push(Token {
                    tok: Tok::Ident(raw_line[start..end].to_string()),
                    line,
                });
            } else if "{}();:,.=[]*".contains(c) {
                chars.next();
                out.push(Token {
                    tok: Tok::Punct(c),
                    line,
                });
            } else {
                return Err(syntax(line, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Raw AST

#[derive(Debug, Clone)]
enum RawArg {
    Name(String),
    Null,
}

#[derive(Debug, Clone)]
struct RawCall {
    target: String,
    name: String,
    args: Vec<RawArg>,
}

#[derive(Debug, Clone)]
enum RawExpr {
    New(String),
    Str(String),
    UnknownString,
    UnknownArray,
    ArrayLit(Vec<String>),
    Cast(String, Box<RawExpr>),
    Name(String),
    ArrayLoad(String),
    Dot(String, String),
    Call(RawCall),
}

#[derive(Debug, Clone)]
enum RawStmtKind {
    Return(String),
    Assign(String, RawExpr),
    StoreDot(String, String, String),
    StoreArr(String, String),
    Call(RawCall),
}

#[derive(Debug, Clone)]
struct RawStmt {
    line: usize,
    kind: RawStmtKind,
}

#[derive(Debug, Clone)]
struct RawMethod {
    name: String,
    params: Vec<(String, String)>,
    ret: String,
    is_static: bool,
    is_abstract: bool,
    body: Vec<RawStmt>,
    line: usize,
}

#[derive(Debug, Clone)]
struct RawField {
    name: String,
    ty: String,
    is_static: bool,
    line: usize,
}

#[derive(Debug, Clone)]
struct RawClass {
    name: String,
    extends: Option<String>,
    implements: Vec<String>,
    is_abstract: bool,
    is_interface: bool,
    fields: Vec<RawField>,
    methods: Vec<RawMethod>,
    clinit: Option<(Vec<RawStmt>, usize)>,
    line: usize,
}

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.pos + off).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), IrError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(syntax(self.line(), format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, IrError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(syntax(self.line(), "expected identifier")),
        }
    }
}

fn parse_raw(text: &str) -> Result<Vec<RawClass>, IrError> {
    let mut cur = Cursor {
        toks: lex(text)?,
        pos: 0,
    };
    let mut classes = Vec::new();
    while cur.peek().is_some() {
        classes.push(parse_class(&mut cur)?);
    }
    Ok(classes)
}

fn parse_class(cur: &mut Cursor) -> Result<RawClass, IrError> {
    let line = cur.line();
    let is_abstract = cur.eat_kw("abstract");
    let is_interface = if cur.eat_kw("interface") {
        true
    } else if cur.eat_kw("class") {
        false
    } else {
        return Err(syntax(line, "expected `class` or `interface`"));
    };
    let name = cur.ident()?;
    let mut extends = None;
    let mut implements = Vec::new();
    if cur.eat_kw("extends") {
        if is_interface {
            implements = parse_name_list(cur)?;
        } else {
            extends = Some(cur.ident()?);
        }
    }
    if cur.eat_kw("implements") {
        if is_interface {
            return Err(syntax(cur.line(), "interfaces use `extends`"));
        }
        implements = parse_name_list(cur)?;
    }
    cur.expect_punct('{')?;
    let mut class = RawClass {
        name,
        extends,
        implements,
        is_abstract: is_abstract || is_interface,
        is_interface,
        fields: Vec::new(),
        methods: Vec::new(),
        clinit: None,
        line,
    };
    while !cur.eat_punct('}') {
        if cur.peek().is_none() {
            return Err(syntax(cur.line(), "unterminated class body"));
        }
        parse_member(cur, &mut class)?;
    }
    Ok(class)
}

fn parse_name_list(cur: &mut Cursor) -> Result<Vec<String>, IrError> {
    let mut names = vec![cur.ident()?];
    while cur.eat_punct(',') {
        names.push(cur.ident()?);
    }
    Ok(names)
}

fn parse_member(cur: &mut Cursor, class: &mut RawClass) -> Result<(), IrError> {
    let line = cur.line();
    let is_static = cur.eat_kw("static");
    if is_static && cur.is_punct('{') {
        cur.next();
        let body = parse_body(cur)?;
        if class.clinit.is_some() {
            return Err(invalid(line, "duplicate static initializer"));
        }
        class.clinit = Some((body, line));
        return Ok(());
    }
    let is_abstract = cur.eat_kw("abstract");
    if cur.eat_kw("field") {
        let name = cur.ident()?;
        cur.expect_punct(':')?;
        let ty = cur.ident()?;
        cur.expect_punct(';')?;
        class.fields.push(RawField {
            name,
            ty,
            is_static,
            line,
        });
        return Ok(());
    }
    if !cur.eat_kw("method") {
        return Err(syntax(line, "expected `field`, `method` or `static {`"));
    }
    let name = cur.ident()?;
    cur.expect_punct('(')?;
    let mut params = Vec::new();
    if !cur.eat_punct(')') {
        loop {
            let p = cur.ident()?;
            cur.expect_punct(':')?;
            let t = cur.ident()?;
            params.push((p, t));
            if cur.eat_punct(')') {
                break;
            }
            cur.expect_punct(',')?;
        }
    }
    cur.expect_punct(':')?;
    let ret = cur.ident()?;
    let is_abstract = is_abstract || class.is_interface;
    let body = if cur.eat_punct(';') {
        if !is_abstract {
            return Err(syntax(line, "method without body must be abstract"));
        }
        Vec::new()
    } else {
        cur.expect_punct('{')?;
        if is_abstract {
            return Err(syntax(line, "abstract method cannot have a body"));
        }
        parse_body(cur)?
    };
    class.methods.push(RawMethod {
        name,
        params,
        ret,
        is_static,
        is_abstract,
        body,
        line,
    });
    Ok(())
}

/// Parses statements up to and including the closing `}`.
fn parse_body(cur: &mut Cursor) -> Result<Vec<RawStmt>, IrError> {
    let mut body = Vec::new();
    loop {
        if cur.eat_punct('}') {
            return Ok(body);
        }
        if cur.peek().is_none() {
            return Err(syntax(cur.line(), "unterminated method body"));
        }
        body.push(parse_stmt(cur)?);
    }
}

fn parse_stmt(cur: &mut Cursor) -> Result<RawStmt, IrError> {
    let line = cur.line();
    let kind = if cur.is_kw("return") && matches!(cur.peek_at(1), Some(Tok::Ident(_))) {
        cur.next();
        RawStmtKind::Return(cur.ident()?)
    } else {
        let first = cur.ident()?;
        if cur.eat_punct('=') {
            RawStmtKind::Assign(first, parse_expr(cur)?)
        } else if cur.eat_punct('[') {
            cur.expect_punct('*')?;
            cur.expect_punct(']')?;
            cur.expect_punct('=')?;
            RawStmtKind::StoreArr(first, cur.ident()?)
        } else if cur.eat_punct('.') {
            let member = cur.ident()?;
            if cur.eat_punct('=') {
                RawStmtKind::StoreDot(first, member, cur.ident()?)
            } else if cur.is_punct('(') {
                RawStmtKind::Call(parse_call_args(cur, first, member)?)
            } else {
                return Err(syntax(line, "expected `=` or `(` after member access"));
            }
        } else {
            return Err(syntax(line, "expected statement"));
        }
    };
    if !cur.eat_punct(';') {
        return Err(syntax(line, "expected `;`"));
    }
    Ok(RawStmt { line, kind })
}

fn parse_call_args(cur: &mut Cursor, target: String, name: String) -> Result<RawCall, IrError> {
    cur.expect_punct('(')?;
    let mut args = Vec::new();
    if !cur.eat_punct(')') {
        loop {
            let a = cur.ident()?;
            args.push(if a == "null" {
                RawArg::Null
            } else {
                RawArg::Name(a)
            });
            if cur.eat_punct(')') {
                break;
            }
            cur.expect_punct(',')?;
        }
    }
    Ok(RawCall { target, name, args })
}

fn parse_expr(cur: &mut Cursor) -> Result<RawExpr, IrError> {
    let line = cur.line();
    match cur.peek().cloned() {
        Some(Tok::Str(s)) => {
            cur.next();
            Ok(RawExpr::Str(s))
        }
        Some(Tok::Punct('(')) => {
            cur.next();
            let ty = cur.ident()?;
            cur.expect_punct(')')?;
            let inner = parse_expr(cur)?;
            match inner {
                RawExpr::Name(_) | RawExpr::Call(_) => Ok(RawExpr::Cast(ty, Box::new(inner))),
                _ => Err(syntax(
                    line,
                    "cast operand must be a variable or reflective call",
                )),
            }
        }
        Some(Tok::Ident(id)) => {
            cur.next();
            match id.as_str() {
                "new" => return Ok(RawExpr::New(cur.ident()?)),
                "unknown_string" => return Ok(RawExpr::UnknownString),
                "unknown_array" => return Ok(RawExpr::UnknownArray),
                "array" if cur.is_punct('[') => {
                    cur.next();
                    let mut elems = Vec::new();
                    if !cur.eat_punct(']') {
                        loop {
                            elems.push(cur.ident()?);
                            if cur.eat_punct(']') {
                                break;
                            }
                            cur.expect_punct(',')?;
                        }
                    }
                    return Ok(RawExpr::ArrayLit(elems));
                }
                _ => {}
            }
            if cur.eat_punct('[') {
                cur.expect_punct('*')?;
                cur.expect_punct(']')?;
                return Ok(RawExpr::ArrayLoad(id));
            }
            if cur.eat_punct('.') {
                let member = cur.ident()?;
                if cur.is_punct('(') {
                    return Ok(RawExpr::Call(parse_call_args(cur, id, member)?));
                }
                return Ok(RawExpr::Dot(id, member));
            }
            Ok(RawExpr::Name(id))
        }
        _ => Err(syntax(line, "expected expression")),
    }
}

// ---------------------------------------------------------------------------
// Resolution

struct MethodCtx {
    id: MethodId,
    qualified: String,
    vars: HashMap<String, VarId>,
}

struct Resolver {
    classes: Vec<ClassType>,
    methods: Vec<MethodMember>,
    fields: Vec<FieldMember>,
    vars: Vec<VarInfo>,
    stmts: Vec<Statement>,
    class_index: HashMap<String, ClassId>,
    ordinals: HashMap<(String, String), u32>,
    instance_field_names: HashSet<String>,
}

/// Parses and resolves a program in the textual IR format.
pub fn parse_program(text: &str) -> Result<Program, IrError> {
    let raw = parse_raw(text)?;
    let mut r = Resolver {
        classes: Vec::new(),
        methods: Vec::new(),
        fields: Vec::new(),
        vars: Vec::new(),
        stmts: Vec::new(),
        class_index: HashMap::new(),
        ordinals: HashMap::new(),
        instance_field_names: HashSet::new(),
    };
    r.register_builtins();
    r.register_classes(&raw)?;
    let ancestors = r.check_hierarchy(&raw)?;
    let bodies = r.register_members(&raw)?;
    r.check_overrides(&ancestors)?;
    for (mid, body) in bodies {
        r.resolve_body(mid, &body)?;
    }
    let main_class = r
        .class_index
        .get("Main")
        .copied()
        .ok_or(IrError::MissingMain)?;
    let main = r.classes[main_class.index()]
        .methods
        .iter()
        .copied()
        .find(|&m| r.methods[m.index()].name == "main" && r.methods[m.index()].params.is_empty())
        .ok_or(IrError::MissingMain)?;
    let site_index = r
        .stmts
        .iter()
        .enumerate()
        .map(|(i, s)| (s.site.clone(), StmtId(i as u32)))
        .collect();
    Ok(Program {
        classes: r.classes,
        methods: r.methods,
        fields: r.fields,
        vars: r.vars,
        stmts: r.stmts,
        main,
        class_index: r.class_index,
        site_index,
        ancestors,
    })
}

impl Resolver {
    fn register_builtins(&mut self) {
        for (i, name) in BUILTIN_CLASSES.iter().enumerate() {
            self.classes.push(ClassType {
                name: name.to_string(),
                superclass: (i != 0).then_some(ClassId::OBJECT),
                interfaces: Vec::new(),
                fields: Vec::new(),
                methods: Vec::new(),
                is_abstract: false,
                is_interface: false,
                clinit: None,
                line: 0,
            });
            self.class_index.insert(name.to_string(), ClassId(i as u32));
        }
        for (name, ret, native) in [
            ("toString", ClassId::STRING, Native::ToString),
            ("getClass", ClassId::CLASS, Native::GetClass),
        ] {
            let id = MethodId(self.methods.len() as u32);
            self.methods.push(MethodMember {
                name: name.to_string(),
                declaring: ClassId::OBJECT,
                params: Vec::new(),
                ret: Some(ret),
                is_static: false,
                is_abstract: false,
                native: Some(native),
                this_var: None,
                param_vars: Vec::new(),
                body: Vec::new(),
                is_clinit: false,
            });
            self.classes[0].methods.push(id);
        }
    }

    fn register_classes(&mut self, raw: &[RawClass]) -> Result<(), IrError> {
        for rc in raw {
            if self.class_index.contains_key(&rc.name) {
                return Err(IrError::DuplicateClass(rc.name.clone()));
            }
            let id = ClassId(self.classes.len() as u32);
            self.class_index.insert(rc.name.clone(), id);
            self.classes.push(ClassType {
                name: rc.name.clone(),
                superclass: None,
                interfaces: Vec::new(),
                fields: Vec::new(),
                methods: Vec::new(),
                is_abstract: rc.is_abstract,
                is_interface: rc.is_interface,
                clinit: None,
                line: rc.line,
            });
        }
        for rc in raw {
            let id = self.class_index[&rc.name];
            let superclass = match &rc.extends {
                Some(s) => {
                    let sid = self.lookup_class(s, rc.line)?;
                    if self.classes[sid.index()].is_interface {
                        return Err(invalid(
                            rc.line,
                            format!("class `{}` cannot extend interface `{s}`", rc.name),
                        ));
                    }
                    Some(sid)
                }
                None => Some(ClassId::OBJECT),
            };
            let mut interfaces = Vec::new();
            for i in &rc.implements {
                let iid = self.lookup_class(i, rc.line)?;
                if !self.classes[iid.index()].is_interface {
                    return Err(invalid(rc.line, format!("`{i}` is not an interface")));
                }
                interfaces.push(iid);
            }
            let c = &mut self.classes[id.index()];
            c.superclass = if rc.is_interface {
                Some(ClassId::OBJECT)
            } else {
                superclass
            };
            c.interfaces = interfaces;
        }
        Ok(())
    }

    fn lookup_class(&self, name: &str, line: usize) -> Result<ClassId, IrError> {
        self.class_index
            .get(name)
            .copied()
            .ok_or_else(|| IrError::UnresolvedType {
                line,
                name: name.to_string(),
            })
    }

    /// Rejects cycles and computes reflexive-transitive supertypes.
    fn check_hierarchy(&self, raw: &[RawClass]) -> Result<Vec<BTreeSet<ClassId>>, IrError> {
        let n = self.classes.len();
        // 0 = unvisited, 1 = in progress, 2 = done
        let mut state = vec![0u8; n];
        let mut ancestors: Vec<BTreeSet<ClassId>> = vec![BTreeSet::new(); n];
        fn visit(
            c: usize,
            classes: &[ClassType],
            state: &mut [u8],
            ancestors: &mut [BTreeSet<ClassId>],
        ) -> Result<(), IrError> {
            match state[c] {
                2 => return Ok(()),
                1 => return Err(IrError::CyclicExtends(classes[c].name.clone())),
                _ => {}
            }
            state[c] = 1;
            let mut acc = BTreeSet::from([ClassId(c as u32), ClassId::OBJECT]);
            let class = &classes[c];
            let parents = class
                .superclass
                .filter(|&s| s.index() != c)
                .into_iter()
                .chain(class.interfaces.iter().copied());
            for p in parents {
                visit(p.index(), classes, state, ancestors)?;
                acc.extend(ancestors[p.index()].iter().copied());
            }
            ancestors[c] = acc;
            state[c] = 2;
            Ok(())
        }
        for c in 0..n {
            visit(c, &self.classes, &mut state, &mut ancestors)?;
        }
        let _ = raw;
        Ok(ancestors)
    }

    fn register_members(
        &mut self,
        raw: &[RawClass],
    ) -> Result<Vec<(MethodId, Vec<RawStmt>)>, IrError> {
        let mut bodies = Vec::new();
        for rc in raw {
            let cid = self.class_index[&rc.name];
            let mut field_names = HashSet::new();
            for f in &rc.fields {
                if !field_names.insert(f.name.as_str()) {
                    return Err(invalid(
                        f.line,
                        format!("duplicate field `{}.{}`", rc.name, f.name),
                    ));
                }
                if rc.is_interface {
                    return Err(invalid(f.line, "interfaces cannot declare fields"));
                }
                let ty = self.lookup_class(&f.ty, f.line)?;
                let fid = FieldId(self.fields.len() as u32);
                self.fields.push(FieldMember {
                    name: f.name.clone(),
                    declaring: cid,
                    ty,
                    is_static: f.is_static,
                });
                if !f.is_static {
                    self.instance_field_names.insert(f.name.clone());
                }
                self.classes[cid.index()].fields.push(fid);
            }
            let mut sigs: HashSet<(&str, usize)> = HashSet::new();
            for m in &rc.methods {
                if RESERVED_METHOD_NAMES.contains(&m.name.as_str())
                    || m.name == "toString" && !m.params.is_empty()
                {
                    return Err(invalid(
                        m.line,
                        format!("method name `{}` is reserved", m.name),
                    ));
                }
                if !sigs.insert((m.name.as_str(), m.params.len())) {
                    return Err(invalid(
                        m.line,
                        format!(
                            "duplicate or ambiguous overload `{}.{}` with {} parameters",
                            rc.name,
                            m.name,
                            m.params.len()
                        ),
                    ));
                }
                let params = m
                    .params
                    .iter()
                    .map(|(_, t)| self.lookup_class(t, m.line))
                    .collect::<Result<Vec<_>, _>>()?;
                let ret = if m.ret == "void" {
                    None
                } else {
                    Some(self.lookup_class(&m.ret, m.line)?)
                };
                let mid =
                    self.new_method(cid, &m.name, params, ret, m.is_static, m.is_abstract, false);
                let mut names = HashSet::new();
                for (p, _) in &m.params {
                    if p == "this" || p == "null" || !names.insert(p.as_str()) {
                        return Err(invalid(m.line, format!("invalid parameter name `{p}`")));
                    }
                }
                let param_vars: Vec<VarId> =
                    m.params.iter().map(|(p, _)| self.new_var(p, mid)).collect();
                self.methods[mid.index()].param_vars = param_vars;
                if !m.is_static {
                    let this = self.new_var("this", mid);
                    self.methods[mid.index()].this_var = Some(this);
                }
                self.classes[cid.index()].methods.push(mid);
                bodies.push((mid, m.body.clone()));
            }
            if let Some((body, _)) = &rc.clinit {
                let mid = self.new_method(cid, "<clinit>", Vec::new(), None, true, false, true);
                self.classes[cid.index()].clinit = Some(mid);
                bodies.push((mid, body.clone()));
            }
        }
        Ok(bodies)
    }

    #[allow(clippy::too_many_arguments)]
    fn new_method(
        &mut self,
        declaring: ClassId,
        name: &str,
        params: Vec<ClassId>,
        ret: Option<ClassId>,
        is_static: bool,
        is_abstract: bool,
        is_clinit: bool,
    ) -> MethodId {
        let id = MethodId(self.methods.len() as u32);
        self.methods.push(MethodMember {
            name: name.to_string(),
            declaring,
            params,
            ret,
            is_static,
            is_abstract,
            native: None,
            this_var: None,
            param_vars: Vec::new(),
            body: Vec::new(),
            is_clinit,
        });
        id
    }

    fn new_var(&mut self, name: &str, method: MethodId) -> VarId {
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo {
            name: name.to_string(),
            method,
        });
        id
    }

    /// A method with the same name and arity as one in a supertype must override it exactly.
    fn check_overrides(&self, ancestors: &[BTreeSet<ClassId>]) -> Result<(), IrError> {
        for (ci, class) in self.classes.iter().enumerate() {
            for &m in &class.methods {
                let mm = &self.methods[m.index()];
                if mm.is_clinit {
                    continue;
                }
                for &anc in &ancestors[ci] {
                    if anc.index() == ci {
                        continue;
                    }
                    for &other in &self.classes[anc.index()].methods {
                        let om = &self.methods[other.index()];
                        if om.name != mm.name || om.params.len() != mm.params.len() || om.is_clinit
                        {
                            continue;
                        }
                        if om.params != mm.params
                            || om.ret != mm.ret
                            || om.is_static != mm.is_static
                        {
                            return Err(invalid(
                                class.line,
                                format!(
                                    "`{}.{}` conflicts with inherited `{}.{}`",
                                    class.name,
                                    mm.name,
                                    self.classes[anc.index()].name,
                                    om.name
                                ),
                            ));
                        }
                        if om.native.is_some() {
                            return Err(invalid(
                                class.line,
                                format!(
                                    "`{}.{}` cannot override a built-in method",
                                    class.name, mm.name
                                ),
                            ));
                        }
                    }
                }
            }
            let mut seen = HashSet::new();
            let chain = std::iter::successors(Some(ClassId(ci as u32)), |c| {
                self.classes[c.index()].superclass
            });
            for c in chain {
                for &f in &self.classes[c.index()].fields {
                    if !seen.insert(self.fields[f.index()].name.as_str()) {
                        return Err(invalid(
                            class.line,
                            format!(
                                "field `{}` of `{}` shadows an inherited field",
                                self.fields[f.index()].name,
                                class.name
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn resolve_body(&mut self, mid: MethodId, body: &[RawStmt]) -> Result<(), IrError> {
        let m = &self.methods[mid.index()];
        let qualified = format!("{}.{}", self.classes[m.declaring.index()].name, m.name);
        let mut vars: HashMap<String, VarId> = HashMap::new();
        for &v in m.param_vars.iter().chain(m.this_var.iter()) {
            vars.insert(self.vars[v.index()].name.clone(), v);
        }
        for s in body {
            if let RawStmtKind::Assign(lhs, _) = &s.kind {
                if lhs == "this" || lhs == "null" {
                    return Err(invalid(s.line, format!("cannot assign to `{lhs}`")));
                }
                if !vars.contains_key(lhs) {
                    let v = self.new_var(lhs, mid);
                    vars.insert(lhs.clone(), v);
                }
            }
        }
        let ctx = MethodCtx {
            id: mid,
            qualified,
            vars,
        };
        let mut ids = Vec::new();
        for s in body {
            let (callee, kind) = self.resolve_stmt(&ctx, s)?;
            let key = (ctx.qualified.clone(), callee.clone());
            let ord = self.ordinals.entry(key).or_insert(0);
            let site = SiteId {
                method: ctx.qualified.clone(),
                callee,
                ordinal: *ord,
            };
            *ord += 1;
            ids.push(StmtId(self.stmts.len() as u32));
            self.stmts.push(Statement {
                site,
                method: mid,
                line: s.line,
                kind,
            });
        }
        self.methods[mid.index()].body = ids;
        Ok(())
    }

    fn var(&self, ctx: &MethodCtx, name: &str, line: usize) -> Result<VarId, IrError> {
        ctx.vars
            .get(name)
            .copied()
            .ok_or_else(|| IrError::UndeclaredVariable {
                line,
                name: name.to_string(),
            })
    }

    fn static_field(&self, class: ClassId, name: &str, line: usize) -> Result<FieldId, IrError> {
        let chain = std::iter::successors(Some(class), |c| self.classes[c.index()].superclass);
        for c in chain {
            for &f in &self.classes[c.index()].fields {
                let ff = &self.fields[f.index()];
                if ff.name == name {
                    if !ff.is_static {
                        return Err(invalid(line, format!("field `{name}` is not static")));
                    }
                    return Ok(f);
                }
            }
        }
        Err(IrError::UnresolvedField {
            line,
            name: format!("{}.{name}", self.classes[class.index()].name),
        })
    }

    fn check_instance_field(&self, name: &str, line: usize) -> Result<(), IrError> {
        if self.instance_field_names.contains(name) {
            Ok(())
        } else {
            Err(IrError::UnresolvedField {
                line,
                name: name.to_string(),
            })
        }
    }

    fn args(&self, ctx: &MethodCtx, args: &[RawArg], line: usize) -> Result<Vec<VarId>, IrError> {
        args.iter()
            .map(|a| match a {
                RawArg::Name(n) => self.var(ctx, n, line),
                RawArg::Null => Err(invalid(
                    line,
                    "`null` is only allowed as a reflective receiver",
                )),
            })
            .collect()
    }

    fn receiver(&self, ctx: &MethodCtx, arg: &RawArg, line: usize) -> Result<Receiver, IrError> {
        match arg {
            RawArg::Null => Ok(Receiver::Null),
            RawArg::Name(n) => Ok(Receiver::Var(self.var(ctx, n, line)?)),
        }
    }

    fn resolve_stmt(&self, ctx: &MethodCtx, s: &RawStmt) -> Result<(String, StmtKind), IrError> {
        let line = s.line;
        match &s.kind {
            RawStmtKind::Return(v) => {
                if self.methods[ctx.id.index()].ret.is_none() {
                    return Err(invalid(line, "`return` in a void method"));
                }
                Ok((
                    "return".into(),
                    StmtKind::Return {
                        value: self.var(ctx, v, line)?,
                    },
                ))
            }
            RawStmtKind::StoreArr(a, v) => Ok((
                "astore".into(),
                StmtKind::ArrayStore {
                    array: self.var(ctx, a, line)?,
                    rhs: self.var(ctx, v, line)?,
                },
            )),
            RawStmtKind::StoreDot(base, f, v) => {
                let rhs = self.var(ctx, v, line)?;
                if let Some(&b) = ctx.vars.get(base) {
                    self.check_instance_field(f, line)?;
                    Ok((
                        "store".into(),
                        StmtKind::Store {
                            base: b,
                            field: f.clone(),
                            rhs,
                        },
                    ))
                } else {
                    let class = self.lookup_class(base, line)?;
                    let field = self.static_field(class, f, line)?;
                    Ok(("putstatic".into(), StmtKind::StaticStore { field, rhs }))
                }
            }
            RawStmtKind::Call(call) => self.resolve_call(ctx, None, None, call, line),
            RawStmtKind::Assign(lhs, expr) => {
                let lhs = self.var(ctx, lhs, line)?;
                self.resolve_assign(ctx, lhs, expr, line)
            }
        }
    }

    fn resolve_assign(
        &self,
        ctx: &MethodCtx,
        lhs: VarId,
        expr: &RawExpr,
        line: usize,
    ) -> Result<(String, StmtKind), IrError> {
        Ok(match expr {
            RawExpr::New(t) => {
                let class = self.lookup_class(t, line)?;
                (format!("{t}.<init>"), StmtKind::Alloc { lhs, class })
            }
            RawExpr::Str(value) => (
                "const".into(),
                StmtKind::StringConst {
                    lhs,
                    value: value.clone(),
                },
            ),
            RawExpr::UnknownString => ("unknown_string".into(), StmtKind::UnknownString { lhs }),
            RawExpr::UnknownArray => ("unknown_array".into(), StmtKind::UnknownArray { lhs }),
            RawExpr::ArrayLit(elems) => {
                let elems = elems
                    .iter()
                    .map(|e| self.var(ctx, e, line))
                    .collect::<Result<Vec<_>, _>>()?;
                ("array".into(), StmtKind::ArrayLit { lhs, elems })
            }
            RawExpr::Name(n) => (
                "copy".into(),
                StmtKind::Copy {
                    lhs,
                    rhs: self.var(ctx, n, line)?,
                },
            ),
            RawExpr::ArrayLoad(a) => (
                "aload".into(),
                StmtKind::ArrayLoad {
                    lhs,
                    array: self.var(ctx, a, line)?,
                },
            ),
            RawExpr::Dot(base, member) => {
                if let Some(&b) = ctx.vars.get(base) {
                    self.check_instance_field(member, line)?;
                    (
                        "load".into(),
                        StmtKind::Load {
                            lhs,
                            base: b,
                            field: member.clone(),
                        },
                    )
                } else {
                    let class = self.lookup_class(base, line)?;
                    if member == "class" {
                        ("class".into(), StmtKind::ClassLit { lhs, class })
                    } else {
                        let field = self.static_field(class, member, line)?;
                        ("getstatic".into(), StmtKind::StaticLoad { lhs, field })
                    }
                }
            }
            RawExpr::Cast(t, inner) => {
                let class = self.lookup_class(t, line)?;
                match inner.as_ref() {
                    RawExpr::Name(n) => (
                        "cast".into(),
                        StmtKind::Cast {
                            lhs,
                            class,
                            rhs: self.var(ctx, n, line)?,
                        },
                    ),
                    RawExpr::Call(call) if matches!(call.name.as_str(), "invoke" | "get") => {
                        self.resolve_call(ctx, Some(lhs), Some(class), call, line)?
                    }
                    _ => {
                        return Err(syntax(
                            line,
                            "only variables and invoke()/get() results can be cast",
                        ))
                    }
                }
            }
            RawExpr::Call(call) => self.resolve_call(ctx, Some(lhs), None, call, line)?,
        })
    }

    fn resolve_call(
        &self,
        ctx: &MethodCtx,
        lhs: Option<VarId>,
        cast: Option<ClassId>,
        call: &RawCall,
        line: usize,
    ) -> Result<(String, StmtKind), IrError> {
        let RawCall { target, name, args } = call;
        let need_lhs = |what: &str| {
            lhs.ok_or_else(|| invalid(line, format!("result of `{what}` must be assigned")))
        };
        let arity = |n: usize| -> Result<(), IrError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(line, format!("`{name}` expects {n} argument(s)")))
            }
        };
        let target_is_var = ctx.vars.contains_key(target);
        if !target_is_var {
            if (target == "Class" && name == "forName")
                || (target == "ClassLoader" && name == "loadClass")
            {
                arity(1)?;
                let lhs = need_lhs(name)?;
                let arg = self.args(ctx, args, line)?[0];
                return Ok((
                    format!("{target}.{name}"),
                    StmtKind::ForName {
                        lhs,
                        name: arg,
                        via_loader: target == "ClassLoader",
                    },
                ));
            }
            let class = self.lookup_class(target, line)?;
            let method = std::iter::successors(Some(class), |c| self.classes[c.index()].superclass)
                .find_map(|c| {
                    self.classes[c.index()].methods.iter().copied().find(|&m| {
                        let mm = &self.methods[m.index()];
                        mm.is_static
                            && !mm.is_clinit
                            && mm.name == *name
                            && mm.params.len() == args.len()
                    })
                })
                .ok_or_else(|| IrError::UnresolvedMethod {
                    line,
                    name: format!("{target}.{name}"),
                })?;
            let args = self.args(ctx, args, line)?;
            return Ok((
                format!("{target}.{name}"),
                StmtKind::StaticCall { lhs, method, args },
            ));
        }
        let recv_var = ctx.vars[target];
        if cast.is_some() && !matches!(name.as_str(), "invoke" | "get") {
            return Err(syntax(line, "only invoke()/get() results can be cast"));
        }
        let cast = cast.unwrap_or(ClassId::OBJECT);
        Ok(match name.as_str() {
            "getClass" => {
                arity(0)?;
                (
                    "Object.getClass".into(),
                    StmtKind::GetClass {
                        lhs: need_lhs(name)?,
                        recv: recv_var,
                    },
                )
            }
            "newInstance" => {
                arity(0)?;
                (
                    "Class.newInstance".into(),
                    StmtKind::NewInstance {
                        lhs: need_lhs(name)?,
                        class_var: recv_var,
                    },
                )
            }
            "invoke" => {
                arity(2)?;
                let recv = self.receiver(ctx, &args[0], line)?;
                let args_var = match &args[1] {
                    RawArg::Name(n) => self.var(ctx, n, line)?,
                    RawArg::Null => return Err(invalid(line, "invoke() needs an argument array")),
                };
                (
                    "Method.invoke".into(),
                    StmtKind::Invoke {
                        lhs,
                        cast,
                        method_var: recv_var,
                        recv,
                        args: args_var,
                    },
                )
            }
            "get" => {
                arity(1)?;
                let recv = self.receiver(ctx, &args[0], line)?;
                (
                    "Field.get".into(),
                    StmtKind::FieldGet {
                        lhs,
                        cast,
                        field_var: recv_var,
                        recv,
                    },
                )
            }
            "set" => {
                arity(2)?;
                if lhs.is_some() {
                    return Err(invalid(line, "set() has no result"));
                }
                let recv = self.receiver(ctx, &args[0], line)?;
                let value = match &args[1] {
                    RawArg::Name(n) => self.var(ctx, n, line)?,
                    RawArg::Null => return Err(invalid(line, "set() needs a value variable")),
                };
                (
                    "Field.set".into(),
                    StmtKind::FieldSet {
                        field_var: recv_var,
                        recv,
                        value,
                    },
                )
            }
            other => {
                if let Some(kind) = IntrospectKind::from_method_name(other) {
                    let lhs = need_lhs(other)?;
                    let name_var = if kind.is_plural() {
                        arity(0)?;
                        None
                    } else {
                        arity(1)?;
                        Some(self.args(ctx, args, line)?[0])
                    };
                    (
                        format!("Class.{other}"),
                        StmtKind::GetMember {
                            lhs,
                            class_var: recv_var,
                            kind,
                            name: name_var,
                        },
                    )
                } else if RESERVED_METHOD_NAMES.contains(&other) {
                    return Err(invalid(
                        line,
                        format!("misplaced reflective call `{other}`"),
                    ));
                } else {
                    let args = self.args(ctx, args, line)?;
                    let exists = other == "toString" && args.is_empty()
                        || self.methods.iter().any(|m| {
                            m.name == other && m.params.len() == args.len() && !m.is_static
                        });
                    if !exists {
                        return Err(IrError::UnresolvedMethod {
                            line,
                            name: other.to_string(),
                        });
                    }
                    (
                        other.to_string(),
                        StmtKind::VirtualCall {
                            lhs,
                            recv: recv_var,
                            name: other.to_string(),
                            args,
                        },
                    )
                }
            }
        })
    }
}
