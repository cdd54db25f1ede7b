//! Hand-built programs shared by the scenario and acceptance tests.

/// An unknown-class `newInstance` result reaching two casts and an `invoke`
/// receiver. `m1` is declared in `D`, `B` is `D`'s only subtype, `A` stands alone.
pub const LAZY_HEAP: &str = r#"
class A { }
class D { field f: Object; method m1(): void { } }
class B extends D { }
class Main {
  static method main(): void {
    s = unknown_string;
    c1 = Class.forName(s);
    v = c1.newInstance();
    v1 = v;
    k = v1.getClass();
    t = v1.toString();
    v2 = v;
    a = (A) v2;
    v3 = v;
    b = (B) v3;
    v4 = v;
    c2 = D.class;
    n = "m1";
    m1 = c2.getMethod(n);
    args = array [];
    m1.invoke(v4, args);
  }
}
"#;

const MOT_HEAD: &str = r#"
class A { method foo(x: B, y: C): A { return x; } }
class B extends A { }
class C extends A { method bar(x: B, y: C): A { return y; } method foo(x: B, y: C): A { return y; } }
class E { method foo(x: A, y: A): A { return x; } method baz(x: B): void { } }
class Main {
  static method main(): void {
    s1 = unknown_string;
    c1 = Class.forName(s1);
    v = c1.newInstance();
"#;

const MOT_TAIL: &str = r#"
    m = c.getMethod(s3);
    b = new B;
    cc = new C;
    args = array [b, cc];
    a = (A) v;
    r = m.invoke(v, args);
  }
}
"#;

/// The invoke-site split: which of the class and method names reaching the
/// `getMethod` site are known.
pub fn mot(class_known: bool, name_known: bool) -> String {
    let class = if class_known {
        "    s2 = \"C\";\n"
    } else {
        "    s2 = unknown_string;\n"
    };
    let name = if name_known {
        "    s3 = \"foo\";\n"
    } else {
        "    s3 = unknown_string;\n"
    };
    format!("{MOT_HEAD}{class}    c = Class.forName(s2);\n{name}{MOT_TAIL}")
}

/// An unknown class, a constant method name and an exactly-known argument array.
pub const HANDLE: &str = r#"
class Event { }
class Cmd extends Event { }
class Handler { method handle(e: Event): Object { r = new Event; return r; } }
class Other { method handle(e: Object): Object { return e; } }
class Deep extends Other { }
class Wrong { method handle(e: Handler): Object { return e; } }
class Unrelated { method handle(): Object { r = new Event; return r; } }
class Main {
  static method main(): void {
    hd = unknown_string;
    c = Class.forName(hd);
    h = c.newInstance();
    n = "handle";
    m = c.getMethod(n);
    e = new Cmd;
    args = array [e];
    r = m.invoke(h, args);
  }
}
"#;

/// An unknown `forName` feeding `getMethods` and `invoke` on its instance.
pub const UNKNOWN_LOADER: &str = r#"
class Library { method run(x: Object): Object { return x; } }
class Math2 { method run(x: Object): Object { return x; } method abs(x: Object): Object { return x; } }
class Noise { method run(x: Object): Object { return x; } }
class Main {
  static method main(): void {
    s = unknown_string;
    c = Class.forName(s);
    o = c.newInstance();
    ms = c.getMethods();
    m = ms[*];
    x = new Object;
    args = array [x];
    r = m.invoke(o, args);
  }
}
"#;

/// A wide cast on an unknown-class object: L-Cast is the only thing that
/// makes the targets visible.
pub const CAST_ONLY: &str = r#"
class Shape { method area(): Object { r = new Object; return r; } }
class Sq extends Shape { method area(): Object { r = new Sq; return r; } }
class Main {
  static method main(): void {
    s = unknown_string;
    c = Class.forName(s);
    o = c.newInstance();
    sh = (Shape) o;
    r = sh.area();
  }
}
"#;
