use super::{Inequality, Term};

fn level(t: &Term) -> u8 {
    match t {
        Term::Imp(..) | Term::Coimp(..) => 0,
        Term::Join(..) => 1,
        Term::Meet(..) => 2,
        _ => 3,
    }
}

fn go(t: &Term, min: u8, out: &mut String) {
    let paren = level(t) < min;
    if paren {
        out.push('(');
    }
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Nom(v) => {
            out.push('#');
            out.push_str(v);
        }
        Term::Conom(v) => {
            out.push('@');
            out.push_str(v);
        }
        Term::Top => out.push_str("top"),
        Term::Bot => out.push_str("bot"),
        Term::Meet(a, b) => infix(a, " & ", b, 2, 3, out),
        Term::Join(a, b) => infix(a, " | ", b, 1, 2, out),
        Term::Imp(a, b) => infix(a, " -> ", b, 1, 1, out),
        Term::Coimp(a, b) => infix(a, " -. ", b, 1, 1, out),
        Term::App(f, args) => {
            out.push_str(f);
            args_list(args, out);
        }
        Term::Res(f, i, args) => {
            out.push_str(&format!("res({},{})", f, i));
            args_list(args, out);
        }
        Term::Dot(op, a) => {
            out.push('.');
            out.push_str(op.name());
            args_list(std::slice::from_ref(a), out);
        }
        Term::Role(r, a) => {
            out.push_str(r.name());
            args_list(std::slice::from_ref(a), out);
        }
        Term::Def(r, a) => {
            out.push_str(&format!("{}[{}]", r.def_name(), r.name()));
            args_list(std::slice::from_ref(a), out);
        }
        Term::Adj(r, a) => {
            out.push_str(&format!("{}[{}]", r.adj_name(), r.name()));
            args_list(std::slice::from_ref(a), out);
        }
    }
    if paren {
        out.push(')');
    }
}

fn infix(a: &Term, op: &str, b: &Term, la: u8, lb: u8, out: &mut String) {
    go(a, la, out);
    out.push_str(op);
    go(b, lb, out);
}

fn args_list(args: &[Term], out: &mut String) {
    out.push('(');
    for (k, a) in args.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        go(a, 0, out);
    }
    out.push(')');
}

pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    go(t, 0, &mut s);
    s
}

pub fn print_inequality(i: &Inequality) -> String {
    format!("{} <= {}", print_term(&i.lhs), print_term(&i.rhs))
}
