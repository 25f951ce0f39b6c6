use crate::calculus::Process;
use crate::constraint::Constraint;

use super::SourceProgram;

/// Renders a process in the concrete syntax. For parser-produced terms,
/// parsing the output yields the same term.
pub fn pretty(p: &Process) -> String {
    let mut out = String::new();
    process(p, &mut out);
    out
}

fn process(p: &Process, out: &mut String) {
    match p {
        Process::Par(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" || ");
                }
                prefix(item, out);
            }
        }
        other => prefix(other, out),
    }
}

fn prefix(p: &Process, out: &mut String) {
    match p {
        Process::Null => out.push('0'),
        Process::Tell(c) => out.push_str(&format!("tell({c})")),
        Process::Ask(c, body) => {
            out.push_str(&format!("when {c} do "));
            prefix(body, out);
        }
        Process::Par(_) => {
            out.push('(');
            process(p, out);
            out.push(')');
        }
        Process::Local { vars, init, body } => {
            local(vars, init, out);
            prefix(body, out);
        }
        Process::Next(1, body) => {
            out.push_str("next ");
            prefix(body, out);
        }
        Process::Next(k, body) => {
            out.push_str(&format!("next^{k} "));
            prefix(body, out);
        }
        Process::Rep(t, body) => {
            out.push_str(&format!("rep[{t}] "));
            prefix(body, out);
        }
        Process::Call(name, args) => {
            let args: Vec<String> = args.iter().map(i64::to_string).collect();
            out.push_str(&format!("{name}({})", args.join(", ")));
        }
        Process::Scope(scope) => {
            local(&scope.vars, &scope.store, out);
            prefix(&scope.body, out);
        }
    }
}

fn local(vars: &[String], init: &Constraint, out: &mut String) {
    out.push_str("local ");
    out.push_str(&vars.join(", "));
    if !init.is_true() {
        out.push_str(&format!(", {init}"));
    }
    out.push_str(" in ");
}

/// Renders a whole program: declarations, definitions, then the entry
/// process, one item per line.
pub fn pretty_program(prog: &SourceProgram) -> String {
    let mut out = String::new();
    for d in &prog.declarations {
        out.push_str("var ");
        out.push_str(&d.name);
        if d.persistent {
            out.push_str(" persistent");
        }
        if let Some(v) = d.init {
            out.push_str(&format!(" = {v}"));
        }
        out.push_str(";\n");
    }
    if !prog.declarations.is_empty() {
        out.push('\n');
    }
    for def in prog.definitions.iter() {
        out.push_str(&format!("def {}({}) =\n  {};\n\n", def.name, def.params.join(", "), pretty(&def.body)));
    }
    out.push_str(&pretty(&prog.entry));
    out.push('\n');
    out
}
